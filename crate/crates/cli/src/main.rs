use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entropy_cg::verify::{Suite, VerifyOptions};
use entropy_cg_cli::commands::{cmd_eoc, cmd_run, cmd_verify};
use entropy_cg_cli::config::{ConfigMap, RunConfig};
use entropy_cg_cli::{emit, thread_count, CliError, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "entropy-cg",
    version,
    about = "Entropy-stable, bound-preserving continuous Galerkin solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots, diagnostics and a manifest.
    Run(ConfigArgs),
    /// Grid convergence study over a list of node counts.
    Eoc(ConfigArgs),
    /// Run property suites.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random samples per configuration.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// Every flag mirrors a key of the configuration file and overrides it.
#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value configuration file, e.g. a previous run's manifest.txt.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark: adv1d_cos, adv1d_threebody (threebody), burgers1d (burgers),
    /// solid_body_rotation (sbr), buckley_leverett (bl), kpp.
    #[arg(long)]
    preset: Option<String>,
    /// Scheme such as CG, HO-SUPG, HO-VMS-EV, HO-VMS-EV-BP, HO-VMS-EV-FL or LO.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    /// Elements per direction.
    #[arg(long, conflicts_with = "dofs")]
    cells: Option<String>,
    /// Total number of nodes.
    #[arg(long)]
    dofs: Option<String>,
    /// Comma-separated total node counts for `eoc`.
    #[arg(long, alias = "dofs_list")]
    dofs_list: Option<String>,
    /// Scaling of the SUPG and VMS parameters.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    /// ssprk3 or rk76.
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long, alias = "final_time")]
    final_time: Option<String>,
    /// Output directory; one run per directory.
    #[arg(long)]
    output: Option<String>,
    /// Snapshot and diagnostics cadence in steps.
    #[arg(long)]
    every: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// bernstein or lagrange.
    #[arg(long)]
    basis: Option<String>,
    /// lumped_average or l2_projection.
    #[arg(long)]
    recovery: Option<String>,
    /// Upper bound on the entropy-viscosity coefficient.
    #[arg(long, alias = "ev_cap")]
    ev_cap: Option<String>,
}

impl ConfigArgs {
    /// `integrator` applies when neither the file nor the flags name one.
    fn resolve(&self, integrator: &str) -> Result<RunConfig, CliError> {
        let mut m = match &self.config {
            Some(p) => ConfigMap::read(p)?,
            None => ConfigMap::default(),
        };
        if m.get("integrator").is_none() {
            m.set("integrator", integrator)?;
        }
        let flags = [
            ("preset", &self.preset),
            ("scheme", &self.scheme),
            ("degree", &self.degree),
            ("cells", &self.cells),
            ("dofs", &self.dofs),
            ("dofs_list", &self.dofs_list),
            ("omega", &self.omega),
            ("cfl", &self.cfl),
            ("integrator", &self.integrator),
            ("final_time", &self.final_time),
            ("output", &self.output),
            ("every", &self.every),
            ("seed", &self.seed),
            ("basis", &self.basis),
            ("recovery", &self.recovery),
            ("ev_cap", &self.ev_cap),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                m.set(k, v)?;
            }
        }
        RunConfig::from_map(&m)
    }
}

fn init_threads() -> Result<(), CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let env = std::env::var(THREADS_ENV).ok();
    let n = thread_count(env.as_deref(), available)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve("ssprk3")?;
            let res = cmd_run(&cfg)?;
            let s = &res.summary;
            emit(&format!(
                "{} {} p={} cells={} t={:.6} steps={} range=[{:.6e}, {:.6e}]{}\nwrote {}\n",
                cfg.preset,
                cfg.scheme,
                cfg.degree,
                cfg.cells,
                res.time,
                s.steps,
                s.min,
                s.max,
                res.l1_error
                    .map_or(String::new(), |e| format!(" l1={e:.4e}")),
                cfg.output.display()
            ));
        }
        Command::Eoc(args) => {
            // convergence studies keep temporal errors below the spatial ones
            let cfg = args.resolve("rk76")?;
            cmd_eoc(&cfg)?;
        }
        Command::Verify {
            suite,
            seed,
            samples,
        } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                suite
                    .split(',')
                    .map(|s| s.parse::<Suite>())
                    .collect::<Result<_, _>>()
                    .map_err(CliError::from)?
            };
            cmd_verify(&suites, &VerifyOptions { seed, samples })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the configuration exit code
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
