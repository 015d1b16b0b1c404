//! Subcommand implementations.

use entropy_cg::solver::{
    eoc_study, run_observed, Discretization, EocRow, RunOptions, SimulationResult,
};
use entropy_cg::verify::{run_suite, Suite, SuiteReport, VerifyOptions};

use crate::config::{per_direction, RunConfig};
use crate::error::CliError;
use crate::output::{
    diagnostics_csv, eoc_csv, eoc_table_text, grid_snapshot, summary_text, OutputDir, MANIFEST_FILE,
};

fn run_options(cfg: &RunConfig) -> RunOptions {
    let mut o = RunOptions::new(cfg.final_time);
    o.cfl = cfg.cfl;
    o.integrator = cfg.integrator;
    o.diagnostics_every = cfg.every.max(1);
    o
}

fn warn_non_ssp(cfg: &RunConfig) {
    if cfg.scheme.is_limited() && !cfg.integrator.is_ssp() {
        eprintln!(
            "warning: {} combines limiting with the non-SSP integrator {}",
            cfg.scheme, cfg.integrator
        );
    }
}

fn range(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        })
}

/// Runs one simulation and writes its artifacts into `cfg.output`.
pub fn cmd_run(cfg: &RunConfig) -> Result<SimulationResult, CliError> {
    warn_non_ssp(cfg);
    let problem = cfg.problem();
    let disc = Discretization::for_problem(&problem, cfg.scheme_config(), cfg.degree, cfg.cells)?;
    let dir = OutputDir::claim(&cfg.output)?;
    dir.write(MANIFEST_FILE, &cfg.to_manifest())?;

    let u0 = disc.initial_state(|x| problem.initial(x))?;
    let t = cfg.final_time;
    let exact = |x: entropy_cg::Vec2| problem.exact(x, t).unwrap_or(f64::NAN);
    let exact_ref: Option<&(dyn Fn(entropy_cg::Vec2) -> f64 + Sync)> = if problem.has_exact(t) {
        Some(&exact)
    } else {
        None
    };
    let every = cfg.every;
    let mut observer = |step: usize, _t: f64, u: &[f64]| -> entropy_cg::Result<()> {
        if step == 0 || (every > 0 && step % every == 0) {
            dir.write(&format!("snapshot_{step:06}.txt"), &grid_snapshot(&disc, u))
                .map_err(|e| entropy_cg::Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    };
    let res = run_observed(
        &disc,
        u0,
        problem.bounds,
        &run_options(cfg),
        exact_ref,
        &mut observer,
    )?;

    dir.write("solution.txt", &grid_snapshot(&disc, &res.u))?;
    dir.write("diagnostics.csv", &diagnostics_csv(&res.records))?;
    let values = disc.node_values(&res.u);
    dir.write(
        "summary.txt",
        &summary_text(&res, range(&res.u), range(&values)),
    )?;
    Ok(res)
}

/// Convergence study over `cfg.dofs_list` total node counts.
pub fn cmd_eoc(cfg: &RunConfig) -> Result<Vec<EocRow>, CliError> {
    warn_non_ssp(cfg);
    if cfg.dofs_list.is_empty() {
        return Err(CliError::Config("eoc needs a non-empty dofs_list".into()));
    }
    let problem = cfg.problem();
    let per_dir: Vec<usize> = cfg
        .dofs_list
        .iter()
        .map(|&d| per_direction(d, problem.dimension))
        .collect::<Result<_, _>>()?;
    let dir = OutputDir::claim(&cfg.output)?;
    dir.write(MANIFEST_FILE, &cfg.to_manifest())?;
    let mut rows = eoc_study(
        &problem,
        &cfg.scheme_config(),
        cfg.degree,
        &per_dir,
        &run_options(cfg),
    )?;
    for (r, &d) in rows.iter_mut().zip(&cfg.dofs_list) {
        r.dofs = d;
    }
    dir.write("eoc.csv", &eoc_csv(&rows))?;
    crate::emit(&eoc_table_text(&rows));
    Ok(rows)
}

/// Runs the selected suites; any failing suite is a verification error.
pub fn cmd_verify(suites: &[Suite], opts: &VerifyOptions) -> Result<Vec<SuiteReport>, CliError> {
    let mut reports = Vec::new();
    for &s in suites {
        let r = run_suite(s, opts)?;
        crate::emit(&format!("{r}\n"));
        reports.push(r);
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.suite.name())
        .collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Verification(format!(
            "suites {} failed",
            failed.join(", ")
        )))
    }
}
