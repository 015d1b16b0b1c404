//! Time loop, diagnostics and convergence studies.

use super::discretization::{Discretization, RhsReport};
use super::scheme::SchemeConfig;
use crate::error::{Error, Result};
use crate::limiter::LimiterStats;
use crate::physics::BenchmarkProblem;
use crate::time_integration::{cfl_timestep, Integrator};

/// Default CFL number of the forward-Euler bound.
pub const DEFAULT_CFL: f64 = 0.25;

/// A state exceeding this many invariant-set widths counts as a blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub final_time: f64,
    pub cfl: f64,
    pub integrator: Integrator,
    /// Record diagnostics every this many steps; the first and last steps are always recorded.
    pub diagnostics_every: usize,
    /// Evaluate the entropy balance at every stage.
    pub check_entropy_budget: bool,
    pub max_steps: usize,
}

impl RunOptions {
    pub fn new(final_time: f64) -> Self {
        Self {
            final_time,
            cfl: DEFAULT_CFL,
            integrator: Integrator::SspRk3,
            diagnostics_every: 0,
            check_entropy_budget: false,
            max_steps: usize::MAX,
        }
    }
}

/// Diagnostics of one recorded step.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub entropy: f64,
    pub min: f64,
    pub max: f64,
    pub min_production: f64,
    pub max_production: f64,
    /// Fraction of subcell fluxes reduced by the bound-preserving limiter.
    pub idp_fraction: f64,
    /// Fraction of subcell fluxes reduced by the entropy fix.
    pub entropy_fix_fraction: f64,
}

/// Worst-case quantities over a whole run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub rhs_evaluations: usize,
    pub initial_mass: f64,
    pub initial_entropy: f64,
    /// Largest `|mass(t) - mass(0)|` relative to `sum_i m_i |u_i(0)|`.
    pub max_relative_mass_drift: f64,
    /// Largest one-step entropy increase relative to `max(1, |entropy(0)|)`.
    pub max_relative_entropy_increase: f64,
    /// Largest `|entropy balance| / max(1, |int eta|)` over all stages.
    pub max_relative_entropy_budget: Option<f64>,
    /// Largest relative element entropy defect of the entropy viscosity over all stages.
    pub ev_max_relative_defect: Option<f64>,
    pub ev_degenerate: usize,
    pub ev_stage_elements: usize,
    pub limiter: LimiterStats,
    pub min: f64,
    pub max: f64,
    pub min_dt: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub u: Vec<f64>,
    pub time: f64,
    pub l1_error: Option<f64>,
    pub records: Vec<DiagnosticRecord>,
    pub summary: RunSummary,
}

fn range(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        })
}

struct Tracker<'a> {
    disc: &'a Discretization,
    check_budget: bool,
    budget: f64,
    ev_defect: f64,
    ev_degenerate: usize,
    ev_elements: usize,
    limiter: LimiterStats,
    evaluations: usize,
}

impl Tracker<'_> {
    fn absorb(&mut self, u: &[f64], du: &[f64], r: &RhsReport) {
        self.evaluations += 1;
        if r.ev_elements > 0 {
            self.ev_defect = self.ev_defect.max(r.ev_max_relative_defect);
            self.ev_degenerate += r.ev_degenerate;
            self.ev_elements += r.ev_elements;
        }
        self.limiter.merge(&r.limiter);
        if self.check_budget {
            let b = self.disc.entropy_budget(u, du);
            self.budget = self.budget.max(b.lhs.abs() / b.entropy.abs().max(1.0));
        }
    }
}

/// Integrates `u0` to `opts.final_time`; `exact` evaluates the exact solution
/// at the final time when one is available.
pub fn run(
    disc: &Discretization,
    u0: Vec<f64>,
    bounds: (f64, f64),
    opts: &RunOptions,
    exact: Option<&(dyn Fn(crate::mesh::Vec2) -> f64 + Sync)>,
) -> Result<SimulationResult> {
    run_observed(disc, u0, bounds, opts, exact, &mut |_, _, _| Ok(()))
}

/// [`run`] calling `observer(step, time, u)` on the initial state and after every step.
pub fn run_observed(
    disc: &Discretization,
    u0: Vec<f64>,
    bounds: (f64, f64),
    opts: &RunOptions,
    exact: Option<&(dyn Fn(crate::mesh::Vec2) -> f64 + Sync)>,
    observer: &mut dyn FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<SimulationResult> {
    if !(opts.cfl > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "cfl must be positive, got {}",
            opts.cfl
        )));
    }
    if !(opts.final_time >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "final time must be non-negative, got {}",
            opts.final_time
        )));
    }
    let limited = disc.config.variant.is_limited();
    let width = (bounds.1 - bounds.0).abs().max(1.0);
    let mut u = u0;
    let mut ws = disc.workspace();
    let mass0 = disc.total_mass(&u);
    let mass_scale: f64 = u
        .iter()
        .zip(&disc.lumped)
        .map(|(a, m)| (a * m).abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let entropy0 = disc.total_entropy(&u);
    let entropy_scale = entropy0.abs().max(1.0);
    let (mut lo, mut hi) = range(&u);
    let mut tr = Tracker {
        disc,
        check_budget: opts.check_entropy_budget,
        budget: 0.0,
        ev_defect: f64::NEG_INFINITY,
        ev_degenerate: 0,
        ev_elements: 0,
        limiter: LimiterStats::default(),
        evaluations: 0,
    };
    let mut summary = RunSummary {
        steps: 0,
        rhs_evaluations: 0,
        initial_mass: mass0,
        initial_entropy: entropy0,
        max_relative_mass_drift: 0.0,
        max_relative_entropy_increase: f64::NEG_INFINITY,
        max_relative_entropy_budget: None,
        ev_max_relative_defect: None,
        ev_degenerate: 0,
        ev_stage_elements: 0,
        limiter: LimiterStats::default(),
        min: lo,
        max: hi,
        min_dt: f64::INFINITY,
    };
    let mut records = Vec::new();
    let mut t = 0.0;
    let mut entropy = entropy0;
    let eps_t = 1e-12 * opts.final_time.max(1.0);
    observer(0, 0.0, &u)?;

    while t < opts.final_time - eps_t {
        if summary.steps >= opts.max_steps {
            break;
        }
        let (k1, report) = disc.rhs(&u, &mut ws)?;
        tr.absorb(&u, &k1, &report);
        let rate = if limited {
            report.rate.clone()
        } else {
            disc.llf_rate(&u)
        };
        let dt = cfl_timestep(&disc.lumped, &rate, opts.cfl, opts.final_time - t);
        if !(dt > 0.0) {
            return Err(Error::NonFinite(format!("time step {dt} at t = {t}")));
        }
        let stage_rhs = |v: &[f64]| -> Result<Vec<f64>> {
            let (du, r) = disc.rhs(v, &mut ws)?;
            tr.absorb(v, &du, &r);
            Ok(du)
        };
        u = match opts.integrator.step(stage_rhs, &u, &k1, dt) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                return Err(Error::BlowUp {
                    time: t,
                    magnitude: f64::INFINITY,
                })
            }
            Err(e) => return Err(e),
        };
        t += dt;
        summary.steps += 1;
        summary.min_dt = summary.min_dt.min(dt);

        let (a, b) = range(&u);
        let magnitude = a.abs().max(b.abs());
        if magnitude > BLOW_UP_FACTOR * width {
            return Err(Error::BlowUp { time: t, magnitude });
        }
        lo = lo.min(a);
        hi = hi.max(b);
        observer(summary.steps, t, &u)?;
        let mass = disc.total_mass(&u);
        summary.max_relative_mass_drift = summary
            .max_relative_mass_drift
            .max((mass - mass0).abs() / mass_scale);
        let new_entropy = disc.total_entropy(&u);
        summary.max_relative_entropy_increase = summary
            .max_relative_entropy_increase
            .max((new_entropy - entropy) / entropy_scale);
        entropy = new_entropy;

        let last = t >= opts.final_time - eps_t;
        if summary.steps == 1
            || last
            || (opts.diagnostics_every > 0 && summary.steps % opts.diagnostics_every == 0)
        {
            let pairs = report.limiter.pairs.max(1) as f64;
            records.push(DiagnosticRecord {
                step: summary.steps,
                time: t,
                dt,
                mass,
                entropy,
                min: a,
                max: b,
                min_production: report.production_range.0,
                max_production: report.production_range.1,
                idp_fraction: report.limiter.idp_active as f64 / pairs,
                entropy_fix_fraction: report.limiter.entropy_active as f64 / pairs,
            });
        }
    }

    summary.rhs_evaluations = tr.evaluations;
    summary.max_relative_entropy_budget = opts.check_entropy_budget.then_some(tr.budget);
    summary.ev_max_relative_defect = (tr.ev_elements > 0).then_some(tr.ev_defect);
    summary.ev_degenerate = tr.ev_degenerate;
    summary.ev_stage_elements = tr.ev_elements;
    summary.limiter = tr.limiter;
    summary.min = lo;
    summary.max = hi;
    let l1_error = exact.map(|f| disc.l1_error(&u, f));
    Ok(SimulationResult {
        u,
        time: t,
        l1_error,
        records,
        summary,
    })
}

/// Runs a benchmark on `cells` elements per direction.
pub fn run_problem(
    problem: &BenchmarkProblem,
    config: SchemeConfig,
    degree: usize,
    cells: usize,
    opts: &RunOptions,
) -> Result<(Discretization, SimulationResult)> {
    let disc = Discretization::for_problem(problem, config, degree, cells)?;
    let u0 = disc.initial_state(|x| problem.initial(x))?;
    let t = opts.final_time;
    let exact = |x: crate::mesh::Vec2| problem.exact(x, t).unwrap_or(f64::NAN);
    let exact_ref: Option<&(dyn Fn(crate::mesh::Vec2) -> f64 + Sync)> = if problem.has_exact(t) {
        Some(&exact)
    } else {
        None
    };
    let res = run(&disc, u0, problem.bounds, opts, exact_ref)?;
    Ok((disc, res))
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct EocRow {
    /// Nodes per direction.
    pub dofs: usize,
    pub l1_error: f64,
    pub eoc: Option<f64>,
}

/// Number of nodes per direction to elements per direction.
pub fn cells_for_dofs(dofs: usize, degree: usize) -> Result<usize> {
    if degree == 0 || dofs == 0 || dofs % degree != 0 {
        return Err(Error::InvalidConfig(format!(
            "{dofs} nodes per direction are not divisible by degree {degree}"
        )));
    }
    Ok(dofs / degree)
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)` for consecutive rows.
pub fn eoc_table(dofs: &[usize], errors: &[f64]) -> Vec<EocRow> {
    (0..dofs.len())
        .map(|k| EocRow {
            dofs: dofs[k],
            l1_error: errors[k],
            eoc: (k > 0).then(|| {
                (errors[k - 1] / errors[k]).ln() / (dofs[k] as f64 / dofs[k - 1] as f64).ln()
            }),
        })
        .collect()
}

/// Convergence study over meshes with `dofs` nodes per direction.
pub fn eoc_study(
    problem: &BenchmarkProblem,
    config: &SchemeConfig,
    degree: usize,
    dofs: &[usize],
    opts: &RunOptions,
) -> Result<Vec<EocRow>> {
    if !problem.has_exact(opts.final_time) {
        return Err(Error::NoExactSolution(format!(
            "{} at t = {}",
            problem.name, opts.final_time
        )));
    }
    let mut errors = Vec::with_capacity(dofs.len());
    for &n in dofs {
        let cells = cells_for_dofs(n, degree)?;
        let (_, res) = run_problem(problem, config.clone(), degree, cells, opts)?;
        errors.push(res.l1_error.expect("exact solution available"));
    }
    Ok(eoc_table(dofs, &errors))
}
