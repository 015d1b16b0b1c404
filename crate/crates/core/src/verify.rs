//! Property suites over element operators, limiter building blocks and
//! semi-discrete identities. Each suite samples seeded random inputs and
//! reports the worst relative defect against its tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{assemble_element_operators, global_skew_check, BasisKind};
use crate::error::{Error, Result};
use crate::limiter::{bar_state, idp_limit, pair_entropy_rate, pair_flux_difference, LimiterMode};
use crate::mesh::{Mesh, Vec2};
use crate::physics::{benchmark, FluxModel};
use crate::solver::{Discretization, SchemeConfig, SchemeVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Operators,
    LlfEntropy,
    Idp,
    Decomposition,
    GalerkinEntropy,
    EvEntropy,
    LimitedEntropy,
    Physics,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Operators,
        Suite::LlfEntropy,
        Suite::Idp,
        Suite::Decomposition,
        Suite::GalerkinEntropy,
        Suite::EvEntropy,
        Suite::LimitedEntropy,
        Suite::Physics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::LlfEntropy => "llf-entropy",
            Suite::Idp => "idp",
            Suite::Decomposition => "decomposition",
            Suite::GalerkinEntropy => "galerkin-entropy",
            Suite::EvEntropy => "ev-entropy",
            Suite::LimitedEntropy => "limited-entropy",
            Suite::Physics => "physics",
        }
    }

    /// Tolerance on the worst relative defect.
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Operators | Suite::LlfEntropy | Suite::Idp => 1e-12,
            Suite::Decomposition => 1e-11,
            Suite::GalerkinEntropy => 1e-9,
            Suite::EvEntropy | Suite::LimitedEntropy => 1e-10,
            Suite::Physics => 1e-6,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown verify suite '{s}'")))
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: usize,
    pub failures: usize,
    /// Worst relative defect; a check fails when it exceeds `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            checks: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            tolerance: suite.tolerance(),
        }
    }

    fn record(&mut self, defect: f64) {
        self.checks += 1;
        if !(defect <= self.tolerance) {
            self.failures += 1;
        }
        if defect.is_nan() || defect > self.worst {
            self.worst = defect;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} checks={} failures={} worst={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.checks,
            self.failures,
            self.worst,
            self.tolerance
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random samples per configuration.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 200,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut r = SuiteReport::new(suite);
    match suite {
        Suite::Operators => operators(&mut r)?,
        Suite::LlfEntropy => llf_entropy(&mut r, &mut rng, opts.samples.max(1) * 50),
        Suite::Idp => idp(&mut r, &mut rng, opts.samples.max(1) * 50),
        Suite::Decomposition => decomposition(&mut r, &mut rng, opts.samples)?,
        Suite::GalerkinEntropy => galerkin_entropy(&mut r, &mut rng, opts.samples)?,
        Suite::EvEntropy => ev_entropy(&mut r, &mut rng, opts.samples)?,
        Suite::LimitedEntropy => limited_entropy(&mut r, &mut rng, opts.samples)?,
        Suite::Physics => physics(&mut r, &mut rng, opts.samples),
    }
    Ok(r)
}

fn operators(r: &mut SuiteReport) -> Result<()> {
    for dim in [1, 2] {
        for p in 1..=4 {
            for kind in [BasisKind::Bernstein, BasisKind::Lagrange] {
                let mesh = if dim == 1 {
                    Mesh::build_1d(0.0, 1.0, 4, p)?
                } else {
                    Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [3, 3], p)?
                };
                let ops = assemble_element_operators(&mesh, 0, kind, p + 2)?;
                let n = ops.num_nodes();
                let scale = ops
                    .c
                    .iter()
                    .chain(&ops.c_tilde)
                    .map(|m| m.max_abs())
                    .fold(0.0, f64::max);
                for i in 0..n {
                    for d in 0..dim {
                        let rc: f64 = ops.c[d].row(i).iter().sum();
                        let rt: f64 = ops.c_tilde[d].row(i).iter().sum();
                        r.record(rc.abs().max(rt.abs()) / scale);
                    }
                }
                r.record(global_skew_check(&mesh, &ops) / scale);
                // lumped gradients couple axis neighbours only
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i) {
                        let c = ops.c_tilde_at(i, j);
                        r.record(c[0].abs().min(c[1].abs()) / scale);
                    }
                }
            }
        }
    }
    Ok(())
}

fn unit(v: Vec2) -> Vec2 {
    let l = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / l, v[1] / l]
}

fn flux_models() -> [(FluxModel, f64, f64); 5] {
    [
        (FluxModel::linear_advection([0.3, -1.2], 2), -2.0, 2.0),
        (FluxModel::burgers_directional([0.6, 0.8], 2), -2.0, 2.0),
        (FluxModel::rotation([0.5, 0.5], 2.0 * PI, 0.5), 0.0, 1.0),
        (FluxModel::buckley_leverett(), 0.0, 1.0),
        (FluxModel::kpp(), PI / 4.0, 3.5 * PI),
    ]
}

/// Random pair `(c, c_rev)` along one axis with opposite signs.
fn random_pair(rng: &mut ChaCha8Rng) -> (Vec2, Vec2) {
    let axis = rng.gen_range(0..2);
    let mut c = [0.0; 2];
    c[axis] = rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut cr = [0.0; 2];
    cr[axis] = -c[axis] * rng.gen_range(0.2..2.0);
    (c, cr)
}

fn llf_d(flux: &FluxModel, c: Vec2, cr: Vec2, ui: f64, uj: f64, x: Vec2) -> f64 {
    let l1 = (c[0] * c[0] + c[1] * c[1]).sqrt() * flux.wave_speed(ui, uj, unit(c), x);
    let l2 = (cr[0] * cr[0] + cr[1] * cr[1]).sqrt() * flux.wave_speed(uj, ui, unit(cr), x);
    l1.max(l2)
}

fn llf_entropy(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) {
    for (flux, lo, hi) in flux_models() {
        for _ in 0..samples {
            let ui = rng.gen_range(lo..hi);
            let uj = rng.gen_range(lo..hi);
            let (c, cr) = random_pair(rng);
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let d = llf_d(&flux, c, cr, ui, uj, x);
            let q = pair_entropy_rate(&flux, c, d, ui, uj, x);
            let scale = 1.0 + d * (ui - uj).powi(2);
            r.record(q / scale);
        }
    }
}

fn idp(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) {
    for (flux, lo, hi) in flux_models() {
        for _ in 0..samples {
            let ui = rng.gen_range(lo..hi);
            let uj = rng.gen_range(lo..hi);
            let (c, cr) = random_pair(rng);
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let d = llf_d(&flux, c, cr, ui, uj, x);
            if d <= 0.0 {
                continue;
            }
            let bij = bar_state(ui, uj, pair_flux_difference(&flux, c, ui, uj, x), d);
            let bji = bar_state(uj, ui, pair_flux_difference(&flux, cr, uj, ui, x), d);
            let w = hi - lo;
            let (mi, xi) = (
                bij.min(ui) - rng.gen_range(0.0..0.1) * w,
                bij.max(ui) + rng.gen_range(0.0..0.1) * w,
            );
            let (mj, xj) = (
                bji.min(uj) - rng.gen_range(0.0..0.1) * w,
                bji.max(uj) + rng.gen_range(0.0..0.1) * w,
            );
            let f = rng.gen_range(-2.0..2.0) * d * w;
            let fs = idp_limit(f, d, bij, bji, mi, xi, mj, xj);
            let a = bij + fs / (2.0 * d);
            let b = bji - fs / (2.0 * d);
            let out = (mi - a).max(a - xi).max(mj - b).max(b - xj).max(0.0);
            let grow = if fs * f < 0.0 || fs.abs() > f.abs() {
                1.0
            } else {
                0.0
            };
            r.record(out / w + grow);
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn disc(problem: &str, scheme: &str, p: usize, cells: usize) -> Result<Discretization> {
    let b = benchmark(problem)?;
    let v: SchemeVariant = scheme.parse()?;
    Discretization::for_problem(&b, SchemeConfig::new(v), p, cells)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Flux-corrected form with unlimited subcell fluxes against the target scheme.
fn decomposition(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    for (problem, cells) in [("burgers1d", 3), ("kpp", 3), ("solid_body_rotation", 3)] {
        let b = benchmark(problem)?;
        let (lo, hi) = b.bounds;
        for p in 1..=4 {
            for scheme in ["CG", "HO-SUPG", "HO-VMS", "HO-SUPG-EV", "HO-VMS-EV"] {
                let d = disc(problem, &format!("{scheme}-RAW"), p, cells)?;
                let mut ws = d.workspace();
                for _ in 0..samples {
                    let u = random_state(rng, d.num_nodes(), lo, hi);
                    let (du, _) = d.rhs(&u, &mut ws)?;
                    let t = ws.target_dot();
                    let scale = max_abs(t).max(f64::MIN_POSITIVE);
                    let err = du
                        .iter()
                        .zip(t)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    r.record(err / scale);
                }
            }
        }
    }
    Ok(())
}

/// Entropy balance of the Galerkin scheme with the square entropy.
fn galerkin_entropy(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    for (problem, cells) in [
        ("burgers1d", 5),
        ("adv1d_cos", 5),
        ("solid_body_rotation", 3),
    ] {
        let b = benchmark(problem)?;
        let (lo, hi) = b.bounds;
        for p in 1..=4 {
            let d = disc(problem, "CG", p, cells)?;
            let mut ws = d.workspace();
            for _ in 0..samples.div_ceil(4) {
                let u = random_state(rng, d.num_nodes(), lo, hi);
                let (du, _) = d.rhs(&u, &mut ws)?;
                let bud = d.entropy_budget(&u, &du);
                r.record(bud.lhs.abs() / bud.entropy.abs().max(1.0));
            }
        }
    }
    Ok(())
}

/// Local entropy condition of the entropy-viscosity schemes.
fn ev_entropy(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    for (problem, cells) in [("burgers1d", 5), ("kpp", 3), ("buckley_leverett", 3)] {
        let b = benchmark(problem)?;
        let (lo, hi) = b.bounds;
        for p in 1..=4 {
            for scheme in ["HO-SUPG-EV", "HO-VMS-EV", "CG-EV"] {
                let d = disc(problem, scheme, p, cells)?;
                let mut ws = d.workspace();
                for _ in 0..samples.div_ceil(10) {
                    let u = random_state(rng, d.num_nodes(), lo, hi);
                    let (_, rep) = d.rhs(&u, &mut ws)?;
                    r.record(rep.ev_max_relative_defect);
                }
            }
        }
    }
    Ok(())
}

/// Total entropy rate of the entropy-limited schemes.
fn limited_entropy(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    for (problem, cells) in [
        ("burgers1d", 5),
        ("kpp", 3),
        ("buckley_leverett", 3),
        ("solid_body_rotation", 3),
    ] {
        let b = benchmark(problem)?;
        let (lo, hi) = b.bounds;
        for p in 1..=3 {
            for scheme in ["HO-VMS-EV-FL", "HO-SUPG-FL", "CG-FL"] {
                let d = disc(problem, scheme, p, cells)?;
                debug_assert_eq!(d.config.variant.limiter, LimiterMode::Fl);
                let mut ws = d.workspace();
                for _ in 0..samples.div_ceil(10) {
                    let u = random_state(rng, d.num_nodes(), lo, hi);
                    let (du, _) = d.rhs(&u, &mut ws)?;
                    let terms: Vec<f64> = (0..du.len())
                        .map(|i| d.lumped[i] * d.flux.entropy_variable(u[i]) * du[i])
                        .collect();
                    let scale = terms
                        .iter()
                        .map(|v| v.abs())
                        .sum::<f64>()
                        .max(f64::MIN_POSITIVE);
                    r.record(crate::linalg::stable_sum(terms) / scale);
                }
            }
        }
    }
    Ok(())
}

/// Entropy pair and wave speed consistency of every flux model.
fn physics(r: &mut SuiteReport, rng: &mut ChaCha8Rng, samples: usize) {
    for (flux, lo, hi) in flux_models() {
        let h = 1e-5 * (hi - lo);
        for _ in 0..samples {
            let u = rng.gen_range(lo + h..hi - h);
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let v = flux.entropy_variable(u);
            let dv = (flux.entropy_variable(u + h) - flux.entropy_variable(u - h)) / (2.0 * h);
            let fp = flux.derivative(u, x);
            let fs = flux.flux(u, x);
            let scale = 1.0 + fp[0].abs() + fp[1].abs() + fs[0].abs() + fs[1].abs();
            for d in 0..2 {
                let dq =
                    (flux.entropy_flux(u + h, x)[d] - flux.entropy_flux(u - h, x)[d]) / (2.0 * h);
                let dpsi = (flux.potential(u + h, x)[d] - flux.potential(u - h, x)[d]) / (2.0 * h);
                let df = (flux.flux(u + h, x)[d] - flux.flux(u - h, x)[d]) / (2.0 * h);
                r.record((dq - v * fp[d]).abs() / (scale * (1.0 + v.abs())));
                r.record((dpsi - dv * fs[d]).abs() / (scale * (1.0 + dv.abs())));
                r.record((df - fp[d]).abs() / scale);
            }
            let uj = rng.gen_range(lo..hi);
            // the global Buckley-Leverett bound covers the axis directions of the lumped gradients
            let n = if flux.name() == "buckley_leverett" {
                [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]][rng.gen_range(0..4)]
            } else {
                unit([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            };
            let lam = flux.wave_speed(u, uj, n, x);
            for k in 0..=8 {
                let w = u + (uj - u) * k as f64 / 8.0;
                let s = flux.derivative(w, x);
                r.record(((s[0] * n[0] + s[1] * n[1]).abs() - lam).max(0.0) / scale);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn report_counts_failures() {
        let mut r = SuiteReport::new(Suite::Operators);
        assert!(!r.passed());
        r.record(0.0);
        assert!(r.passed());
        r.record(f64::NAN);
        assert!(!r.passed());
        assert_eq!(r.failures, 1);
    }

    #[test]
    fn all_suites_pass_on_small_samples() {
        let opts = VerifyOptions {
            seed: 11,
            samples: 10,
        };
        for s in Suite::ALL {
            let r = run_suite(s, &opts).unwrap();
            println!("{r}");
            assert!(r.passed(), "{r}");
        }
    }
}
