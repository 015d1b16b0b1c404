//! Benchmark problems: domain, flux, initial data, exact solutions and invariant sets.

use std::f64::consts::PI;

use super::flux::{FluxModel, ROTATION_ANGULAR_VELOCITY};
use crate::error::{Error, Result};
use crate::mesh::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    AdvectionCos,
    AdvectionThreeBody,
    Burgers,
    SolidBodyRotation,
    BuckleyLeverett,
    Kpp,
}

/// Fully specified benchmark.
#[derive(Clone, Debug)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub flux: FluxModel,
    pub dimension: usize,
    pub lower: Vec2,
    pub upper: Vec2,
    pub final_time: f64,
    /// Invariant set `[u_min, u_max]` of the exact solution.
    pub bounds: (f64, f64),
}

pub const BENCHMARK_NAMES: [&str; 6] = [
    "adv1d_cos",
    "adv1d_threebody",
    "burgers1d",
    "solid_body_rotation",
    "buckley_leverett",
    "kpp",
];

/// Shock formation time of the Burgers benchmark.
pub const BURGERS_CRITICAL_TIME: f64 = 1.0 / (2.0 * PI);

/// Looks up a benchmark by name.
pub fn benchmark(name: &str) -> Result<BenchmarkProblem> {
    let p = match name {
        "adv1d_cos" => BenchmarkProblem {
            name: "adv1d_cos",
            kind: ProblemKind::AdvectionCos,
            flux: FluxModel::linear_advection([1.0, 0.0], 1),
            dimension: 1,
            lower: [0.0, 0.0],
            upper: [1.0, 0.0],
            final_time: 1.0,
            bounds: (-1.0, 1.0),
        },
        "adv1d_threebody" => BenchmarkProblem {
            name: "adv1d_threebody",
            kind: ProblemKind::AdvectionThreeBody,
            flux: FluxModel::linear_advection([1.0, 0.0], 1),
            dimension: 1,
            lower: [0.0, 0.0],
            upper: [1.0, 0.0],
            final_time: 100.0,
            bounds: (0.0, 1.0),
        },
        "burgers1d" => BenchmarkProblem {
            name: "burgers1d",
            kind: ProblemKind::Burgers,
            flux: FluxModel::burgers(),
            dimension: 1,
            lower: [0.0, 0.0],
            upper: [1.0, 0.0],
            final_time: 0.1,
            bounds: (-1.0, 1.0),
        },
        "solid_body_rotation" => BenchmarkProblem {
            name: "solid_body_rotation",
            kind: ProblemKind::SolidBodyRotation,
            flux: FluxModel::rotation([0.5, 0.5], ROTATION_ANGULAR_VELOCITY, 0.5f64.sqrt()),
            dimension: 2,
            lower: [0.0, 0.0],
            upper: [1.0, 1.0],
            final_time: 1.0,
            bounds: (0.0, 1.0),
        },
        "buckley_leverett" => BenchmarkProblem {
            name: "buckley_leverett",
            kind: ProblemKind::BuckleyLeverett,
            flux: FluxModel::buckley_leverett(),
            dimension: 2,
            lower: [-1.5, -1.5],
            upper: [1.5, 1.5],
            final_time: 0.5,
            bounds: (0.0, 1.0),
        },
        "kpp" => BenchmarkProblem {
            name: "kpp",
            kind: ProblemKind::Kpp,
            flux: FluxModel::kpp(),
            dimension: 2,
            lower: [-2.0, -2.5],
            upper: [2.0, 1.5],
            final_time: 1.0,
            bounds: (PI / 4.0, 3.5 * PI),
        },
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    Ok(p)
}

fn three_body(x: f64) -> f64 {
    let s = 2.0 * x;
    if (s - 0.3).abs() <= 0.25 {
        (-300.0 * (s - 0.3).powi(2)).exp()
    } else if (s - 0.9).abs() <= 0.2 {
        1.0
    } else if (s - 1.6).abs() <= 0.2 {
        (1.0 - ((s - 1.6) / 0.2).powi(2)).max(0.0).sqrt()
    } else {
        0.0
    }
}

fn solid_body(x: Vec2) -> f64 {
    let r = |cx: f64, cy: f64| ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt();
    let hump = r(0.25, 0.5);
    if hump <= 0.15 {
        return 0.25 + 0.25 * (PI * hump / 0.15).cos();
    }
    let cone = r(0.5, 0.25);
    if cone <= 0.15 {
        return 1.0 - cone / 0.15;
    }
    if r(0.5, 0.75) <= 0.15 && ((x[0] - 0.5).abs() >= 0.025 || x[1] >= 0.85) {
        return 1.0;
    }
    0.0
}

/// Solution of `u = sin(2 pi (x - u t))` for `t` below the shock time.
fn burgers_characteristic(x: f64, t: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let residual = |u: f64| u - (two_pi * (x - u * t)).sin();
    let mut u = (two_pi * x).sin();
    for _ in 0..50 {
        let r = residual(u);
        if r.abs() <= 1e-15 {
            return u;
        }
        let d = 1.0 + two_pi * t * (two_pi * (x - u * t)).cos();
        let next = u - r / d;
        if !next.is_finite() || next.abs() > 1.0 {
            break;
        }
        u = next;
    }
    if residual(u).abs() <= 1e-14 {
        return u;
    }
    // The residual is increasing in u and changes sign on [-1, 1].
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

impl BenchmarkProblem {
    pub fn initial(&self, x: Vec2) -> f64 {
        match self.kind {
            ProblemKind::AdvectionCos => (2.0 * PI * (x[0] - 0.5)).cos(),
            ProblemKind::AdvectionThreeBody => three_body(x[0]),
            ProblemKind::Burgers => (2.0 * PI * x[0]).sin(),
            ProblemKind::SolidBodyRotation => solid_body(x),
            ProblemKind::BuckleyLeverett => {
                if x[0] * x[0] + x[1] * x[1] < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            ProblemKind::Kpp => {
                if (x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 {
                    3.5 * PI
                } else {
                    PI / 4.0
                }
            }
        }
    }

    pub fn has_exact(&self, t: f64) -> bool {
        match self.kind {
            ProblemKind::AdvectionCos
            | ProblemKind::AdvectionThreeBody
            | ProblemKind::SolidBodyRotation => true,
            ProblemKind::Burgers => t < BURGERS_CRITICAL_TIME,
            ProblemKind::BuckleyLeverett | ProblemKind::Kpp => t == 0.0,
        }
    }

    /// Exact solution at `(x, t)` where one is available.
    pub fn exact(&self, x: Vec2, t: f64) -> Result<f64> {
        if !self.has_exact(t) {
            return Err(Error::NoExactSolution(format!("{} at t = {t}", self.name)));
        }
        Ok(match self.kind {
            ProblemKind::AdvectionCos | ProblemKind::AdvectionThreeBody => {
                let len = self.upper[0] - self.lower[0];
                let xi = (x[0] - t - self.lower[0]).rem_euclid(len) + self.lower[0];
                self.initial([xi, 0.0])
            }
            ProblemKind::Burgers => burgers_characteristic(x[0], t),
            ProblemKind::SolidBodyRotation => {
                let theta = -ROTATION_ANGULAR_VELOCITY * t;
                let (s, c) = theta.sin_cos();
                let dx = x[0] - 0.5;
                let dy = x[1] - 0.5;
                self.initial([0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy])
            }
            ProblemKind::BuckleyLeverett | ProblemKind::Kpp => self.initial(x),
        })
    }

    /// Gauss points per direction used by element operators of degree `p`.
    pub fn quadrature_points(&self, p: usize) -> usize {
        if self.flux.is_polynomial() {
            p + 2
        } else {
            p + 3
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        for n in BENCHMARK_NAMES {
            assert_eq!(benchmark(n).unwrap().name, n);
        }
        assert!(matches!(benchmark("nope"), Err(Error::UnknownProblem(_))));
        assert_eq!(benchmark("kpp").unwrap().bounds, (PI / 4.0, 3.5 * PI));
    }

    #[test]
    fn burgers_exact() {
        assert!((BURGERS_CRITICAL_TIME - 0.159_154_943_091_895_3).abs() < 1e-15);
        let b = benchmark("burgers1d").unwrap();
        for k in 0..20 {
            let x = k as f64 / 20.0;
            assert!((b.exact([x, 0.0], 0.0).unwrap() - (2.0 * PI * x).sin()).abs() < 1e-15);
            let u = b.exact([x, 0.0], 0.1).unwrap();
            assert!((u - (2.0 * PI * (x - u * 0.1)).sin()).abs() < 1e-13);
        }
        assert!(b.exact([0.3, 0.0], 0.2).is_err());
    }

    #[test]
    fn rotation_returns_to_initial_state() {
        let b = benchmark("solid_body_rotation").unwrap();
        for k in 0..50 {
            let x = [0.013 + k as f64 * 0.0197, 0.97 - k as f64 * 0.0191];
            assert!((b.exact(x, 1.0).unwrap() - b.initial(x)).abs() < 1e-12);
        }
        // a quarter turn carries the hump centre (0.25, 0.5) to (0.5, 0.25)
        assert!((b.exact([0.5, 0.25], 0.25).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn advection_exact_is_periodic_shift() {
        let b = benchmark("adv1d_threebody").unwrap();
        assert_eq!(b.exact([0.45, 0.0], 1.0).unwrap(), b.initial([0.45, 0.0]));
        assert_eq!(b.exact([0.95, 0.0], 0.5).unwrap(), b.initial([0.45, 0.0]));
        assert_eq!(b.initial([0.45, 0.0]), 1.0);
    }
}
