//! Flux functions with the square entropy pair and wave-speed bounds.

use std::f64::consts::PI;

use crate::mesh::Vec2;

/// Available flux functions. Space dependence is limited to divergence-free
/// velocity fields, so `div_x f(u, x) = 0` for every model.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxKind {
    /// `f = a u` with constant velocity `a`.
    LinearAdvection {
        velocity: Vec2,
    },
    /// `f = a(x) u` with `a(x) = omega (c_y - y, x - c_x)`.
    Rotation {
        center: Vec2,
        angular_velocity: f64,
    },
    /// `f = d u^2 / 2` for a fixed direction `d`.
    Burgers {
        direction: Vec2,
    },
    BuckleyLeverett,
    Kpp,
}

/// Flux model together with the square entropy `eta = u^2/2`, `v = u`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxModel {
    pub kind: FluxKind,
    pub dimension: usize,
    speed_scale: f64,
}

const BL_SPEED: f64 = 3.4;

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

impl FluxModel {
    pub fn linear_advection(velocity: Vec2, dimension: usize) -> Self {
        let v = if dimension == 1 {
            [velocity[0], 0.0]
        } else {
            velocity
        };
        Self {
            kind: FluxKind::LinearAdvection { velocity: v },
            dimension,
            speed_scale: norm(v),
        }
    }

    /// Counter-clockwise rotation about `center`. `radius` bounds the distance of
    /// any domain point from the center and sets the speed scale.
    pub fn rotation(center: Vec2, angular_velocity: f64, radius: f64) -> Self {
        Self {
            kind: FluxKind::Rotation {
                center,
                angular_velocity,
            },
            dimension: 2,
            speed_scale: angular_velocity.abs() * radius,
        }
    }

    /// One-dimensional Burgers flux `u^2/2`.
    pub fn burgers() -> Self {
        Self {
            kind: FluxKind::Burgers {
                direction: [1.0, 0.0],
            },
            dimension: 1,
            speed_scale: 1.0,
        }
    }

    /// Burgers flux `d u^2/2` along a fixed direction.
    pub fn burgers_directional(direction: Vec2, dimension: usize) -> Self {
        let d = if dimension == 1 {
            [direction[0], 0.0]
        } else {
            direction
        };
        Self {
            kind: FluxKind::Burgers { direction: d },
            dimension,
            speed_scale: norm(d),
        }
    }

    pub fn buckley_leverett() -> Self {
        Self {
            kind: FluxKind::BuckleyLeverett,
            dimension: 2,
            speed_scale: BL_SPEED,
        }
    }

    pub fn kpp() -> Self {
        Self {
            kind: FluxKind::Kpp,
            dimension: 2,
            speed_scale: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FluxKind::LinearAdvection { .. } => "linear_advection",
            FluxKind::Rotation { .. } => "rotation",
            FluxKind::Burgers { .. } => "burgers",
            FluxKind::BuckleyLeverett => "buckley_leverett",
            FluxKind::Kpp => "kpp",
        }
    }

    /// Polynomial fluxes can be integrated exactly by Gauss rules.
    pub fn is_polynomial(&self) -> bool {
        matches!(
            self.kind,
            FluxKind::LinearAdvection { .. } | FluxKind::Rotation { .. } | FluxKind::Burgers { .. }
        )
    }

    /// Characteristic wave speed, used to scale tolerances.
    pub fn speed_scale(&self) -> f64 {
        self.speed_scale
    }

    /// Whether the flux depends on position.
    pub fn is_space_dependent(&self) -> bool {
        matches!(self.kind, FluxKind::Rotation { .. })
    }

    #[inline]
    fn rotation_velocity(center: Vec2, omega: f64, x: Vec2) -> Vec2 {
        [omega * (center[1] - x[1]), omega * (x[0] - center[0])]
    }

    #[inline]
    pub fn flux(&self, u: f64, x: Vec2) -> Vec2 {
        match self.kind {
            FluxKind::LinearAdvection { velocity } => [velocity[0] * u, velocity[1] * u],
            FluxKind::Rotation {
                center,
                angular_velocity,
            } => {
                let a = Self::rotation_velocity(center, angular_velocity, x);
                [a[0] * u, a[1] * u]
            }
            FluxKind::Burgers { direction } => {
                let s = 0.5 * u * u;
                [direction[0] * s, direction[1] * s]
            }
            FluxKind::BuckleyLeverett => {
                let g = bl_fraction(u);
                let w = 1.0 - u;
                [g, g * (1.0 - 5.0 * w * w)]
            }
            FluxKind::Kpp => [u.sin(), u.cos()],
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64, x: Vec2) -> Vec2 {
        match self.kind {
            FluxKind::LinearAdvection { velocity } => velocity,
            FluxKind::Rotation {
                center,
                angular_velocity,
            } => Self::rotation_velocity(center, angular_velocity, x),
            FluxKind::Burgers { direction } => [direction[0] * u, direction[1] * u],
            FluxKind::BuckleyLeverett => {
                let g = bl_fraction(u);
                let dg = bl_fraction_derivative(u);
                let w = 1.0 - u;
                [dg, dg * (1.0 - 5.0 * w * w) + 10.0 * g * w]
            }
            FluxKind::Kpp => [u.cos(), -u.sin()],
        }
    }

    #[inline]
    pub fn entropy(&self, u: f64) -> f64 {
        0.5 * u * u
    }

    #[inline]
    pub fn entropy_variable(&self, u: f64) -> f64 {
        u
    }

    #[inline]
    pub fn entropy_second_derivative(&self, _u: f64) -> f64 {
        1.0
    }

    /// Entropy flux `q` with `q' = v f'`.
    #[inline]
    pub fn entropy_flux(&self, u: f64, x: Vec2) -> Vec2 {
        match self.kind {
            FluxKind::LinearAdvection { velocity } => {
                let s = 0.5 * u * u;
                [velocity[0] * s, velocity[1] * s]
            }
            FluxKind::Rotation {
                center,
                angular_velocity,
            } => {
                let a = Self::rotation_velocity(center, angular_velocity, x);
                let s = 0.5 * u * u;
                [a[0] * s, a[1] * s]
            }
            FluxKind::Burgers { direction } => {
                let s = u * u * u / 3.0;
                [direction[0] * s, direction[1] * s]
            }
            FluxKind::BuckleyLeverett => {
                let d = 2.0 * u * u - 2.0 * u + 1.0;
                let ld = d.ln();
                let qx = 0.25 * (2.0 * (u - 1.0) / d - ld);
                let qy = (-20.0 * u.powi(3) + 15.0 * u * u
                    - (9.0 * u + 6.0) / d
                    - 3.0 * ld
                    - 15.0 * (1.0 - 2.0 * u).atan())
                    / 12.0;
                [qx, qy]
            }
            FluxKind::Kpp => [u * u.sin() + u.cos(), u * u.cos() - u.sin()],
        }
    }

    /// Entropy potential `psi = v f - q`.
    #[inline]
    pub fn potential(&self, u: f64, x: Vec2) -> Vec2 {
        let f = self.flux(u, x);
        let q = self.entropy_flux(u, x);
        let v = self.entropy_variable(u);
        [v * f[0] - q[0], v * f[1] - q[1]]
    }

    /// Upper bound for `max |n . f'(w)|` over `w` between `ui` and `uj`.
    /// `n` is a unit vector and `x` the position at which the flux is frozen.
    #[inline]
    pub fn wave_speed(&self, ui: f64, uj: f64, n: Vec2, x: Vec2) -> f64 {
        match self.kind {
            FluxKind::LinearAdvection { velocity } => dot(n, velocity).abs(),
            FluxKind::Rotation {
                center,
                angular_velocity,
            } => dot(n, Self::rotation_velocity(center, angular_velocity, x)).abs(),
            FluxKind::Burgers { direction } => dot(n, direction).abs() * ui.abs().max(uj.abs()),
            FluxKind::BuckleyLeverett => BL_SPEED,
            FluxKind::Kpp => 1.0,
        }
    }
}

#[inline]
fn bl_fraction(u: f64) -> f64 {
    let w = 1.0 - u;
    u * u / (u * u + w * w)
}

#[inline]
fn bl_fraction_derivative(u: f64) -> f64 {
    let d = 2.0 * u * u - 2.0 * u + 1.0;
    2.0 * u * (1.0 - u) / (d * d)
}

/// Angular velocity of the solid body rotation benchmark.
pub const ROTATION_ANGULAR_VELOCITY: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<(FluxModel, f64, f64)> {
        vec![
            (FluxModel::linear_advection([1.0, 0.0], 1), -1.0, 1.0),
            (FluxModel::linear_advection([0.7, -0.4], 2), -1.0, 1.0),
            (
                FluxModel::rotation([0.5, 0.5], ROTATION_ANGULAR_VELOCITY, 0.5f64.sqrt()),
                0.0,
                1.0,
            ),
            (FluxModel::burgers(), -1.0, 1.0),
            (FluxModel::burgers_directional([0.6, 0.8], 2), -1.0, 1.0),
            (FluxModel::buckley_leverett(), 0.0, 1.0),
            (FluxModel::kpp(), PI / 4.0, 3.5 * PI),
        ]
    }

    #[test]
    fn plug_in_values() {
        let a = FluxModel::linear_advection([1.0, 0.0], 1);
        assert_eq!(a.flux(2.0, [0.0; 2])[0], 2.0);
        assert_eq!(a.entropy_flux(2.0, [0.0; 2])[0], 2.0);
        assert_eq!(a.potential(2.0, [0.0; 2])[0], 2.0);
        assert_eq!(a.wave_speed(0.3, -4.0, [1.0, 0.0], [0.0; 2]), 1.0);
        let b = FluxModel::burgers();
        assert!((b.potential(1.0, [0.0; 2])[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(b.wave_speed(-1.0, 2.0, [1.0, 0.0], [0.0; 2]), 2.0);
        let bl = FluxModel::buckley_leverett();
        assert_eq!(bl.flux(0.0, [0.0; 2]), [0.0, 0.0]);
        assert_eq!(bl.flux(1.0, [0.0; 2]), [1.0, 1.0]);
        assert_eq!(bl.wave_speed(0.2, 0.9, [1.0, 0.0], [0.0; 2]), 3.4);
        let k = FluxModel::kpp();
        let f = k.flux(PI / 4.0, [0.0; 2]);
        assert!((f[0] - 0.5f64.sqrt()).abs() < 1e-15 && (f[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(k.wave_speed(1.0, 2.0, [0.0, 1.0], [0.0; 2]), 1.0);
    }

    #[test]
    fn entropy_flux_compatibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = [0.3, 0.8];
        for (m, lo, hi) in models() {
            for _ in 0..50 {
                let u: f64 = rng.gen_range(lo..hi);
                let h = 1e-6 * (1.0 + u.abs());
                let qp = m.entropy_flux(u + h, x);
                let qm = m.entropy_flux(u - h, x);
                let df = m.derivative(u, x);
                let fp = m.flux(u + h, x);
                let fm = m.flux(u - h, x);
                for d in 0..2 {
                    let dq = (qp[d] - qm[d]) / (2.0 * h);
                    let target = m.entropy_variable(u) * df[d];
                    assert!(
                        (dq - target).abs() <= 1e-6 * (1.0 + target.abs()),
                        "{} q' d={d} u={u}",
                        m.name()
                    );
                    let dfd = (fp[d] - fm[d]) / (2.0 * h);
                    assert!(
                        (dfd - df[d]).abs() <= 1e-6 * (1.0 + df[d].abs()),
                        "{} f' d={d} u={u}",
                        m.name()
                    );
                }
            }
        }
    }

    #[test]
    fn buckley_leverett_entropy_flux_at_point_three() {
        let m = FluxModel::buckley_leverett();
        let h = 1e-5;
        let u = 0.3;
        let dq =
            (m.entropy_flux(u + h, [0.0; 2])[0] - m.entropy_flux(u - h, [0.0; 2])[0]) / (2.0 * h);
        assert!((dq - u * m.derivative(u, [0.0; 2])[0]).abs() < 1e-8);
    }

    #[test]
    fn wave_speed_dominates_sampled_characteristic_speeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (m, lo, hi) in models() {
            for _ in 0..100 {
                let ui = rng.gen_range(lo..hi);
                let uj = rng.gen_range(lo..hi);
                let ang: f64 = rng.gen_range(0.0..2.0 * PI);
                // Lumped gradients on tensor meshes point along the axes. The
                // Buckley-Leverett constant only bounds axis-aligned speeds.
                let n = if m.dimension == 1 {
                    [1.0, 0.0]
                } else if m.kind == FluxKind::BuckleyLeverett {
                    [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]][rng.gen_range(0..4)]
                } else {
                    [ang.cos(), ang.sin()]
                };
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                let lam = m.wave_speed(ui, uj, n, x);
                for k in 0..=10 {
                    let w = k as f64 / 10.0;
                    let s = dot(n, m.derivative(w * ui + (1.0 - w) * uj, x)).abs();
                    assert!(lam >= s - 1e-14, "{}: {lam} < {s}", m.name());
                }
            }
        }
    }
}
