//! Gauss-Legendre rules on the reference interval [0,1] and their tensor products.

use crate::error::{Error, Result};
use crate::mesh::Vec2;

/// Largest number of Gauss points per direction handed out by [`quadrature_rule`].
pub const MAX_POINTS_PER_DIRECTION: usize = 64;

/// Tensor-product quadrature rule on `[0,1]^d`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dimension: usize,
    pub points_per_direction: usize,
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Tensor rule with `n` Gauss points per direction; x runs fastest.
    pub fn tensor(n: usize, dimension: usize) -> Result<Self> {
        if n == 0 || n > MAX_POINTS_PER_DIRECTION {
            return Err(Error::QuadratureTooLarge(2 * n.max(1) - 1));
        }
        let (x, w) = gauss_legendre(n);
        let (points, weights) = if dimension == 1 {
            (x.iter().map(|&xi| [xi, 0.0]).collect(), w.clone())
        } else {
            let mut pts = Vec::with_capacity(n * n);
            let mut wts = Vec::with_capacity(n * n);
            for iy in 0..n {
                for ix in 0..n {
                    pts.push([x[ix], x[iy]]);
                    wts.push(w[ix] * w[iy]);
                }
            }
            (pts, wts)
        };
        Ok(Self {
            dimension,
            points_per_direction: n,
            points,
            weights,
        })
    }
}

/// Gauss rule exact for polynomials of degree `exactness` in each direction.
pub fn quadrature_rule(exactness: usize, dimension: usize) -> Result<QuadratureRule> {
    if exactness == 0 {
        return Err(Error::InvalidConfig(
            "quadrature exactness must be at least 1".into(),
        ));
    }
    if !(1..=2).contains(&dimension) {
        return Err(Error::InvalidConfig(format!(
            "quadrature dimension must be 1 or 2, got {dimension}"
        )));
    }
    let n = exactness / 2 + 1;
    if n > MAX_POINTS_PER_DIRECTION {
        return Err(Error::QuadratureTooLarge(exactness));
    }
    QuadratureRule::tensor(n, dimension)
}

/// Legendre polynomial P_n and its derivative at `z` in [-1,1].
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes (ascending) and weights mapped to [0,1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.5;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_and_two_point_rules() {
        let r = quadrature_rule(1, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.points[0][0] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = quadrature_rule(3, 1).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((r.points[0][0] - (0.5 - 0.5 / 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn integrates_monomials_exactly() {
        for e in 1..30 {
            let r = quadrature_rule(e, 1).unwrap();
            for k in 0..=e {
                let s: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x[0].powi(k as i32))
                    .sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "e={e} k={k}");
            }
        }
        let r = quadrature_rule(5, 2).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let s: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x[0].powi(5) * x[1].powi(4))
            .sum();
        assert!((s - 1.0 / 30.0).abs() < 1e-14);
    }

    #[test]
    fn guards() {
        assert!(quadrature_rule(0, 1).is_err());
        assert!(matches!(
            quadrature_rule(1000, 1),
            Err(Error::QuadratureTooLarge(1000))
        ));
    }
}
