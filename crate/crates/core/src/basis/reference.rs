//! Bernstein and Lagrange tensor-product bases on the reference element `[0,1]^d`.

use crate::error::{Error, Result};
use crate::mesh::Vec2;

/// Polynomial basis used to expand the discrete solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Bernstein,
    Lagrange,
}

impl BasisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisKind::Bernstein => "bernstein",
            BasisKind::Lagrange => "lagrange",
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernstein" => Ok(BasisKind::Bernstein),
            "lagrange" => Ok(BasisKind::Lagrange),
            _ => Err(Error::InvalidConfig(format!(
                "unknown basis '{s}' (expected bernstein or lagrange)"
            ))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Degree-`q` Bernstein polynomials and derivatives on [0,1].
pub fn bernstein_1d(q: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    if q == 0 {
        vals[0] = 1.0;
        ders[0] = 0.0;
        return;
    }
    let y = 1.0 - x;
    for a in 0..=q {
        vals[a] = binomial(q, a) * x.powi(a as i32) * y.powi((q - a) as i32);
    }
    // d/dx B_a^q = q (B_{a-1}^{q-1} - B_a^{q-1})
    let lower = |a: usize| binomial(q - 1, a) * x.powi(a as i32) * y.powi((q - 1 - a) as i32);
    for a in 0..=q {
        let left = if a > 0 { lower(a - 1) } else { 0.0 };
        let right = if a < q { lower(a) } else { 0.0 };
        ders[a] = q as f64 * (left - right);
    }
}

/// Degree-`q` Lagrange polynomials on equispaced nodes `a/q` and derivatives.
pub fn lagrange_1d(q: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    if q == 0 {
        vals[0] = 1.0;
        ders[0] = 0.0;
        return;
    }
    let node = |a: usize| a as f64 / q as f64;
    for a in 0..=q {
        let mut v = 1.0;
        let mut d = 0.0;
        for b in 0..=q {
            if b == a {
                continue;
            }
            let denom = node(a) - node(b);
            let mut term = 1.0 / denom;
            for c in 0..=q {
                if c != a && c != b {
                    term *= (x - node(c)) / (node(a) - node(c));
                }
            }
            d += term;
            v *= (x - node(b)) / denom;
        }
        vals[a] = v;
        ders[a] = d;
    }
}

/// Tensor-product basis of degree `p` on `[0,1]^d`.
///
/// Function `k = ay * (p+1) + ax` is the product of the 1D functions with
/// indices `ax` and `ay` and is anchored at the lattice point `(ax/p, ay/p)`.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    kind: BasisKind,
    degree: usize,
    dimension: usize,
}

impl ReferenceBasis {
    pub fn new(kind: BasisKind, degree: usize, dimension: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidConfig(
                "basis degree must be at least 1".into(),
            ));
        }
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidConfig(format!(
                "basis dimension must be 1 or 2, got {dimension}"
            )));
        }
        Ok(Self {
            kind,
            degree,
            dimension,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_functions(&self) -> usize {
        (self.degree + 1).pow(self.dimension as u32)
    }

    /// Lattice indices `(ax, ay)` of local function `k`.
    pub fn lattice_index(&self, k: usize) -> (usize, usize) {
        (k % (self.degree + 1), k / (self.degree + 1))
    }

    /// Reference coordinates of the node attached to local function `k`.
    pub fn lattice_point(&self, k: usize) -> Vec2 {
        let (ax, ay) = self.lattice_index(k);
        let p = self.degree as f64;
        if self.dimension == 1 {
            [ax as f64 / p, 0.0]
        } else {
            [ax as f64 / p, ay as f64 / p]
        }
    }

    fn eval_1d(&self, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        match self.kind {
            BasisKind::Bernstein => bernstein_1d(self.degree, x, vals, ders),
            BasisKind::Lagrange => lagrange_1d(self.degree, x, vals, ders),
        }
    }

    /// Values and reference gradients of all basis functions at `xi`.
    pub fn eval(&self, xi: Vec2, values: &mut [f64], gradients: &mut [Vec2]) {
        let n1 = self.degree + 1;
        let mut vx = [0.0; 32];
        let mut dx = [0.0; 32];
        assert!(n1 <= 32, "degree too large for stack buffers");
        self.eval_1d(xi[0], &mut vx[..n1], &mut dx[..n1]);
        if self.dimension == 1 {
            values[..n1].copy_from_slice(&vx[..n1]);
            for a in 0..n1 {
                gradients[a] = [dx[a], 0.0];
            }
            return;
        }
        let mut vy = [0.0; 32];
        let mut dy = [0.0; 32];
        self.eval_1d(xi[1], &mut vy[..n1], &mut dy[..n1]);
        for ay in 0..n1 {
            for ax in 0..n1 {
                let k = ay * n1 + ax;
                values[k] = vx[ax] * vy[ay];
                gradients[k] = [dx[ax] * vy[ay], vx[ax] * dy[ay]];
            }
        }
    }

    pub fn values(&self, xi: Vec2) -> Vec<f64> {
        let n = self.num_functions();
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        self.eval(xi, &mut v, &mut g);
        v
    }

    pub fn gradients(&self, xi: Vec2) -> Vec<Vec2> {
        let n = self.num_functions();
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        self.eval(xi, &mut v, &mut g);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=8 {
            for dim in 1..=2 {
                for kind in [BasisKind::Bernstein, BasisKind::Lagrange] {
                    let b = ReferenceBasis::new(kind, p, dim).unwrap();
                    for _ in 0..100 {
                        let xi = [rng.gen::<f64>(), rng.gen::<f64>()];
                        let v = b.values(xi);
                        let g = b.gradients(xi);
                        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                        let gs = g.iter().fold([0.0, 0.0], |s, g| [s[0] + g[0], s[1] + g[1]]);
                        assert!(gs[0].abs() < 1e-9 && gs[1].abs() < 1e-9);
                        if kind == BasisKind::Bernstein {
                            assert!(v.iter().all(|&x| x >= 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lagrange_interpolates() {
        for p in 1..=6 {
            let b = ReferenceBasis::new(BasisKind::Lagrange, p, 2).unwrap();
            for k in 0..b.num_functions() {
                let v = b.values(b.lattice_point(k));
                for (j, vj) in v.iter().enumerate() {
                    let expected = if j == k { 1.0 } else { 0.0 };
                    assert!((vj - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bernstein_range_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 1..=6 {
            let b = ReferenceBasis::new(BasisKind::Bernstein, p, 2).unwrap();
            let n = b.num_functions();
            for _ in 0..100 {
                let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
                let v = b.values([rng.gen(), rng.gen()]);
                let uh: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(uh >= lo - 1e-12 && uh <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for kind in [BasisKind::Bernstein, BasisKind::Lagrange] {
            let b = ReferenceBasis::new(kind, 4, 2).unwrap();
            let xi = [0.37, 0.61];
            let g = b.gradients(xi);
            let vxp = b.values([xi[0] + h, xi[1]]);
            let vxm = b.values([xi[0] - h, xi[1]]);
            let vyp = b.values([xi[0], xi[1] + h]);
            let vym = b.values([xi[0], xi[1] - h]);
            for k in 0..b.num_functions() {
                assert!((g[k][0] - (vxp[k] - vxm[k]) / (2.0 * h)).abs() < 1e-7);
                assert!((g[k][1] - (vyp[k] - vym[k]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }
}
