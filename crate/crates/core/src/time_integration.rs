//! Explicit Runge-Kutta time stepping.
//!
//! Step functions take the stage-one derivative `k1 = L(u)` precomputed so that
//! callers can derive the time step from the same evaluation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Explicit Butcher tableau with a strictly lower triangular `a`.
#[derive(Clone, Debug)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    /// Validates consistency: `sum b = 1` and `c_i = sum_j a_ij`.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if a.len() != s || c.len() != s || a.iter().enumerate().any(|(i, row)| row.len() != i) {
            return Err(Error::InvalidScheme("Butcher tableau shape".into()));
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidScheme(
                "Butcher weights do not sum to one".into(),
            ));
        }
        for (i, row) in a.iter().enumerate() {
            if (row.iter().sum::<f64>() - c[i]).abs() > 1e-14 {
                return Err(Error::InvalidScheme(format!(
                    "Butcher row {i} does not sum to c_{i}"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Seven-stage sixth-order method.
    pub fn rk76() -> Self {
        let a = vec![
            vec![],
            vec![1.0 / 3.0],
            vec![0.0, 2.0 / 3.0],
            vec![1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0],
            vec![-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0],
            vec![0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 1.0 / 2.0],
            vec![
                9.0 / 44.0,
                -9.0 / 11.0,
                63.0 / 44.0,
                18.0 / 11.0,
                0.0,
                -16.0 / 11.0,
            ],
        ];
        let b = vec![
            11.0 / 120.0,
            0.0,
            27.0 / 40.0,
            27.0 / 40.0,
            -4.0 / 15.0,
            -4.0 / 15.0,
            11.0 / 120.0,
        ];
        let c = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.5, 0.5, 1.0];
        Self::new(a, b, c).expect("tabulated method is consistent")
    }
}

fn check_finite(u: &[f64], stage: usize) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("state after stage {stage}")))
    }
}

/// Three-stage third-order SSP method in Shu-Osher form.
pub fn ssprk3_step<F>(mut rhs: F, u: &[f64], k1: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let u1: Vec<f64> = u.iter().zip(k1).map(|(a, k)| a + dt * k).collect();
    check_finite(&u1, 1)?;
    let k2 = rhs(&u1)?;
    let u2: Vec<f64> = (0..u.len())
        .map(|i| 0.75 * u[i] + 0.25 * (u1[i] + dt * k2[i]))
        .collect();
    check_finite(&u2, 2)?;
    let k3 = rhs(&u2)?;
    let out: Vec<f64> = (0..u.len())
        .map(|i| u[i] / 3.0 + 2.0 / 3.0 * (u2[i] + dt * k3[i]))
        .collect();
    check_finite(&out, 3)?;
    Ok(out)
}

/// Generic explicit Runge-Kutta step.
pub fn tableau_step<F>(
    tab: &ButcherTableau,
    mut rhs: F,
    u: &[f64],
    k1: &[f64],
    dt: f64,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = u.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(tab.stages());
    ks.push(k1.to_vec());
    let mut stage = vec![0.0; n];
    for i in 1..tab.stages() {
        stage.copy_from_slice(u);
        for (j, &a) in tab.a[i].iter().enumerate() {
            if a != 0.0 {
                for (s, k) in stage.iter_mut().zip(&ks[j]) {
                    *s += dt * a * k;
                }
            }
        }
        check_finite(&stage, i)?;
        ks.push(rhs(&stage)?);
    }
    let mut out = u.to_vec();
    for (j, &b) in tab.b.iter().enumerate() {
        if b != 0.0 {
            for (o, k) in out.iter_mut().zip(&ks[j]) {
                *o += dt * b * k;
            }
        }
    }
    check_finite(&out, tab.stages())?;
    Ok(out)
}

/// Seven-stage sixth-order step.
pub fn rk76_step<F>(rhs: F, u: &[f64], k1: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    tableau_step(&ButcherTableau::rk76(), rhs, u, k1, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    SspRk3,
    Rk76,
}

impl Integrator {
    pub fn is_ssp(self) -> bool {
        self == Integrator::SspRk3
    }

    pub fn order(self) -> usize {
        match self {
            Integrator::SspRk3 => 3,
            Integrator::Rk76 => 6,
        }
    }

    pub fn step<F>(self, rhs: F, u: &[f64], k1: &[f64], dt: f64) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        match self {
            Integrator::SspRk3 => ssprk3_step(rhs, u, k1, dt),
            Integrator::Rk76 => rk76_step(rhs, u, k1, dt),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::SspRk3 => "ssprk3",
            Integrator::Rk76 => "rk76",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssprk3" | "ssp-rk3" => Ok(Integrator::SspRk3),
            "rk76" | "rk(7,6)" => Ok(Integrator::Rk76),
            _ => Err(Error::InvalidConfig(format!("unknown integrator '{s}'"))),
        }
    }
}

/// Forward-Euler bound-preserving step `cfl * min_i m_i / rate_i`, clamped to `remaining`.
pub fn cfl_timestep(lumped: &[f64], rate: &[f64], cfl: f64, remaining: f64) -> f64 {
    let mut dt = f64::INFINITY;
    for (m, r) in lumped.iter().zip(rate) {
        if *r > 0.0 {
            dt = dt.min(m / r);
        }
    }
    (cfl * dt).min(remaining)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.iter().map(|v| -v).collect())
    }

    fn integrate(method: Integrator, dt: f64, steps: usize) -> f64 {
        let mut u = vec![1.0];
        for _ in 0..steps {
            let k1 = decay(&u).unwrap();
            u = method.step(decay, &u, &k1, dt).unwrap();
        }
        u[0]
    }

    #[test]
    fn tableau_consistency() {
        let t = ButcherTableau::rk76();
        assert_eq!(t.stages(), 7);
        assert!(
            ButcherTableau::new(vec![vec![], vec![0.5]], vec![0.5, 0.4], vec![0.0, 0.5]).is_err()
        );
        assert!(
            ButcherTableau::new(vec![vec![], vec![0.5]], vec![0.5, 0.5], vec![0.0, 0.4]).is_err()
        );
    }

    #[test]
    fn zero_rhs_is_identity() {
        let u = vec![0.3, -1.0, 2.5];
        let zero = |x: &[f64]| Ok(vec![0.0; x.len()]);
        for m in [Integrator::SspRk3, Integrator::Rk76] {
            assert_eq!(m.step(zero, &u, &[0.0; 3], 0.7).unwrap(), u);
        }
    }

    #[test]
    fn ssprk3_single_step_error() {
        let u = integrate(Integrator::SspRk3, 0.1, 1);
        let z: f64 = 0.1;
        assert!((u - (1.0 - z + z * z / 2.0 - z.powi(3) / 6.0)).abs() < 1e-16);
        let err = (u - (-z).exp()).abs();
        assert!((err - z.powi(4) / 24.0).abs() < 1e-7, "{err}");
    }

    #[test]
    fn observed_orders() {
        for (m, dts, tol) in [
            (Integrator::SspRk3, [0.1, 0.05, 0.025], 0.1),
            (Integrator::Rk76, [0.2, 0.1, 0.05], 0.2),
        ] {
            let errs: Vec<f64> = dts
                .iter()
                .map(|&dt| (integrate(m, dt, (1.0 / dt).round() as usize) - (-1f64).exp()).abs())
                .collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((order - m.order() as f64).abs() < tol, "{m}: {order}");
            }
        }
    }

    #[test]
    fn cfl_examples() {
        let h = 0.125;
        let dt = cfl_timestep(&[h / 2.0; 4], &[2.0; 4], 1.0, 10.0);
        assert!((dt - h / 4.0).abs() < 1e-15);
        assert!((cfl_timestep(&[h / 2.0; 4], &[2.0; 4], 2.0, 10.0) - 2.0 * dt).abs() < 1e-15);
        assert_eq!(cfl_timestep(&[1.0; 3], &[0.0; 3], 0.25, 0.3), 0.3);
        assert_eq!(cfl_timestep(&[1.0; 3], &[1.0; 3], 0.25, 0.1), 0.1);
    }

    #[test]
    fn parse_roundtrip() {
        for m in [Integrator::SspRk3, Integrator::Rk76] {
            assert_eq!(m.to_string().parse::<Integrator>().unwrap(), m);
        }
        assert!("euler".parse::<Integrator>().is_err());
    }
}
