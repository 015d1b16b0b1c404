//! Semi-discrete right-hand side of every scheme variant.

use rayon::prelude::*;

use super::mass::MassSolver;
use super::scheme::SchemeConfig;
use crate::basis::{assemble_element_operators, ElementOperators};
use crate::error::{Error, Result};
use crate::limiter::{
    limit_element, llf_diffusion, local_bounds, ElementInputs, LimiterMode, LimiterStats,
    LimiterWorkspace,
};
use crate::mesh::{Mesh, Vec2};
use crate::physics::{BenchmarkProblem, FluxModel};
use crate::stabilization::{
    entropy_production, ev_coefficient, ev_term, recover_gradient, supg_parameter, supg_term,
    vms_parameter, vms_term, weak_flux_integral, ElementState, LinearStabilization,
};

/// Below this many elements, element loops run on the calling thread.
const PARALLEL_THRESHOLD: usize = 256;

/// Per-evaluation diagnostics of [`Discretization::rhs`].
#[derive(Clone, Debug)]
pub struct RhsReport {
    /// Elements with an entropy-viscosity coefficient.
    pub ev_elements: usize,
    /// Largest `(p_h^e - s^EV(v_h, v_h)) / scale_e` over the elements.
    pub ev_max_relative_defect: f64,
    pub ev_degenerate: usize,
    pub ev_capped: usize,
    pub ev_max_nu: f64,
    /// Smallest and largest element entropy production.
    pub production_range: (f64, f64),
    pub limiter: LimiterStats,
    /// `sum_j 2 (d~_ij + d_add_ij)` per global node; empty for unlimited schemes.
    pub rate: Vec<f64>,
    pub mass_iterations: usize,
}

impl Default for RhsReport {
    fn default() -> Self {
        Self {
            ev_elements: 0,
            ev_max_relative_defect: f64::NEG_INFINITY,
            ev_degenerate: 0,
            ev_capped: 0,
            ev_max_nu: 0.0,
            production_range: (f64::INFINITY, f64::NEG_INFINITY),
            limiter: LimiterStats::default(),
            rate: Vec::new(),
            mass_iterations: 0,
        }
    }
}

/// Warm starts of the global mass solves.
#[derive(Clone, Debug, Default)]
pub struct RhsWorkspace {
    galerkin_dot: Vec<f64>,
    target_dot: Vec<f64>,
}

impl RhsWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            galerkin_dot: vec![0.0; n],
            target_dot: vec![0.0; n],
        }
    }

    /// Stabilized time derivative of the most recent target solve.
    pub fn target_dot(&self) -> &[f64] {
        &self.target_dot
    }
}

/// Both sides of the semi-discrete entropy balance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyBudget {
    /// `sum_e int (v(u_h) udot_h + div q(u_h))`.
    pub lhs: f64,
    /// `sum_e int (v(u_h) - v_h)(udot_h + div f(u_h))`.
    pub rhs: f64,
    /// `int eta(u_h)`.
    pub entropy: f64,
}

struct ElementTarget {
    target: Vec<f64>,
    weak: Vec<f64>,
    stab: Vec<f64>,
    ev: Option<(f64, crate::stabilization::EvCoefficient)>,
}

/// Mesh, element operators, flux and scheme of one simulation.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub ops: ElementOperators,
    pub flux: FluxModel,
    pub config: SchemeConfig,
    pub mass: MassSolver,
    /// Global lumped masses `m_i = sum_e m_i^e`.
    pub lumped: Vec<f64>,
    stencils: Vec<Vec<usize>>,
}

impl Discretization {
    pub fn new(
        mesh: Mesh,
        flux: FluxModel,
        config: SchemeConfig,
        quadrature_points: usize,
    ) -> Result<Self> {
        config.validate()?;
        if flux.dimension != mesh.dimension() {
            return Err(Error::InvalidConfig(format!(
                "flux dimension {} does not match mesh dimension {}",
                flux.dimension,
                mesh.dimension()
            )));
        }
        let ops = assemble_element_operators(&mesh, 0, config.basis, quadrature_points)?;
        let mass = MassSolver::new(&mesh, config.basis, quadrature_points)?;
        let mut lumped = vec![0.0; mesh.num_nodes()];
        for e in 0..mesh.num_elements() {
            for (k, &i) in mesh.element_nodes(e).iter().enumerate() {
                lumped[i] += ops.lumped[k];
            }
        }
        let stencils = match config.variant.limiter {
            LimiterMode::Bp | LimiterMode::Fl => mesh.full_stencils(),
            _ => Vec::new(),
        };
        Ok(Self {
            mesh,
            ops,
            flux,
            config,
            mass,
            lumped,
            stencils,
        })
    }

    /// Discretization of a benchmark with `cells` elements per direction.
    pub fn for_problem(
        problem: &BenchmarkProblem,
        config: SchemeConfig,
        degree: usize,
        cells: usize,
    ) -> Result<Self> {
        let mesh = if problem.dimension == 1 {
            Mesh::build_1d(problem.lower[0], problem.upper[0], cells, degree)?
        } else {
            Mesh::build_2d(problem.lower, problem.upper, [cells, cells], degree)?
        };
        Self::new(
            mesh,
            problem.flux.clone(),
            config,
            problem.quadrature_points(degree),
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn workspace(&self) -> RhsWorkspace {
        RhsWorkspace::new(self.num_nodes())
    }

    fn map_elements<T, I, F>(&self, init: impl Fn() -> I + Sync + Send, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut I, usize) -> T + Sync + Send,
    {
        let ne = self.mesh.num_elements();
        if ne < PARALLEL_THRESHOLD {
            let mut s = init();
            (0..ne).map(|e| f(&mut s, e)).collect()
        } else {
            (0..ne)
                .into_par_iter()
                .with_min_len(32)
                .map_init(init, f)
                .collect()
        }
    }

    /// Basis coefficients interpolating `f` at the node lattice.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        let mut u = vec![0.0; self.num_nodes()];
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            let nodal: Vec<f64> = nodes.iter().map(|&i| f(self.mesh.node_coord(i))).collect();
            let c = self.ops.interpolation_coefficients(&nodal);
            for (k, &i) in nodes.iter().enumerate() {
                u[i] = c[k];
            }
        }
        u
    }

    /// Consistent-mass L2 projection of `f` onto the finite element space.
    pub fn project(&self, f: impl Fn(Vec2) -> f64 + Sync) -> Result<Vec<f64>> {
        let n = self.ops.num_nodes();
        let nq = self.ops.num_quadrature_points();
        let parts = self.map_elements(
            || (),
            |_, e| {
                let origin = self.mesh.element_origin(e);
                let mut b = vec![0.0; n];
                for q in 0..nq {
                    let w = self.ops.weights[q] * f(self.ops.quadrature_position(origin, q));
                    for (i, bi) in b.iter_mut().enumerate() {
                        *bi += w * self.ops.phi[q * n + i];
                    }
                }
                b
            },
        );
        let b = self.assemble(&parts);
        let mut u = vec![0.0; self.num_nodes()];
        self.mass.solve(&b, &mut u)?;
        Ok(u)
    }

    /// Coefficients equal to the nodal values of `f`.
    pub fn nodal_coefficients(&self, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        self.mesh.coords().iter().map(|&x| f(x)).collect()
    }

    /// Initial coefficients: the L2 projection for unlimited schemes and nodal
    /// values, which keep the data bounds, for limited ones.
    pub fn initial_state(&self, f: impl Fn(Vec2) -> f64 + Sync) -> Result<Vec<f64>> {
        if self.config.variant.is_limited() {
            Ok(self.nodal_coefficients(f))
        } else {
            self.project(f)
        }
    }

    fn gather(&self, e: usize, global: &[f64], out: &mut [f64]) {
        for (k, &i) in self.mesh.element_nodes(e).iter().enumerate() {
            out[k] = global[i];
        }
    }

    fn assemble(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_nodes()];
        for (e, part) in parts.iter().enumerate() {
            for (k, &i) in self.mesh.element_nodes(e).iter().enumerate() {
                g[i] += part[k];
            }
        }
        g
    }

    /// `u_h` at every node.
    pub fn node_values(&self, u: &[f64]) -> Vec<f64> {
        let n = self.ops.num_nodes();
        let (mut local, mut vals) = (vec![0.0; n], vec![0.0; n]);
        let mut out = vec![0.0; u.len()];
        for e in 0..self.mesh.num_elements() {
            self.gather(e, u, &mut local);
            self.ops.node_values.matvec(&local, &mut vals);
            for (k, &i) in self.mesh.element_nodes(e).iter().enumerate() {
                out[i] = vals[k];
            }
        }
        out
    }

    /// Weak Galerkin term `int grad phi_i . f(u_h)` assembled over the mesh.
    pub fn galerkin_rhs(&self, u: &[f64]) -> Vec<f64> {
        let n = self.ops.num_nodes();
        let parts = self.map_elements(
            || ElementState::new(&self.ops),
            |st, e| {
                st.load(&self.mesh, &self.ops, &self.flux, e, u);
                let mut g = vec![0.0; n];
                weak_flux_integral(&self.ops, st, &mut g);
                g
            },
        );
        self.assemble(&parts)
    }

    /// Element target terms and the stabilized time derivative in `ws.target_dot`.
    fn target(
        &self,
        u: &[f64],
        ws: &mut RhsWorkspace,
        report: &mut RhsReport,
    ) -> Result<Vec<ElementTarget>> {
        let n = self.ops.num_nodes();
        let variant = self.config.variant;
        let omega = self.config.omega;
        let h = self.mesh.element_size();
        let p = self.mesh.degree();

        let galerkin_dot = if variant.linear == LinearStabilization::Supg {
            let g = self.galerkin_rhs(u);
            report.mass_iterations += self.mass.solve(&g, &mut ws.galerkin_dot)?;
            Some(&ws.galerkin_dot)
        } else {
            None
        };
        let gradient = if variant.linear == LinearStabilization::Vms {
            Some(recover_gradient(
                &self.mesh,
                &self.ops,
                u,
                self.config.recovery,
                &self.mass,
            )?)
        } else {
            None
        };

        let parts = self.map_elements(
            || {
                (
                    ElementState::new(&self.ops),
                    vec![0.0; n],
                    vec![[0.0; 2]; self.ops.num_quadrature_points()],
                    vec![0.0; n],
                )
            },
            |(st, local, gq, centered), e| {
                st.load(&self.mesh, &self.ops, &self.flux, e, u);
                let mut weak = vec![0.0; n];
                weak_flux_integral(&self.ops, st, &mut weak);
                let mut target = weak.clone();
                let mut stab = vec![0.0; n];
                match variant.linear {
                    LinearStabilization::None => {}
                    LinearStabilization::Supg => {
                        self.gather(e, galerkin_dot.expect("computed above"), local);
                        let nu = supg_parameter(omega, h, p, st.speed, self.flux.speed_scale());
                        supg_term(&self.ops, st, local, nu, &mut stab);
                    }
                    LinearStabilization::Vms => {
                        gradient.as_ref().expect("computed above").at_quadrature(
                            &self.ops,
                            self.mesh.element_nodes(e),
                            gq,
                        );
                        let nu = vms_parameter(omega, h, p, st.speed);
                        vms_term(&self.ops, st, gq, nu, &mut stab);
                    }
                }
                let ev = if variant.entropy_viscosity {
                    // square entropy: v_i = u_i
                    // the linear stabilization sums to zero, so v may be centered
                    let mean = st.u.iter().sum::<f64>() / n as f64;
                    for (c, v) in centered.iter_mut().zip(&st.u) {
                        *c = v - mean;
                    }
                    let production = entropy_production(centered, &stab);
                    let ls_scale: f64 =
                        centered.iter().zip(&stab).map(|(a, b)| (a * b).abs()).sum();
                    let c = ev_coefficient(
                        &self.ops,
                        st,
                        &self.flux,
                        centered,
                        production,
                        self.config.ev_cap,
                    );
                    ev_term(&self.ops, centered, c.nu, &mut stab);
                    Some((ls_scale + (c.nu * c.denominator).abs(), c))
                } else {
                    None
                };
                for (t, s) in target.iter_mut().zip(&stab) {
                    *t -= s;
                }
                ElementTarget {
                    target,
                    weak,
                    stab,
                    ev,
                }
            },
        );

        for part in &parts {
            if let Some((scale, c)) = &part.ev {
                report.ev_elements += 1;
                let rel = if *scale > 0.0 {
                    c.defect() / scale
                } else {
                    c.defect().signum()
                };
                report.ev_max_relative_defect = report.ev_max_relative_defect.max(rel);
                report.ev_degenerate += c.degenerate as usize;
                report.ev_capped += (c.nu < c.nu_min) as usize;
                report.ev_max_nu = report.ev_max_nu.max(c.nu);
                report.production_range.0 = report.production_range.0.min(c.production);
                report.production_range.1 = report.production_range.1.max(c.production);
            }
        }
        let mut g = vec![0.0; self.num_nodes()];
        for (e, part) in parts.iter().enumerate() {
            for (k, &i) in self.mesh.element_nodes(e).iter().enumerate() {
                g[i] += part.target[k];
            }
        }
        report.mass_iterations += self.mass.solve(&g, &mut ws.target_dot)?;
        Ok(parts)
    }

    /// Time derivative of the unlimited target scheme, solved with the consistent mass.
    pub fn target_rhs(&self, u: &[f64], ws: &mut RhsWorkspace) -> Result<(Vec<f64>, RhsReport)> {
        let mut report = RhsReport::default();
        self.target(u, ws, &mut report)?;
        Ok((ws.target_dot.clone(), report))
    }

    /// Time derivative of the coefficients.
    pub fn rhs(&self, u: &[f64], ws: &mut RhsWorkspace) -> Result<(Vec<f64>, RhsReport)> {
        if let Some(v) = u.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state value {v}")));
        }
        let mode = self.config.variant.limiter;
        if mode == LimiterMode::None {
            return self.target_rhs(u, ws);
        }
        let mut report = RhsReport::default();
        let targets = if mode == LimiterMode::LowOrder {
            Vec::new()
        } else {
            self.target(u, ws, &mut report)?
        };
        let bounds = if self.stencils.is_empty() {
            crate::limiter::LocalBounds {
                min: Vec::new(),
                max: Vec::new(),
            }
        } else {
            local_bounds(&self.stencils, u)
        };
        let n = self.ops.num_nodes();
        let target_dot = &ws.target_dot;
        let parts = self.map_elements(
            || {
                (
                    LimiterWorkspace::new(&self.ops),
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![[0.0; 2]; n],
                )
            },
            |(lws, udot, ul, x), e| -> Result<(Vec<f64>, Vec<f64>, LimiterStats)> {
                self.gather(e, u, ul);
                let origin = self.mesh.element_origin(e);
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = self.ops.node_position(origin, k);
                }
                let (stab, weak): (&[f64], &[f64]) = if targets.is_empty() {
                    (&[], &[])
                } else {
                    self.gather(e, target_dot, udot);
                    (&targets[e].stab, &targets[e].weak)
                };
                let inputs = ElementInputs {
                    nodes: self.mesh.element_nodes(e),
                    bounds: &bounds,
                    udot,
                    stab,
                    weak,
                };
                let mut out = vec![0.0; n];
                let mut rate = vec![0.0; n];
                let mut stats = LimiterStats::default();
                limit_element(
                    lws, &self.ops, &self.flux, mode, ul, x, &inputs, &mut out, &mut rate,
                    &mut stats,
                )?;
                Ok((out, rate, stats))
            },
        );
        let mut du = vec![0.0; self.num_nodes()];
        let mut rate = vec![0.0; self.num_nodes()];
        for (e, part) in parts.into_iter().enumerate() {
            let (out, r, stats) = part?;
            report.limiter.merge(&stats);
            for (k, &i) in self.mesh.element_nodes(e).iter().enumerate() {
                du[i] += out[k];
                rate[i] += r[k];
            }
        }
        for (d, m) in du.iter_mut().zip(&self.lumped) {
            *d /= m;
        }
        report.rate = rate;
        Ok((du, report))
    }

    /// `sum_j 2 d~_ij` per global node for the LLF diffusion of `u`.
    pub fn llf_rate(&self, u: &[f64]) -> Vec<f64> {
        let n = self.ops.num_nodes();
        let parts = self.map_elements(
            || {
                (
                    vec![0.0; n],
                    vec![[0.0; 2]; n],
                    vec![0.0; self.ops.edges.len()],
                )
            },
            |(ul, x, d), e| {
                self.gather(e, u, ul);
                let origin = self.mesh.element_origin(e);
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = self.ops.node_position(origin, k);
                }
                llf_diffusion(&self.ops, &self.flux, ul, x, d);
                let mut r = vec![0.0; n];
                for (k, &(i, j)) in self.ops.edges.iter().enumerate() {
                    r[i] += 2.0 * d[k];
                    r[j] += 2.0 * d[k];
                }
                r
            },
        );
        self.assemble(&parts)
    }

    /// `sum_i m_i u_i` with the global lumped mass.
    pub fn total_mass(&self, u: &[f64]) -> f64 {
        crate::linalg::stable_sum(u.iter().zip(&self.lumped).map(|(a, m)| a * m))
    }

    /// `sum_i m_i eta(u_i)` with the global lumped mass.
    pub fn total_entropy(&self, u: &[f64]) -> f64 {
        crate::linalg::stable_sum(
            u.iter()
                .zip(&self.lumped)
                .map(|(a, m)| m * self.flux.entropy(*a)),
        )
    }

    /// Evaluates both sides of the entropy balance for state `u` and time derivative `udot`.
    pub fn entropy_budget(&self, u: &[f64], udot: &[f64]) -> EntropyBudget {
        let n = self.ops.num_nodes();
        let nq = self.ops.num_quadrature_points();
        let parts = self.map_elements(
            || (ElementState::new(&self.ops), vec![0.0; n], vec![0.0; n]),
            |(st, ud, vl), e| {
                st.load(&self.mesh, &self.ops, &self.flux, e, u);
                self.gather(e, udot, ud);
                for (k, v) in vl.iter_mut().enumerate() {
                    *v = self.flux.entropy_variable(st.u[k]);
                }
                let (mut lhs, mut rhs, mut ent) = (0.0, 0.0, 0.0);
                for q in 0..nq {
                    let phi = &self.ops.phi[q * n..(q + 1) * n];
                    let w = self.ops.weights[q];
                    let uq = st.u_q[q];
                    let udq: f64 = phi.iter().zip(ud.iter()).map(|(a, b)| a * b).sum();
                    let vh: f64 = phi.iter().zip(vl.iter()).map(|(a, b)| a * b).sum();
                    let v = self.flux.entropy_variable(uq);
                    let fp = st.fprime_q[q];
                    let div_f = fp[0] * st.grad_q[q][0] + fp[1] * st.grad_q[q][1];
                    lhs += w * (v * udq + v * div_f);
                    rhs += w * (v - vh) * (udq + div_f);
                    ent += w * self.flux.entropy(uq);
                }
                [lhs, rhs, ent]
            },
        );
        let sum = |k: usize| crate::linalg::stable_sum(parts.iter().map(|p| p[k]));
        EntropyBudget {
            lhs: sum(0),
            rhs: sum(1),
            entropy: sum(2),
        }
    }

    /// `int |u_h - exact|` by element quadrature.
    pub fn l1_error(&self, u: &[f64], exact: impl Fn(Vec2) -> f64 + Sync) -> f64 {
        let n = self.ops.num_nodes();
        let nq = self.ops.num_quadrature_points();
        let parts = self.map_elements(
            || vec![0.0; n],
            |ul, e| {
                self.gather(e, u, ul);
                let origin = self.mesh.element_origin(e);
                let mut s = 0.0;
                for q in 0..nq {
                    let phi = &self.ops.phi[q * n..(q + 1) * n];
                    let uh: f64 = phi.iter().zip(ul.iter()).map(|(a, b)| a * b).sum();
                    s += self.ops.weights[q]
                        * (uh - exact(self.ops.quadrature_position(origin, q))).abs();
                }
                s
            },
        );
        crate::linalg::stable_sum(parts)
    }
}
