//! Subcell flux decomposition, LLF diffusion, bound-preserving limiting and
//! the entropy correction of limited subcell fluxes.
//!
//! Pairwise flux and entropy differences of an ordered pair `(i, j)` freeze
//! space-dependent fluxes at the position of node `j`.

use crate::basis::ElementOperators;
use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::mesh::Vec2;
use crate::physics::FluxModel;

/// Flux limiting applied to the compact-stencil form of the target scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimiterMode {
    /// No compact-stencil form; the target scheme is solved with the consistent mass.
    None,
    /// Low-order LLF scheme, all subcell fluxes dropped.
    LowOrder,
    /// Unlimited subcell fluxes, algebraically equivalent to the target scheme.
    Raw,
    /// Bound-preserving limiting.
    Bp,
    /// Bound-preserving limiting followed by the entropy fix.
    Fl,
}

impl LimiterMode {
    pub fn uses_subcell_fluxes(self) -> bool {
        matches!(self, LimiterMode::Raw | LimiterMode::Bp | LimiterMode::Fl)
    }
}

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Local bounds `u_i^min`, `u_i^max` over the full stencils.
#[derive(Clone, Debug)]
pub struct LocalBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn local_bounds(stencils: &[Vec<usize>], u: &[f64]) -> LocalBounds {
    let mut min = vec![0.0; u.len()];
    let mut max = vec![0.0; u.len()];
    for (i, s) in stencils.iter().enumerate() {
        let (lo, hi) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
                (lo.min(u[j]), hi.max(u[j]))
            });
        min[i] = lo;
        max[i] = hi;
    }
    LocalBounds { min, max }
}

/// `c~_ij . (f(u_j) - f(u_i))` with the flux frozen at `x`.
#[inline]
pub fn pair_flux_difference(flux: &FluxModel, ct: Vec2, ui: f64, uj: f64, x: Vec2) -> f64 {
    dot(ct, sub(flux.flux(uj, x), flux.flux(ui, x)))
}

/// LLF diffusion coefficients on the compact edges of one element.
pub fn llf_diffusion(
    ops: &ElementOperators,
    flux: &FluxModel,
    u: &[f64],
    node_x: &[Vec2],
    d: &mut [f64],
) {
    for (k, &(i, j)) in ops.edges.iter().enumerate() {
        let cij = ops.c_tilde_at(i, j);
        let cji = ops.c_tilde_at(j, i);
        let nij = (cij[0] * cij[0] + cij[1] * cij[1]).sqrt();
        let nji = (cji[0] * cji[0] + cji[1] * cji[1]).sqrt();
        let lij = if nij > 0.0 {
            nij * flux.wave_speed(u[i], u[j], [cij[0] / nij, cij[1] / nij], node_x[j])
        } else {
            0.0
        };
        let lji = if nji > 0.0 {
            nji * flux.wave_speed(u[j], u[i], [cji[0] / nji, cji[1] / nji], node_x[i])
        } else {
            0.0
        };
        d[k] = lij.max(lji);
    }
}

/// Constant matrices `c~ - c - c^T` per direction of the potential system.
#[derive(Clone, Debug)]
pub struct PotentialMatrices {
    pub flux: Vec<Dense>,
    /// `sum |entries|` over all directions.
    pub magnitude: f64,
}

impl PotentialMatrices {
    pub fn new(ops: &ElementOperators) -> Self {
        let n = ops.num_nodes();
        let flux: Vec<Dense> = (0..ops.dimension())
            .map(|d| {
                Dense::from_fn(n, n, |i, j| {
                    ops.c_tilde[d][(i, j)] - ops.c[d][(i, j)] - ops.c[d][(j, i)]
                })
            })
            .collect();
        let magnitude = flux
            .iter()
            .map(|m| m.data.iter().map(|v| v.abs()).sum::<f64>())
            .sum();
        Self { flux, magnitude }
    }
}

/// Assembles the right-hand side of the subcell potential system and returns
/// the magnitude of its terms.
///
/// `udot` holds the element coefficients of the stabilized time derivative,
/// `stab` the element's linear plus entropy-viscosity stabilization terms and
/// `weak` the element integrals `int grad phi_i . f(u_h)`.
#[allow(clippy::too_many_arguments)]
pub fn potential_rhs(
    ops: &ElementOperators,
    pm: &PotentialMatrices,
    flux: &FluxModel,
    u: &[f64],
    node_x: &[Vec2],
    udot: &[f64],
    stab: &[f64],
    weak: &[f64],
    out: &mut [f64],
) -> f64 {
    let n = ops.num_nodes();
    let mut fd = [0.0; 81];
    let mut fmax: f64 = 0.0;
    ops.mass.matvec(udot, out);
    let mut scale = 0.0;
    for i in 0..n {
        let m = ops.lumped[i] * udot[i];
        scale += m.abs() + out[i].abs() + weak[i].abs() + stab[i].abs();
        out[i] = m - out[i] + weak[i] - stab[i];
    }
    for (d, b) in pm.flux.iter().enumerate() {
        for j in 0..n {
            fd[j] = flux.flux(u[j], node_x[j])[d];
            fmax = fmax.max(fd[j].abs());
        }
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o += b
                .row(i)
                .iter()
                .zip(&fd[..n])
                .map(|(a, f)| a * f)
                .sum::<f64>();
        }
    }
    scale + pm.magnitude * fmax
}

/// Solves the pinned subcell potential system for `w`.
pub fn solve_flux_potentials(
    ops: &ElementOperators,
    rhs: &[f64],
    scale: f64,
    w: &mut [f64],
) -> Result<()> {
    ops.solve_potentials(rhs, scale, w)
}

/// Raw subcell fluxes `f~_ij = m~_ij (w_j - w_i) + d~_ij (u_i - u_j)` for `i < j`.
pub fn raw_subcell_fluxes(
    ops: &ElementOperators,
    w: &[f64],
    u: &[f64],
    d: &[f64],
    out: &mut [f64],
) {
    for (k, &(i, j)) in ops.edges.iter().enumerate() {
        out[k] = ops.m_tilde[(i, j)] * (w[j] - w[i]) + d[k] * (u[i] - u[j]);
    }
}

/// Bar state `(u_i + u_j)/2 - c~_ij . (f(u_j) - f(u_i)) / (2 d~_ij)`.
#[inline]
pub fn bar_state(ui: f64, uj: f64, flux_difference: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.5 * (ui + uj);
    }
    0.5 * (ui + uj) - flux_difference / (2.0 * d)
}

/// Bound-preserving limit of a subcell flux from node `j` into node `i`.
/// The result has the sign of `f` or vanishes.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn idp_limit(
    f: f64,
    d: f64,
    bar_ij: f64,
    bar_ji: f64,
    min_i: f64,
    max_i: f64,
    min_j: f64,
    max_j: f64,
) -> f64 {
    if d <= 0.0 || f == 0.0 {
        return 0.0;
    }
    if f > 0.0 {
        f.min(2.0 * d * (max_i - bar_ij).min(bar_ji - min_j))
            .max(0.0)
    } else {
        f.max(2.0 * d * (min_i - bar_ij).max(bar_ji - max_j))
            .min(0.0)
    }
}

/// Entropy rate `q~_ij` of the low-order scheme for the ordered pair `(i, j)`
/// with the flux frozen at `x`.
#[inline]
pub fn pair_entropy_rate(flux: &FluxModel, ct: Vec2, d: f64, ui: f64, uj: f64, x: Vec2) -> f64 {
    pair_entropy_condition(flux, ct, d, 0.0, ui, uj, x)
}

/// Left side of the pairwise entropy condition with diffusion `d` and flux `fbar`.
#[inline]
pub fn pair_entropy_condition(
    flux: &FluxModel,
    ct: Vec2,
    d: f64,
    fbar: f64,
    ui: f64,
    uj: f64,
    x: Vec2,
) -> f64 {
    let vi = flux.entropy_variable(ui);
    let vj = flux.entropy_variable(uj);
    let fi = flux.flux(ui, x);
    let fj = flux.flux(uj, x);
    let psi = sub(flux.potential(uj, x), flux.potential(ui, x));
    0.5 * (vi - vj) * (d * (uj - ui) + fbar - dot(ct, [fi[0] + fj[0], fi[1] + fj[1]]))
        - dot(ct, psi)
}

/// Upper bound `p^{e,max}` for the total entropy production of the subcell pairs.
pub fn production_bound(
    ops: &ElementOperators,
    flux: &FluxModel,
    u: &[f64],
    node_x: &[Vec2],
) -> f64 {
    let n = ops.num_nodes();
    let mut s = 0.0;
    for i in 0..n {
        let vi = flux.entropy_variable(u[i]);
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = sub(ops.c_tilde_at(i, j), ops.c_at(i, j));
            if w == [0.0, 0.0] {
                continue;
            }
            let x = node_x[j];
            let vj = flux.entropy_variable(u[j]);
            let df = sub(flux.flux(u[j], x), flux.flux(u[i], x));
            let dq = sub(flux.entropy_flux(u[j], x), flux.entropy_flux(u[i], x));
            s += dot(
                w,
                [
                    0.5 * (vi - vj) * df[0] + dq[0],
                    0.5 * (vi - vj) * df[1] + dq[1],
                ],
            );
        }
    }
    s
}

/// Regularization used in the production split and the additional diffusion.
pub fn entropy_epsilon(pmax: f64, q: &[f64]) -> f64 {
    let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-12 * 1f64.max(pmax.abs()).max(qmax)
}

/// Splits `min(0, pmax)` into pair budgets proportional to `q~ - eps`.
pub fn distribute_production(q: &[f64], pmax: f64, eps: f64, out: &mut [f64]) {
    if pmax >= 0.0 || q.is_empty() {
        out[..q.len()].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let denom: f64 = q.iter().map(|&v| v.min(0.0) - eps).sum();
    for (o, &v) in out.iter_mut().zip(q) {
        *o = pmax * (v.min(0.0) - eps) / denom;
    }
}

/// Additional diffusion restoring `q~ <= p~` for both orientations of a pair.
#[allow(clippy::too_many_arguments)]
pub fn additional_diffusion(
    q_ij: f64,
    q_ji: f64,
    p_ij: f64,
    p_ji: f64,
    ui: f64,
    uj: f64,
    vi: f64,
    vj: f64,
    eps: f64,
) -> f64 {
    if q_ij <= p_ij && q_ji <= p_ji {
        return 0.0;
    }
    let num = 2.0 * (p_ij - q_ij).min(0.0).min(p_ji - q_ji);
    num / ((vi - vj) * (uj - ui) - eps)
}

/// Entropy-stable correction of a bound-preserving flux.
#[inline]
pub fn entropy_limit(fstar: f64, pbar_ij: f64, pbar_ji: f64, vi: f64, vj: f64) -> f64 {
    let dv = vi - vj;
    let prod = dv * fstar;
    if prod > 0.0 {
        (2.0 * pbar_ij).min(prod).min(2.0 * pbar_ji) / dv
    } else {
        fstar
    }
}

/// Activity counters and worst-case defects of the limiter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimiterStats {
    pub pairs: usize,
    /// Pairs whose flux was reduced by the bound-preserving limiter.
    pub idp_active: usize,
    /// Pairs whose flux was reduced by the entropy fix.
    pub entropy_active: usize,
    pub additional_diffusion_pairs: usize,
    pub max_additional_diffusion: f64,
    /// Most negative `p-bar` before clamping, relative to the element scale.
    pub min_relative_pbar: f64,
    /// Largest violation of the pairwise entropy condition, relative to the element scale.
    pub max_relative_entropy_defect: f64,
    /// Largest violation of `q~ <= 0`, relative to the element scale.
    pub max_relative_llf_rate: f64,
}

impl Default for LimiterStats {
    fn default() -> Self {
        Self {
            pairs: 0,
            idp_active: 0,
            entropy_active: 0,
            additional_diffusion_pairs: 0,
            max_additional_diffusion: 0.0,
            min_relative_pbar: 0.0,
            max_relative_entropy_defect: f64::NEG_INFINITY,
            max_relative_llf_rate: f64::NEG_INFINITY,
        }
    }
}

impl LimiterStats {
    pub fn merge(&mut self, o: &LimiterStats) {
        self.pairs += o.pairs;
        self.idp_active += o.idp_active;
        self.entropy_active += o.entropy_active;
        self.additional_diffusion_pairs += o.additional_diffusion_pairs;
        self.max_additional_diffusion = self
            .max_additional_diffusion
            .max(o.max_additional_diffusion);
        self.min_relative_pbar = self.min_relative_pbar.min(o.min_relative_pbar);
        self.max_relative_entropy_defect = self
            .max_relative_entropy_defect
            .max(o.max_relative_entropy_defect);
        self.max_relative_llf_rate = self.max_relative_llf_rate.max(o.max_relative_llf_rate);
    }
}

/// Scratch arrays for limiting one element.
#[derive(Clone, Debug)]
pub struct LimiterWorkspace {
    pub d: Vec<f64>,
    pub d_add: Vec<f64>,
    pub aux: Vec<f64>,
    pub w: Vec<f64>,
    pub f_raw: Vec<f64>,
    pub f_star: Vec<f64>,
    pub f_bar: Vec<f64>,
    /// Entropy rates, `q[2k]` for `(i, j)` and `q[2k + 1]` for `(j, i)` of edge `k`.
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub potentials: PotentialMatrices,
}

impl LimiterWorkspace {
    pub fn new(ops: &ElementOperators) -> Self {
        let n = ops.num_nodes();
        let m = ops.edges.len();
        Self {
            d: vec![0.0; m],
            d_add: vec![0.0; m],
            aux: vec![0.0; n],
            w: vec![0.0; n],
            f_raw: vec![0.0; m],
            f_star: vec![0.0; m],
            f_bar: vec![0.0; m],
            q: vec![0.0; 2 * m],
            p: vec![0.0; 2 * m],
            potentials: PotentialMatrices::new(ops),
        }
    }
}

/// Inputs of the compact-stencil form for one element.
pub struct ElementInputs<'a> {
    pub nodes: &'a [usize],
    pub bounds: &'a LocalBounds,
    /// Element coefficients of the stabilized time derivative.
    pub udot: &'a [f64],
    /// Element linear plus entropy-viscosity stabilization terms.
    pub stab: &'a [f64],
    /// Element integrals `int grad phi_i . f(u_h)`.
    pub weak: &'a [f64],
}

/// Runs the limiting pipeline on one element.
///
/// `out[i]` receives `sum_j [(d~ + d_add)(u_j - u_i) + f-bar_ij - c~_ij . (f_j - f_i)]`
/// and `rate[i]` receives `sum_j 2 (d~ + d_add)`.
pub fn limit_element(
    ws: &mut LimiterWorkspace,
    ops: &ElementOperators,
    flux: &FluxModel,
    mode: LimiterMode,
    u: &[f64],
    x: &[Vec2],
    inputs: &ElementInputs,
    out: &mut [f64],
    rate: &mut [f64],
    stats: &mut LimiterStats,
) -> Result<()> {
    let n = ops.num_nodes();
    llf_diffusion(ops, flux, u, x, &mut ws.d);
    ws.d_add.iter_mut().for_each(|v| *v = 0.0);

    if mode.uses_subcell_fluxes() {
        let scale = potential_rhs(
            ops,
            &ws.potentials,
            flux,
            u,
            x,
            inputs.udot,
            inputs.stab,
            inputs.weak,
            &mut ws.aux,
        );
        solve_flux_potentials(ops, &ws.aux, scale, &mut ws.w)?;
        raw_subcell_fluxes(ops, &ws.w, u, &ws.d, &mut ws.f_raw);
    } else {
        ws.f_raw.iter_mut().for_each(|v| *v = 0.0);
    }

    match mode {
        LimiterMode::None => {
            return Err(Error::InvalidScheme(
                "limiter pipeline called without a limiter".into(),
            ))
        }
        LimiterMode::LowOrder | LimiterMode::Raw => ws.f_bar.copy_from_slice(&ws.f_raw),
        LimiterMode::Bp | LimiterMode::Fl => {
            for (k, &(i, j)) in ops.edges.iter().enumerate() {
                let d = ws.d[k];
                let gi = inputs.nodes[i];
                let gj = inputs.nodes[j];
                let bar_ij = bar_state(
                    u[i],
                    u[j],
                    pair_flux_difference(flux, ops.c_tilde_at(i, j), u[i], u[j], x[j]),
                    d,
                );
                let bar_ji = bar_state(
                    u[j],
                    u[i],
                    pair_flux_difference(flux, ops.c_tilde_at(j, i), u[j], u[i], x[i]),
                    d,
                );
                let f = ws.f_raw[k];
                let b = inputs.bounds;
                let fs = idp_limit(
                    f, d, bar_ij, bar_ji, b.min[gi], b.max[gi], b.min[gj], b.max[gj],
                );
                if fs != f {
                    stats.idp_active += 1;
                }
                ws.f_star[k] = fs;
            }
            ws.f_bar.copy_from_slice(&ws.f_star);
        }
    }

    if mode == LimiterMode::Fl {
        entropy_fix(ws, ops, flux, u, x, stats);
    }

    stats.pairs += ops.edges.len();
    out[..n].iter_mut().for_each(|v| *v = 0.0);
    rate[..n].iter_mut().for_each(|v| *v = 0.0);
    for (k, &(i, j)) in ops.edges.iter().enumerate() {
        let dd = ws.d[k] + ws.d_add[k];
        let fb = ws.f_bar[k];
        let dfij = pair_flux_difference(flux, ops.c_tilde_at(i, j), u[i], u[j], x[j]);
        let dfji = pair_flux_difference(flux, ops.c_tilde_at(j, i), u[j], u[i], x[i]);
        out[i] += dd * (u[j] - u[i]) + fb - dfij;
        out[j] += dd * (u[i] - u[j]) - fb - dfji;
        rate[i] += 2.0 * dd;
        rate[j] += 2.0 * dd;
    }
    Ok(())
}

/// Entropy rates, production budgets, additional diffusion and the entropy fix.
fn entropy_fix(
    ws: &mut LimiterWorkspace,
    ops: &ElementOperators,
    flux: &FluxModel,
    u: &[f64],
    x: &[Vec2],
    stats: &mut LimiterStats,
) {
    for (k, &(i, j)) in ops.edges.iter().enumerate() {
        ws.q[2 * k] = pair_entropy_rate(flux, ops.c_tilde_at(i, j), ws.d[k], u[i], u[j], x[j]);
        ws.q[2 * k + 1] = pair_entropy_rate(flux, ops.c_tilde_at(j, i), ws.d[k], u[j], u[i], x[i]);
    }
    let pmax = production_bound(ops, flux, u, x);
    let eps = entropy_epsilon(pmax, &ws.q);
    let scale = eps / 1e-12;
    distribute_production(&ws.q, pmax, eps, &mut ws.p);
    for (k, &(i, j)) in ops.edges.iter().enumerate() {
        let (vi, vj) = (flux.entropy_variable(u[i]), flux.entropy_variable(u[j]));
        let (q_ij, q_ji) = (ws.q[2 * k], ws.q[2 * k + 1]);
        let (p_ij, p_ji) = (ws.p[2 * k], ws.p[2 * k + 1]);
        stats.max_relative_llf_rate = stats.max_relative_llf_rate.max(q_ij.max(q_ji) / scale);
        let da = additional_diffusion(q_ij, q_ji, p_ij, p_ji, u[i], u[j], vi, vj, eps);
        if da > 0.0 {
            stats.additional_diffusion_pairs += 1;
            stats.max_additional_diffusion = stats.max_additional_diffusion.max(da);
        }
        ws.d_add[k] = da;
        let shift = 0.5 * (vi - vj) * da * (u[j] - u[i]);
        let pbar_ij = p_ij - q_ij - shift;
        let pbar_ji = p_ji - q_ji - shift;
        stats.min_relative_pbar = stats.min_relative_pbar.min(pbar_ij.min(pbar_ji) / scale);
        let fb = entropy_limit(ws.f_star[k], pbar_ij.max(0.0), pbar_ji.max(0.0), vi, vj);
        if fb != ws.f_star[k] {
            stats.entropy_active += 1;
        }
        ws.f_bar[k] = fb;
        let dd = ws.d[k] + da;
        let lhs_ij = pair_entropy_condition(flux, ops.c_tilde_at(i, j), dd, fb, u[i], u[j], x[j]);
        let lhs_ji = pair_entropy_condition(flux, ops.c_tilde_at(j, i), dd, -fb, u[j], u[i], x[i]);
        let defect = (lhs_ij - p_ij).max(lhs_ji - p_ji) / scale;
        stats.max_relative_entropy_defect = stats.max_relative_entropy_defect.max(defect);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{assemble_element_operators, BasisKind};
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn p1_advection_diffusion_and_bar_states() {
        let m = Mesh::build_1d(0.0, 1.0, 4, 1).unwrap();
        let ops = assemble_element_operators(&m, 0, BasisKind::Bernstein, 3).unwrap();
        let flux = FluxModel::linear_advection([1.0, 0.0], 1);
        let mut d = vec![0.0; 1];
        llf_diffusion(&ops, &flux, &[0.3, 0.9], &[[0.0; 2], [0.25, 0.0]], &mut d);
        assert!((d[0] - 0.5).abs() < 1e-15);
        // upwind bar state
        let (ui, uj) = (0.3, 0.9);
        let b = bar_state(
            ui,
            uj,
            pair_flux_difference(&flux, [0.5, 0.0], ui, uj, [0.0; 2]),
            0.5,
        );
        assert!((b - ui).abs() < 1e-15);
        let burgers = FluxModel::burgers();
        let b = bar_state(
            0.7,
            -0.7,
            pair_flux_difference(&burgers, [0.5, 0.0], 0.7, -0.7, [0.0; 2]),
            0.35,
        );
        assert!(b.abs() < 1e-15);
        llf_diffusion(
            &ops,
            &burgers,
            &[0.4, 0.4],
            &[[0.0; 2], [0.25, 0.0]],
            &mut d,
        );
        assert!((d[0] - 0.5 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn local_bounds_cover_stencils() {
        let m = Mesh::build_1d(0.0, 1.0, 5, 1).unwrap();
        let u = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let b = local_bounds(&m.full_stencils(), &u);
        assert_eq!((b.min[2], b.max[2]), (1.0, 3.0));
        assert_eq!((b.min[0], b.max[0]), (0.0, 4.0));
        let b = local_bounds(&m.full_stencils(), &[2.5; 5]);
        assert!(b.min.iter().chain(&b.max).all(|&v| v == 2.5));
    }

    #[test]
    fn idp_limit_examples() {
        assert_eq!(idp_limit(0.0, 1.0, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0), 0.0);
        assert_eq!(idp_limit(0.3, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5), 0.0);
        assert_eq!(idp_limit(0.3, 0.0, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn idp_fuzz_keeps_bar_states_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let flux = FluxModel::burgers();
        for _ in 0..10_000 {
            let ui: f64 = rng.gen_range(-1.0..1.0);
            let uj: f64 = rng.gen_range(-1.0..1.0);
            let c = rng.gen_range(0.05..1.0);
            let d = c * flux
                .wave_speed(ui, uj, [1.0, 0.0], [0.0; 2])
                .max(c * flux.wave_speed(uj, ui, [-1.0, 0.0], [0.0; 2]));
            let bij = bar_state(
                ui,
                uj,
                pair_flux_difference(&flux, [c, 0.0], ui, uj, [0.0; 2]),
                d,
            );
            let bji = bar_state(
                uj,
                ui,
                pair_flux_difference(&flux, [-c, 0.0], uj, ui, [0.0; 2]),
                d,
            );
            let (mi, xi) = (
                ui.min(uj) - rng.gen_range(0.0..0.2),
                ui.max(uj) + rng.gen_range(0.0..0.2),
            );
            let (mj, xj) = (
                ui.min(uj) - rng.gen_range(0.0..0.2),
                ui.max(uj) + rng.gen_range(0.0..0.2),
            );
            let f = rng.gen_range(-2.0..2.0);
            let fs = idp_limit(f, d, bij, bji, mi, xi, mj, xj);
            assert!(fs.abs() <= f.abs() && fs * f >= 0.0);
            for alpha in [0.0, 0.5, 1.0] {
                let a = bij + alpha * fs / (2.0 * d);
                let b = bji - alpha * fs / (2.0 * d);
                assert!(a >= mi - 1e-14 && a <= xi + 1e-14);
                assert!(b >= mj - 1e-14 && b <= xj + 1e-14);
            }
        }
    }

    #[test]
    fn llf_entropy_rates_are_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let models = [
            (FluxModel::linear_advection([0.3, -1.2], 2), -2.0, 2.0),
            (FluxModel::burgers_directional([0.6, 0.8], 2), -2.0, 2.0),
            (FluxModel::buckley_leverett(), 0.0, 1.0),
            (FluxModel::kpp(), PI / 4.0, 3.5 * PI),
        ];
        for (flux, lo, hi) in models {
            for _ in 0..10_000 {
                let ui = rng.gen_range(lo..hi);
                let uj = rng.gen_range(lo..hi);
                let axis = rng.gen_range(0..2);
                let mut c: Vec2 = [0.0; 2];
                c[axis] = rng.gen_range(-1.0..1.0);
                let mut cr: Vec2 = [0.0; 2];
                cr[axis] = -c[axis] * rng.gen_range(0.2..2.0);
                let x = [0.1, 0.2];
                let n = |v: Vec2| {
                    let l = v[0].hypot(v[1]);
                    [v[0] / l, v[1] / l]
                };
                let l1 = c[axis].abs() * flux.wave_speed(ui, uj, n(c), x);
                let l2 = cr[axis].abs() * flux.wave_speed(uj, ui, n(cr), x);
                let d = l1.max(l2);
                let q = pair_entropy_rate(&flux, c, d, ui, uj, x);
                let scale = 1.0 + (d * (ui - uj).powi(2)).abs();
                assert!(q <= 1e-12 * scale, "{} q={q}", flux.name());
            }
        }
    }

    #[test]
    fn production_split_examples() {
        let mut out = vec![0.0; 3];
        distribute_production(&[-1.0, -2.0, 0.0], 0.3, 1e-12, &mut out);
        assert_eq!(out, vec![0.0; 3]);
        distribute_production(&[-0.5; 4], -4.0, 0.0, &mut out[..0]);
        let mut out = vec![0.0; 4];
        distribute_production(&[-0.5; 4], -4.0, 1e-12, &mut out);
        for v in &out {
            assert!((v + 1.0).abs() < 1e-12);
        }
        let q = [-0.1, -0.7, -0.2, 0.0];
        distribute_production(&q, -0.9, 1e-12, &mut out);
        assert!((out.iter().sum::<f64>() + 0.9).abs() < 1e-14);
        assert!(out.iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn additional_diffusion_examples() {
        assert_eq!(
            additional_diffusion(-1.0, -1.0, -0.5, -0.5, 1.0, 0.0, 1.0, 0.0, 1e-12),
            0.0
        );
        let eps = 1e-12;
        let d = additional_diffusion(0.0, 0.5, -0.5, 0.2, 1.0, 0.0, 1.0, 0.0, eps);
        assert!((d - 1.0).abs() < 1e-11);
        let e = additional_diffusion(0.5, 0.0, 0.2, -0.5, 0.0, 1.0, 0.0, 1.0, eps);
        assert_eq!(d, e);
    }

    #[test]
    fn entropy_limit_examples() {
        assert_eq!(entropy_limit(0.4, 0.0, 0.0, 0.0, 1.0), 0.4);
        assert_eq!(entropy_limit(0.4, 0.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(entropy_limit(-0.4, 1.0, 1.0, 0.0, 1.0), -0.4);
        let f = entropy_limit(0.4, 0.1, 0.05, 1.0, 0.0);
        assert!((f - 0.1).abs() < 1e-15);
        assert_eq!(
            entropy_limit(-0.4, 0.1, 0.05, 0.0, 1.0),
            -entropy_limit(0.4, 0.05, 0.1, 1.0, 0.0)
        );
    }

    #[test]
    fn p1_has_no_production_bound() {
        let m = Mesh::build_1d(0.0, 1.0, 5, 1).unwrap();
        let ops = assemble_element_operators(&m, 0, BasisKind::Bernstein, 3).unwrap();
        let x: Vec<Vec2> = (0..2).map(|k| ops.node_position([0.0, 0.0], k)).collect();
        for flux in [
            FluxModel::burgers(),
            FluxModel::linear_advection([1.0, 0.0], 1),
        ] {
            assert!(production_bound(&ops, &flux, &[0.9, -0.4], &x).abs() < 1e-15);
        }
        // Q1 lumping also lumps the transverse mass, so c~ differs from c
        let m = Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [3, 3], 1).unwrap();
        let ops = assemble_element_operators(&m, 0, BasisKind::Bernstein, 3).unwrap();
        let x: Vec<Vec2> = (0..4).map(|k| ops.node_position([0.0, 0.0], k)).collect();
        assert_eq!(
            production_bound(&ops, &FluxModel::kpp(), &[1.0; 4], &x),
            0.0
        );
        assert!(ops.c_at(0, 3) != [0.0, 0.0] && ops.c_tilde_at(0, 3) == [0.0, 0.0]);
    }
}
