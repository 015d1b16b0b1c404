//! Element matrices of a uniform mesh: mass, discrete gradients, lumped gradients,
//! subcell mass, entropy-viscosity form and the local projection onto degree p-1.

use std::collections::HashMap;

use super::quadrature::QuadratureRule;
use super::reference::{bernstein_1d, BasisKind, ReferenceBasis};
use crate::error::{Error, Result};
use crate::linalg::{Dense, Lu};
use crate::mesh::{Mesh, Vec2};

/// Relative threshold below which lumped gradient entries are set to zero.
pub const LUMPED_GRADIENT_TRUNCATION: f64 = 1e-13;

/// Per-element operators. On a uniform mesh every element shares the same
/// matrices, so one instance serves the whole mesh.
#[derive(Clone, Debug)]
pub struct ElementOperators {
    pub basis: ReferenceBasis,
    pub cell_size: Vec2,
    pub measure: f64,
    pub quadrature: QuadratureRule,
    /// Quadrature weights scaled by the element measure.
    pub weights: Vec<f64>,
    /// `phi[q * n + j]`: basis function j at quadrature point q.
    pub phi: Vec<f64>,
    /// Physical gradients at quadrature points, same layout as `phi`.
    pub grad_phi: Vec<Vec2>,
    /// Lagrange functions of the same degree at quadrature points.
    pub lagrange_at_quad: Vec<f64>,
    /// `node_values[(k, j)] = phi_j(x_k)` on the node lattice.
    pub node_values: Dense,
    pub node_values_inverse: Dense,
    /// `node_gradients[k * n + j]`: physical gradient of phi_j at lattice node k.
    pub node_gradients: Vec<Vec2>,
    pub mass: Dense,
    pub lumped: Vec<f64>,
    /// Components of `c_ij = int phi_i grad phi_j`.
    pub c: [Dense; 2],
    /// Components of the lumped gradient `M_L M_C^{-1} C`.
    pub c_tilde: [Dense; 2],
    /// Compact stencil as undirected pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub neighbors: Vec<Vec<usize>>,
    /// Subcell P1/Q1 mass on the compact stencil, rows summing to zero.
    pub m_tilde: Dense,
    potential_inverse: Dense,
    /// Matrix of `int (i1 w - i0 w)(i1 v - i0 v)` in basis coefficients.
    pub ev_matrix: Dense,
    /// Values of the local L2 projection onto Q_{p-1} at quadrature points.
    pub projection_at_quad: Dense,
    projection_coefficients: Dense,
}

impl ElementOperators {
    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn num_nodes(&self) -> usize {
        self.basis.num_functions()
    }

    pub fn num_quadrature_points(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn c_tilde_at(&self, i: usize, j: usize) -> Vec2 {
        [self.c_tilde[0][(i, j)], self.c_tilde[1][(i, j)]]
    }

    #[inline]
    pub fn c_at(&self, i: usize, j: usize) -> Vec2 {
        [self.c[0][(i, j)], self.c[1][(i, j)]]
    }

    /// Physical position of local node `k` of an element with lower-left corner `origin`.
    pub fn node_position(&self, origin: Vec2, k: usize) -> Vec2 {
        let xi = self.basis.lattice_point(k);
        [
            origin[0] + xi[0] * self.cell_size[0],
            origin[1] + xi[1] * self.cell_size[1] * self.y_scale(),
        ]
    }

    /// Physical position of quadrature point `q`.
    pub fn quadrature_position(&self, origin: Vec2, q: usize) -> Vec2 {
        let xi = self.quadrature.points[q];
        [
            origin[0] + xi[0] * self.cell_size[0],
            origin[1] + xi[1] * self.cell_size[1] * self.y_scale(),
        ]
    }

    fn y_scale(&self) -> f64 {
        if self.dimension() == 2 {
            1.0
        } else {
            0.0
        }
    }

    /// Solves the pinned subcell potential system. Potential 0 is fixed to zero.
    ///
    /// `scale` is the magnitude of the terms that produced `rhs`; the sum of the
    /// right-hand side must vanish relative to it.
    pub fn solve_potentials(&self, rhs: &[f64], scale: f64, out: &mut [f64]) -> Result<()> {
        let n = self.num_nodes();
        let sum: f64 = rhs.iter().sum();
        let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
        if sum.abs() > tol {
            return Err(Error::InconsistentPotentialRhs { sum, tol });
        }
        out[0] = 0.0;
        for r in 1..n {
            let row = self.potential_inverse.row(r - 1);
            out[r] = row.iter().zip(&rhs[1..]).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    /// Quadratic form of the entropy-viscosity bilinear form.
    pub fn ev_form(&self, w: &[f64], v: &[f64]) -> f64 {
        let n = self.num_nodes();
        let mut s = 0.0;
        for i in 0..n {
            let row = self.ev_matrix.row(i);
            s += w[i] * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
        s
    }

    /// Basis coefficients of the interpolant of nodal values on the lattice.
    pub fn interpolation_coefficients(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; nodal.len()];
        self.node_values_inverse.matvec(nodal, &mut out);
        out
    }

    /// Piecewise multilinear interpolant of lattice values and its subcell averages.
    pub fn subcell_interpolants(&self, nodal_values: &[f64]) -> SubcellInterpolant {
        SubcellInterpolant {
            degree: self.degree(),
            dimension: self.dimension(),
            values: nodal_values.to_vec(),
        }
    }

    /// Local L2 projection of the element polynomial with coefficients `u` onto Q_{p-1}.
    pub fn local_projection_pm1(&self, u: &[f64]) -> ProjectedPolynomial {
        let mut coeffs = vec![0.0; self.projection_coefficients.rows];
        self.projection_coefficients.matvec(u, &mut coeffs);
        ProjectedPolynomial {
            degree: self.degree() - 1,
            dimension: self.dimension(),
            coefficients: coeffs,
        }
    }
}

/// Subcell interpolants `i_h1` (continuous multilinear) and `i_h0` (subcell averages).
#[derive(Clone, Debug)]
pub struct SubcellInterpolant {
    degree: usize,
    dimension: usize,
    values: Vec<f64>,
}

impl SubcellInterpolant {
    fn locate(&self, x: f64) -> (usize, f64) {
        let p = self.degree as f64;
        let s = ((x * p).floor().max(0.0) as usize).min(self.degree - 1);
        (s, x * p - s as f64)
    }

    fn value(&self, ax: usize, ay: usize) -> f64 {
        self.values[ay * (self.degree + 1) + ax]
    }

    /// Multilinear interpolant at reference point `xi`.
    pub fn linear(&self, xi: Vec2) -> f64 {
        let (sx, tx) = self.locate(xi[0]);
        if self.dimension == 1 {
            return (1.0 - tx) * self.value(sx, 0) + tx * self.value(sx + 1, 0);
        }
        let (sy, ty) = self.locate(xi[1]);
        (1.0 - tx) * (1.0 - ty) * self.value(sx, sy)
            + tx * (1.0 - ty) * self.value(sx + 1, sy)
            + (1.0 - tx) * ty * self.value(sx, sy + 1)
            + tx * ty * self.value(sx + 1, sy + 1)
    }

    /// Average of the multilinear interpolant over the subcell containing `xi`.
    pub fn average(&self, xi: Vec2) -> f64 {
        let (sx, _) = self.locate(xi[0]);
        if self.dimension == 1 {
            return 0.5 * (self.value(sx, 0) + self.value(sx + 1, 0));
        }
        let (sy, _) = self.locate(xi[1]);
        0.25 * (self.value(sx, sy)
            + self.value(sx + 1, sy)
            + self.value(sx, sy + 1)
            + self.value(sx + 1, sy + 1))
    }
}

/// Polynomial of tensor degree `p-1` in Bernstein form on the reference element.
#[derive(Clone, Debug)]
pub struct ProjectedPolynomial {
    pub degree: usize,
    pub dimension: usize,
    pub coefficients: Vec<f64>,
}

impl ProjectedPolynomial {
    pub fn eval(&self, xi: Vec2) -> f64 {
        let q = self.degree;
        let mut bx = vec![0.0; q + 1];
        let mut dx = vec![0.0; q + 1];
        bernstein_1d(q, xi[0], &mut bx, &mut dx);
        if self.dimension == 1 {
            return bx.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
        }
        let mut by = vec![0.0; q + 1];
        let mut dy = vec![0.0; q + 1];
        bernstein_1d(q, xi[1], &mut by, &mut dy);
        let mut s = 0.0;
        for ay in 0..=q {
            for ax in 0..=q {
                s += self.coefficients[ay * (q + 1) + ax] * bx[ax] * by[ay];
            }
        }
        s
    }
}

fn p1_lattice_mass(p: usize, s: f64) -> Dense {
    let mut m = Dense::zeros(p + 1, p + 1);
    for cell in 0..p {
        m[(cell, cell)] += s / 3.0;
        m[(cell + 1, cell + 1)] += s / 3.0;
        m[(cell, cell + 1)] += s / 6.0;
        m[(cell + 1, cell)] += s / 6.0;
    }
    m
}

/// Values of the tensor Bernstein basis of degree `q` at `xi`.
fn bernstein_tensor(q: usize, dimension: usize, xi: Vec2) -> Vec<f64> {
    let mut bx = vec![0.0; q + 1];
    let mut dx = vec![0.0; q + 1];
    bernstein_1d(q, xi[0], &mut bx, &mut dx);
    if dimension == 1 {
        return bx;
    }
    let mut by = vec![0.0; q + 1];
    let mut dy = vec![0.0; q + 1];
    bernstein_1d(q, xi[1], &mut by, &mut dy);
    let mut out = Vec::with_capacity((q + 1) * (q + 1));
    for ay in 0..=q {
        for ax in 0..=q {
            out.push(bx[ax] * by[ay]);
        }
    }
    out
}

/// 1D element mass and gradient matrices on a cell of width `h`.
pub(crate) fn element_matrices_1d(
    kind: BasisKind,
    p: usize,
    quadrature_points: usize,
    h: f64,
) -> Result<(Dense, Dense)> {
    let basis = ReferenceBasis::new(kind, p, 1)?;
    let rule = QuadratureRule::tensor(quadrature_points, 1)?;
    let n = p + 1;
    let mut mass = Dense::zeros(n, n);
    let mut c = Dense::zeros(n, n);
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 2]; n];
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval(*xi, &mut v, &mut g);
        for i in 0..n {
            for j in 0..n {
                mass[(i, j)] += w * h * v[i] * v[j];
                c[(i, j)] += w * v[i] * g[j][0];
            }
        }
    }
    Ok((mass, c))
}

/// Lumped 1D gradient `M_L M^{-1} C` on a cell of width `h`, with the lumped masses.
fn lumped_gradient_1d(
    kind: BasisKind,
    p: usize,
    quadrature_points: usize,
    h: f64,
) -> Result<(Dense, Vec<f64>)> {
    let n = p + 1;
    let (mass, c) = element_matrices_1d(kind, p, quadrature_points, h)?;
    let lumped: Vec<f64> = (0..n).map(|i| mass.row(i).iter().sum()).collect();
    let mut ct = Lu::factor(&mass)?.inverse().mul(&c);
    for i in 0..n {
        for j in 0..n {
            ct[(i, j)] *= lumped[i];
        }
    }
    Ok((ct, lumped))
}

/// Assembles the operators of `element` with a tensor Gauss rule of
/// `quadrature_points` points per direction.
pub fn assemble_element_operators(
    mesh: &Mesh,
    element: usize,
    kind: BasisKind,
    quadrature_points: usize,
) -> Result<ElementOperators> {
    if element >= mesh.num_elements() {
        return Err(Error::InvalidMesh(format!(
            "element {element} out of range ({})",
            mesh.num_elements()
        )));
    }
    let dim = mesh.dimension();
    let p = mesh.degree();
    let basis = ReferenceBasis::new(kind, p, dim)?;
    let lagrange = ReferenceBasis::new(BasisKind::Lagrange, p, dim)?;
    let n = basis.num_functions();
    let h = mesh.cell_size();
    let measure = mesh.cell_measure();
    let inv_h = [1.0 / h[0], if dim == 2 { 1.0 / h[1] } else { 0.0 }];
    let quadrature = QuadratureRule::tensor(quadrature_points, dim)?;
    let nq = quadrature.len();

    let weights: Vec<f64> = quadrature.weights.iter().map(|w| w * measure).collect();
    let mut phi = vec![0.0; nq * n];
    let mut grad_phi = vec![[0.0; 2]; nq * n];
    let mut lagrange_at_quad = vec![0.0; nq * n];
    let mut scratch_g = vec![[0.0; 2]; n];
    for q in 0..nq {
        let xi = quadrature.points[q];
        basis.eval(xi, &mut phi[q * n..(q + 1) * n], &mut scratch_g);
        for j in 0..n {
            grad_phi[q * n + j] = [scratch_g[j][0] * inv_h[0], scratch_g[j][1] * inv_h[1]];
        }
        lagrange.eval(
            xi,
            &mut lagrange_at_quad[q * n..(q + 1) * n],
            &mut scratch_g,
        );
    }

    let mut node_values = Dense::zeros(n, n);
    let mut node_gradients = vec![[0.0; 2]; n * n];
    let mut vals = vec![0.0; n];
    for k in 0..n {
        basis.eval(basis.lattice_point(k), &mut vals, &mut scratch_g);
        for j in 0..n {
            node_values[(k, j)] = vals[j];
            node_gradients[k * n + j] = [scratch_g[j][0] * inv_h[0], scratch_g[j][1] * inv_h[1]];
        }
    }
    let node_values_inverse = Lu::factor(&node_values)?.inverse();

    let mut mass = Dense::zeros(n, n);
    let mut c = [Dense::zeros(n, n), Dense::zeros(n, n)];
    for q in 0..nq {
        let w = weights[q];
        for i in 0..n {
            let pi = phi[q * n + i] * w;
            for j in 0..n {
                mass[(i, j)] += pi * phi[q * n + j];
                let g = grad_phi[q * n + j];
                c[0][(i, j)] += pi * g[0];
                c[1][(i, j)] += pi * g[1];
            }
        }
    }
    let lumped: Vec<f64> = (0..n).map(|i| mass.row(i).iter().sum()).collect();
    if lumped.iter().any(|&m| m <= 0.0) && kind == BasisKind::Bernstein {
        return Err(Error::Singular("non-positive lumped mass".into()));
    }

    Lu::factor(&mass).map_err(|e| Error::Singular(format!("element mass matrix: {e}")))?;
    // The element matrices are Kronecker products of 1D factors, so the
    // lumped gradient is built from 1D solves.
    let (ctx, lx) = lumped_gradient_1d(kind, p, quadrature_points, h[0])?;
    let mut c_tilde = [Dense::zeros(n, n), Dense::zeros(n, n)];
    if dim == 1 {
        c_tilde[0] = ctx;
    } else {
        let (cty, ly) = lumped_gradient_1d(kind, p, quadrature_points, h[1])?;
        for i in 0..n {
            let (ax, ay) = basis.lattice_index(i);
            for j in 0..n {
                let (bx, by) = basis.lattice_index(j);
                if ay == by {
                    c_tilde[0][(i, j)] = ctx[(ax, bx)] * ly[ay];
                }
                if ax == bx {
                    c_tilde[1][(i, j)] = lx[ax] * cty[(ay, by)];
                }
            }
        }
    }
    let ct_max = c_tilde[0].max_abs().max(c_tilde[1].max_abs());
    for ct in c_tilde.iter_mut() {
        for v in ct.data.iter_mut() {
            if v.abs() < LUMPED_GRADIENT_TRUNCATION * ct_max {
                *v = 0.0;
            }
        }
    }

    let norm2 =
        |i: usize, j: usize| (c_tilde[0][(i, j)].powi(2) + c_tilde[1][(i, j)].powi(2)).sqrt();
    let mut edges = Vec::new();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if norm2(i, j) + norm2(j, i) > 0.0 {
                edges.push((i, j));
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }

    let sx = h[0] / p as f64;
    let sy = if dim == 2 { h[1] / p as f64 } else { 1.0 };
    let mx = p1_lattice_mass(p, sx);
    let my = if dim == 2 {
        p1_lattice_mass(p, sy)
    } else {
        Dense::identity(1)
    };
    let mut m_tilde = Dense::zeros(n, n);
    for &(i, j) in &edges {
        let (ai, bi) = basis.lattice_index(i);
        let (aj, bj) = basis.lattice_index(j);
        let v = mx[(ai, aj)] * my[(bi, bj)];
        m_tilde[(i, j)] = v;
        m_tilde[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m_tilde[(i, j)]).sum();
        m_tilde[(i, i)] = -off;
    }
    let reduced = Dense::from_fn(n - 1, n - 1, |r, s| m_tilde[(r + 1, s + 1)]);
    let potential_inverse = Lu::factor(&reduced)
        .map_err(|e| Error::Singular(format!("subcell potential system: {e}")))?
        .inverse();

    // Subcell form on lattice values, pulled back to basis coefficients.
    let mut s_lattice = Dense::zeros(n, n);
    let sub_measure = sx * sy;
    let corners: Vec<(usize, usize)> = if dim == 1 {
        vec![(0, 0), (1, 0)]
    } else {
        vec![(0, 0), (1, 0), (0, 1), (1, 1)]
    };
    let local_mass = |a: (usize, usize), b: (usize, usize)| {
        let fx = if a.0 == b.0 { sx / 3.0 } else { sx / 6.0 };
        let fy = if dim == 1 {
            1.0
        } else if a.1 == b.1 {
            sy / 3.0
        } else {
            sy / 6.0
        };
        fx * fy
    };
    let avg_weight = sub_measure / 4f64.powi(dim as i32);
    let nsub_y = if dim == 2 { p } else { 1 };
    for cy in 0..nsub_y {
        for cx in 0..p {
            for &a in &corners {
                let ka = (cy + a.1) * (p + 1) + cx + a.0;
                for &b in &corners {
                    let kb = (cy + b.1) * (p + 1) + cx + b.0;
                    s_lattice[(ka, kb)] += local_mass(a, b) - avg_weight;
                }
            }
        }
    }
    let ev_matrix = node_values.transpose().mul(&s_lattice).mul(&node_values);

    let q = p - 1;
    let np = (q + 1).pow(dim as u32);
    let mut gram = Dense::zeros(np, np);
    let mut cross = Dense::zeros(np, n);
    let mut psi_q = Dense::zeros(nq, np);
    for iq in 0..nq {
        let psi = bernstein_tensor(q, dim, quadrature.points[iq]);
        let w = weights[iq];
        for a in 0..np {
            psi_q[(iq, a)] = psi[a];
            for b in 0..np {
                gram[(a, b)] += w * psi[a] * psi[b];
            }
            for j in 0..n {
                cross[(a, j)] += w * psi[a] * phi[iq * n + j];
            }
        }
    }
    let projection_coefficients = Lu::factor(&gram)?.inverse().mul(&cross);
    let projection_at_quad = psi_q.mul(&projection_coefficients);

    Ok(ElementOperators {
        basis,
        cell_size: h,
        measure,
        quadrature,
        weights,
        phi,
        grad_phi,
        lagrange_at_quad,
        node_values,
        node_values_inverse,
        node_gradients,
        mass,
        lumped,
        c,
        c_tilde,
        edges,
        neighbors,
        m_tilde,
        potential_inverse,
        ev_matrix,
        projection_at_quad,
        projection_coefficients,
    })
}

/// Largest defect `|sum_e (c_ij^e + c_ji^e)|` over all global node pairs.
pub fn global_skew_check(mesh: &Mesh, ops: &ElementOperators) -> f64 {
    let n = ops.num_nodes();
    let mut acc: HashMap<(usize, usize), Vec2> = HashMap::new();
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        for i in 0..n {
            for j in 0..n {
                let s = [
                    ops.c[0][(i, j)] + ops.c[0][(j, i)],
                    ops.c[1][(i, j)] + ops.c[1][(j, i)],
                ];
                let entry = acc.entry((nodes[i], nodes[j])).or_insert([0.0, 0.0]);
                entry[0] += s[0];
                entry[1] += s[1];
            }
        }
    }
    acc.values()
        .fold(0.0_f64, |m, v| m.max(v[0].abs()).max(v[1].abs()))
}
