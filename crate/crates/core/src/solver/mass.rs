//! Global consistent mass matrix and its solver.

use rayon::prelude::*;

use crate::basis::{element_matrices_1d, BasisKind};
use crate::error::{Error, Result};
use crate::linalg::{pcg, Csr, Dense, Lu};
use crate::mesh::Mesh;

/// Relative residual targeted by iterative mass solves.
pub const MASS_SOLVE_TOLERANCE: f64 = 1e-12;

/// Largest 1D system solved with a stored dense inverse instead of CG.
pub const DENSE_INVERSE_MAX_NODES: usize = 1024;

/// Solver for `M x = b` with the global consistent mass matrix.
///
/// In 1D small systems use a stored inverse and larger ones Jacobi-preconditioned
/// CG. In 2D the
/// matrix is the Kronecker product `M_y (x) M_x` of periodic 1D mass matrices,
/// so it is inverted factor by factor.
#[derive(Clone, Debug)]
pub enum MassSolver {
    Sparse {
        matrix: Csr,
        tolerance: f64,
    },
    Dense {
        mass: Dense,
        inverse: Dense,
    },
    Kronecker {
        nx: usize,
        ny: usize,
        mass_x: Dense,
        mass_y: Dense,
        inv_x: Dense,
        inv_y: Dense,
    },
}

fn periodic_mass_1d(
    kind: BasisKind,
    p: usize,
    cells: usize,
    h: f64,
    quadrature_points: usize,
) -> Result<Dense> {
    let (me, _) = element_matrices_1d(kind, p, quadrature_points, h)?;
    let n = p * cells;
    let mut m = Dense::zeros(n, n);
    for e in 0..cells {
        for a in 0..=p {
            for b in 0..=p {
                m[((e * p + a) % n, (e * p + b) % n)] += me[(a, b)];
            }
        }
    }
    Ok(m)
}

impl MassSolver {
    pub fn new(mesh: &Mesh, kind: BasisKind, quadrature_points: usize) -> Result<Self> {
        let p = mesh.degree();
        let h = mesh.cell_size();
        let cells = mesh.cells();
        let mass_x = periodic_mass_1d(kind, p, cells[0], h[0], quadrature_points)?;
        if mesh.dimension() == 1 && mass_x.rows <= DENSE_INVERSE_MAX_NODES {
            let inverse = Lu::factor(&mass_x)?.inverse();
            return Ok(MassSolver::Dense {
                mass: mass_x,
                inverse,
            });
        }
        if mesh.dimension() == 1 {
            let n = mass_x.rows;
            let mut triplets = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = mass_x[(i, j)];
                    if v != 0.0 {
                        triplets.push((i, j, v));
                    }
                }
            }
            return Ok(MassSolver::Sparse {
                matrix: Csr::from_triplets(n, triplets),
                tolerance: MASS_SOLVE_TOLERANCE,
            });
        }
        let mass_y = periodic_mass_1d(kind, p, cells[1], h[1], quadrature_points)?;
        let inv_x = Lu::factor(&mass_x)?.inverse();
        let inv_y = Lu::factor(&mass_y)?.inverse();
        Ok(MassSolver::Kronecker {
            nx: mass_x.rows,
            ny: mass_y.rows,
            mass_x,
            mass_y,
            inv_x,
            inv_y,
        })
    }

    /// Forces the iterative 1D solver and sets its relative residual target.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        if let MassSolver::Dense { mass, .. } = &self {
            let n = mass.rows;
            let triplets = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| mass[(i, j)] != 0.0);
            let triplets: Vec<_> = triplets.map(|(i, j)| (i, j, mass[(i, j)])).collect();
            self = MassSolver::Sparse {
                matrix: Csr::from_triplets(n, triplets),
                tolerance: tol,
            };
        }
        if let MassSolver::Sparse { tolerance, .. } = &mut self {
            *tolerance = tol;
        }
        self
    }

    pub fn len(&self) -> usize {
        match self {
            MassSolver::Sparse { matrix, .. } => matrix.n,
            MassSolver::Dense { mass, .. } => mass.rows,
            MassSolver::Kronecker { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            MassSolver::Sparse { matrix, .. } => matrix.matvec(x, y),
            MassSolver::Dense { mass, .. } => mass.matvec(x, y),
            MassSolver::Kronecker {
                nx,
                ny,
                mass_x,
                mass_y,
                ..
            } => kron_apply(*nx, *ny, mass_x, mass_y, x, y),
        }
    }

    /// Solves `M x = b`. `x` holds the initial guess for the iterative path.
    /// Returns the iteration count (0 for the direct path).
    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<usize> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mass solve right-hand side".into()));
        }
        match self {
            MassSolver::Sparse { matrix, tolerance } => {
                pcg(matrix, b, x, *tolerance, 10 * matrix.n + 100)
            }
            MassSolver::Dense { inverse, .. } => {
                inverse.matvec(b, x);
                Ok(0)
            }
            MassSolver::Kronecker {
                nx,
                ny,
                inv_x,
                inv_y,
                ..
            } => {
                kron_apply(*nx, *ny, inv_x, inv_y, b, x);
                Ok(0)
            }
        }
    }
}

/// `Y = A_y X A_x^T` for `X` stored row-major with rows indexed by y.
fn kron_apply(nx: usize, ny: usize, ax: &Dense, ay: &Dense, x: &[f64], y: &mut [f64]) {
    let mut t = vec![0.0; nx * ny];
    t.par_chunks_mut(nx)
        .zip(x.par_chunks(nx))
        .with_min_len(16)
        .for_each(|(trow, xrow)| ax.matvec(xrow, trow));
    let mut tt = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            tt[ix * ny + iy] = t[iy * nx + ix];
        }
    }
    let mut out = vec![0.0; nx * ny];
    out.par_chunks_mut(ny)
        .zip(tt.par_chunks(ny))
        .with_min_len(16)
        .for_each(|(orow, trow)| ay.matvec(trow, orow));
    for ix in 0..nx {
        for iy in 0..ny {
            y[iy * nx + ix] = out[ix * ny + iy];
        }
    }
}
