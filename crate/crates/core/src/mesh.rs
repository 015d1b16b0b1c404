//! Periodic uniform meshes of intervals (1D) and quadrilaterals (2D) with the
//! global numbering of degree-p tensor-product nodes.

use crate::error::{Error, Result};

/// Point or vector in physical space. In 1D the second component is unused and zero.
pub type Vec2 = [f64; 2];

/// Periodic structured mesh with element/node connectivity.
///
/// Nodes form the equispaced lattice of the degree-p elements; node `(ix, iy)`
/// has index `iy * nx + ix` where `nx = p * cells_x`. Local nodes of an
/// element are ordered lexicographically with x running fastest.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    lower: Vec2,
    upper: Vec2,
    cells: [usize; 2],
    degree: usize,
    nodes_per_dir: [usize; 2],
    nodes_per_element: usize,
    element_nodes: Vec<usize>,
    node_elements: Vec<Vec<usize>>,
    coords: Vec<Vec2>,
}

impl Mesh {
    /// Builds a fully periodic uniform mesh.
    ///
    /// `lower`/`upper` and `cells` must contain `dimension` entries.
    pub fn build(
        dimension: usize,
        lower: &[f64],
        upper: &[f64],
        cells: &[usize],
        degree: usize,
    ) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidMesh(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if lower.len() != dimension || upper.len() != dimension || cells.len() != dimension {
            return Err(Error::InvalidMesh(
                "box corners and cell counts must match the dimension".into(),
            ));
        }
        if degree == 0 {
            return Err(Error::InvalidMesh(
                "polynomial degree must be at least 1".into(),
            ));
        }
        for d in 0..dimension {
            if cells[d] < 2 {
                return Err(Error::InvalidMesh(format!(
                    "periodic direction {d} needs at least 2 cells, got {}",
                    cells[d]
                )));
            }
            if !(upper[d] > lower[d]) || !lower[d].is_finite() || !upper[d].is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "empty or non-finite extent in direction {d}"
                )));
            }
        }

        let mut lo = [0.0; 2];
        let mut hi = [1.0; 2];
        let mut nc = [1usize; 2];
        for d in 0..dimension {
            lo[d] = lower[d];
            hi[d] = upper[d];
            nc[d] = cells[d];
        }
        let p = degree;
        let npd = [p * nc[0], if dimension == 2 { p * nc[1] } else { 1 }];
        let n_nodes = npd[0] * npd[1];
        let nle = if dimension == 2 {
            (p + 1) * (p + 1)
        } else {
            p + 1
        };
        let n_elem = nc[0] * nc[1];

        let mut element_nodes = Vec::with_capacity(n_elem * nle);
        for ey in 0..nc[1] {
            for ex in 0..nc[0] {
                if dimension == 1 {
                    for ax in 0..=p {
                        element_nodes.push((ex * p + ax) % npd[0]);
                    }
                } else {
                    for ay in 0..=p {
                        for ax in 0..=p {
                            let ix = (ex * p + ax) % npd[0];
                            let iy = (ey * p + ay) % npd[1];
                            element_nodes.push(iy * npd[0] + ix);
                        }
                    }
                }
            }
        }

        let mut node_elements = vec![Vec::new(); n_nodes];
        for e in 0..n_elem {
            for &i in &element_nodes[e * nle..(e + 1) * nle] {
                if node_elements[i].last() != Some(&e) {
                    node_elements[i].push(e);
                }
            }
        }

        let spacing = [
            (hi[0] - lo[0]) / npd[0] as f64,
            (hi[1] - lo[1]) / npd[1] as f64,
        ];
        let coords = (0..n_nodes)
            .map(|i| {
                let (ix, iy) = (i % npd[0], i / npd[0]);
                let y = if dimension == 2 {
                    lo[1] + iy as f64 * spacing[1]
                } else {
                    0.0
                };
                [lo[0] + ix as f64 * spacing[0], y]
            })
            .collect();

        Ok(Self {
            dim: dimension,
            lower: lo,
            upper: hi,
            cells: nc,
            degree,
            nodes_per_dir: npd,
            nodes_per_element: nle,
            element_nodes,
            node_elements,
            coords,
        })
    }

    pub fn build_1d(lower: f64, upper: f64, cells: usize, degree: usize) -> Result<Self> {
        Self::build(1, &[lower], &[upper], &[cells], degree)
    }

    pub fn build_2d(lower: Vec2, upper: Vec2, cells: [usize; 2], degree: usize) -> Result<Self> {
        Self::build(2, &lower, &upper, &cells, degree)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lower(&self) -> Vec2 {
        self.lower
    }

    pub fn upper(&self) -> Vec2 {
        self.upper
    }

    /// Cells per direction; the y entry is 1 in 1D.
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    /// Nodes per direction; the y entry is 1 in 1D.
    pub fn nodes_per_direction(&self) -> [usize; 2] {
        self.nodes_per_dir
    }

    pub fn num_elements(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    /// Cell extents `(h_x, h_y)`; `h_y = 1` in 1D so products give the cell measure.
    pub fn cell_size(&self) -> Vec2 {
        let hx = (self.upper[0] - self.lower[0]) / self.cells[0] as f64;
        let hy = if self.dim == 2 {
            (self.upper[1] - self.lower[1]) / self.cells[1] as f64
        } else {
            1.0
        };
        [hx, hy]
    }

    /// Cell measure |K|.
    pub fn cell_measure(&self) -> f64 {
        let h = self.cell_size();
        h[0] * h[1]
    }

    /// Characteristic element size |K|^(1/d).
    pub fn element_size(&self) -> f64 {
        self.cell_measure().powf(1.0 / self.dim as f64)
    }

    /// Global node indices of element `e` (the set N^e, in local order).
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let n = self.nodes_per_element;
        &self.element_nodes[e * n..(e + 1) * n]
    }

    /// Elements containing node `i` (the set E_i).
    pub fn node_elements(&self, i: usize) -> &[usize] {
        &self.node_elements[i]
    }

    /// Canonical coordinate of node `i` inside the periodic box.
    pub fn node_coord(&self, i: usize) -> Vec2 {
        self.coords[i]
    }

    pub fn coords(&self) -> &[Vec2] {
        &self.coords
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> Vec2 {
        let h = self.cell_size();
        let (ex, ey) = (e % self.cells[0], e / self.cells[0]);
        let y = if self.dim == 2 {
            self.lower[1] + ey as f64 * h[1]
        } else {
            0.0
        };
        [self.lower[0] + ex as f64 * h[0], y]
    }

    /// Maps a reference point in `[0,1]^d` of element `e` to physical space
    /// without periodic wrapping.
    pub fn map_to_physical(&self, e: usize, xi: Vec2) -> Vec2 {
        let o = self.element_origin(e);
        let h = self.cell_size();
        if self.dim == 2 {
            [o[0] + xi[0] * h[0], o[1] + xi[1] * h[1]]
        } else {
            [o[0] + xi[0] * h[0], 0.0]
        }
    }

    /// Canonical node index of lattice position `(ix, iy)` after periodic wrapping.
    pub fn canonical_node(&self, ix: isize, iy: isize) -> usize {
        let nx = self.nodes_per_dir[0] as isize;
        let ny = self.nodes_per_dir[1] as isize;
        let x = ix.rem_euclid(nx) as usize;
        let y = if self.dim == 2 {
            iy.rem_euclid(ny) as usize
        } else {
            0
        };
        y * self.nodes_per_dir[0] + x
    }

    /// Full stencil N_i: union of N^e over all elements containing node `i`, sorted.
    pub fn full_stencil(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                index: i,
                count: self.num_nodes(),
            });
        }
        let mut s: Vec<usize> = self.node_elements[i]
            .iter()
            .flat_map(|&e| self.element_nodes(e).iter().copied())
            .collect();
        s.sort_unstable();
        s.dedup();
        Ok(s)
    }

    /// Full stencils of all nodes.
    pub fn full_stencils(&self) -> Vec<Vec<usize>> {
        (0..self.num_nodes())
            .map(|i| self.full_stencil(i).expect("valid node"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_counts() {
        let m = Mesh::build_1d(0.0, 1.0, 4, 1).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_elements(), 4);
        for e in 0..4 {
            assert_eq!(m.element_nodes(e).len(), 2);
        }
        assert_eq!(m.element_nodes(3), &[3, 0]);
        let m = Mesh::build_1d(0.0, 1.0, 8, 2).unwrap();
        assert_eq!(m.num_nodes(), 16);
    }

    #[test]
    fn two_dimensional_counts() {
        let m = Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [4, 4], 1).unwrap();
        assert_eq!(m.num_nodes(), 16);
        for i in 0..16 {
            assert_eq!(m.node_elements(i).len(), 4);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::build_1d(0.0, 1.0, 4, 0).is_err());
        assert!(Mesh::build_1d(0.0, 1.0, 1, 2).is_err());
        assert!(Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [4, 1], 1).is_err());
        assert!(Mesh::build(3, &[0.0; 3], &[1.0; 3], &[2; 3], 1).is_err());
        assert!(Mesh::build_1d(1.0, 1.0, 4, 1).is_err());
    }

    #[test]
    fn stencils() {
        let m = Mesh::build_1d(0.0, 1.0, 8, 1).unwrap();
        assert_eq!(m.full_stencil(0).unwrap(), vec![0, 1, 7]);
        let m = Mesh::build_1d(0.0, 1.0, 8, 2).unwrap();
        // node 2 sits on the interface of cells 0 and 1
        assert_eq!(m.full_stencil(2).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(m.full_stencil(1).unwrap().len(), 3);
        let m = Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [4, 4], 1).unwrap();
        for i in 0..16 {
            assert_eq!(m.full_stencil(i).unwrap().len(), 9);
        }
        assert!(matches!(
            m.full_stencil(16),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn connectivity_is_consistent() {
        for (dim, p) in [(1, 3), (2, 2)] {
            let m = if dim == 1 {
                Mesh::build_1d(0.0, 2.0, 5, p).unwrap()
            } else {
                Mesh::build_2d([0.0, 0.0], [1.0, 2.0], [3, 4], p).unwrap()
            };
            let total_local: usize = (0..m.num_elements())
                .map(|e| m.element_nodes(e).len())
                .sum();
            let total_incidence: usize = (0..m.num_nodes()).map(|i| m.node_elements(i).len()).sum();
            assert_eq!(total_local, total_incidence);
            let mut seen = vec![false; m.num_nodes()];
            for e in 0..m.num_elements() {
                for &i in m.element_nodes(e) {
                    seen[i] = true;
                    assert!(m.node_elements(i).contains(&e));
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn translation_by_a_period_keeps_connectivity() {
        let a = Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [3, 5], 2).unwrap();
        let b = Mesh::build_2d([1.0, -1.0], [2.0, 0.0], [3, 5], 2).unwrap();
        for e in 0..a.num_elements() {
            assert_eq!(a.element_nodes(e), b.element_nodes(e));
        }
        for i in 0..a.num_nodes() {
            assert_eq!(a.node_elements(i), b.node_elements(i));
        }
    }

    #[test]
    fn canonical_wrapping() {
        let m = Mesh::build_2d([0.0, 0.0], [1.0, 1.0], [2, 2], 2).unwrap();
        assert_eq!(m.canonical_node(4, 0), 0);
        assert_eq!(m.canonical_node(-1, -1), 15);
    }
}
