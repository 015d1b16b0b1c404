//! Reference bases, quadrature and element operators.

mod operators;
mod quadrature;
mod reference;

pub(crate) use operators::element_matrices_1d;
pub use operators::{
    assemble_element_operators, global_skew_check, ElementOperators, ProjectedPolynomial,
    SubcellInterpolant, LUMPED_GRADIENT_TRUNCATION,
};
pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule, MAX_POINTS_PER_DIRECTION};
pub use reference::{bernstein_1d, lagrange_1d, BasisKind, ReferenceBasis};
