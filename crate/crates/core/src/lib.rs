//! Entropy-stable and bound-preserving continuous Galerkin schemes for scalar
//! conservation laws on periodic uniform meshes.

pub mod basis;
pub mod error;
pub mod limiter;
pub mod linalg;
pub mod mesh;
pub mod physics;
pub mod solver;
pub mod stabilization;
pub mod time_integration;
pub mod verify;

pub use basis::{BasisKind, ElementOperators};
pub use error::{Error, Result};
pub use mesh::{Mesh, Vec2};
pub use physics::{benchmark, BenchmarkProblem, FluxModel};
