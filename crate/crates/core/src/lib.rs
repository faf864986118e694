//! Two-dimensional linear elasticity on two independently meshed subdomains
//! whose discrete interfaces do not coincide, coupled by a relaxed
//! Dirichlet-Neumann iteration with Taylor-corrected transfer operators and
//! quadratic gradient recovery.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dn;
pub mod elasticity;
pub mod error;
pub mod experiments;
pub mod interface;
pub mod locate;
pub mod manufactured;
pub mod mesh;
pub mod quadrature;
pub mod recovery;
pub mod sparse;

pub use dn::{CoupledSolution, CouplingProblem, CouplingState, DnSolver, InterfaceResidual};
pub use elasticity::{ExactSolution, Field, LameParams, VectorField};
pub use error::{Error, Result};
pub use mesh::{BoundaryTag, Mesh, MeshPair};
