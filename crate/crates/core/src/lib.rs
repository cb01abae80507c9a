//! Spectral (Navier) and restricted (Dirichlet) fractional Laplacians on
//! grid domains, obstacle-problem solvers built on them, and numerical checks
//! of the discrete comparison, regularity and extension properties.

// `!(x > 0.0)`-style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod experiment;
pub mod extension;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod restricted_op;
pub mod special;
pub mod spectral_op;
pub mod theorems;
pub mod vi_solver;

pub use error::{Error, Result};
pub use grid::{BoxGrid, DomainMask, NestedFamily};
pub use operator::SpdOperator;
pub use par::Executor;
pub use restricted_op::{KernelRule, RestrictedOperator};
pub use spectral_op::{NavierOperator, SpectralDecomposition};
pub use vi_solver::{Obstacle, ObstacleProblem, Solution};
