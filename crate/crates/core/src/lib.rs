//! Adaptive optimizers over structured preconditioner cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`symkernels`]: dense symmetric matrices, Jacobi eigendecomposition,
//!   matrix square root / logarithm and the derivative of the logarithm.
//! * [`precond`]: the four preconditioner cones, their projection, norms,
//!   steepest-descent directions and metric ball projection.
//! * [`optimizers`]: adaptive (cumulative / EMA / weighted), normalized
//!   steepest descent with momentum, and accelerated variants.
//! * [`problems`]: quadratics with noise models, a separable tent objective
//!   and the lower-bound hard instance.
//! * [`analysis`]: smoothness and variance constants, matrix inequality
//!   validators and log-log rate fitting.

// `!(x > 0.0)` is how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod error;
pub mod optimizers;
pub mod precond;
pub mod problems;
pub mod rng;
pub mod symkernels;

pub use error::{Error, Result};
pub use precond::PreconditionerSet;
pub use symkernels::{EigDecomp, SymMatrix};
