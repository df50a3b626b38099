//! Experiment runner and property-validation harness for `adageo`.

// `!(x > 0.0)` is how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod experiments;
pub mod lowerbound;
pub mod runner;
pub mod trace;
pub mod validate;

mod gen;

pub use error::{BenchError, ExitCode};
