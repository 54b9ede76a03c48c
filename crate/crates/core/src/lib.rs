//! Numerical laboratory for weighted positivity of elliptic operators and
//! domain-independent pointwise multiplicative inequalities.
//!
//! The crate discretizes three operator families (scalar divergence form,
//! the 3D Lame system, polyharmonic powers of the Laplacian) on masked
//! uniform grids, evaluates their fundamental solutions and weighted
//! quadratic forms, and drives the inequality, Hardy, Green-bound, and
//! critical-exponent experiments behind the `epl` command line tool.

pub mod error;
pub mod fundsol;
pub mod grid;
pub mod inequalities;
pub mod operators;
pub mod parallel;
pub mod positivity;
pub mod report;

pub use error::{Error, Result};
