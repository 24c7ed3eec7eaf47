//! Numerical toolkit for generalized Grünbaum inequalities: one-dimensional
//! CD(0,N)-class densities, Euclidean `s`-concave measures and Tukey depth,
//! split product spaces with needle decompositions, and stability
//! certificates.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod core1d;
pub mod error;
pub mod exec;
pub mod io;
pub mod nd;
pub mod product;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
pub use exec::Exec;
