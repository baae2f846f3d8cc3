//! Numerical toolkit for variable-exponent Lebesgue spaces on dyadic grids.

// `!(x > t)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod czd;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod sio;
pub mod weights;

pub use error::{Error, Result};
