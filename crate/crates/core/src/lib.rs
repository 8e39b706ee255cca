// Index loops read closer to the tensor notation, and `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod fields;
pub mod framecalc;
pub mod models;
pub mod prescribe;
pub mod riemann;
pub mod validate;

pub use error::{Error, Result};
