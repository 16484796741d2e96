// NaN-aware checks such as `!(x > 0.0)` are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod error;
pub mod imagination;
pub mod nn;
pub mod policy;
pub mod trainer;

pub use error::{Error, Result};
