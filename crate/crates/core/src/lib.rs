// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod mc;
pub mod optim;
pub mod quad;
pub mod rates;
pub mod specfun;

pub use error::{Error, Result};
