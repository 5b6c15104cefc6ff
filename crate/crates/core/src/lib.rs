// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod ed;
pub mod ensembles;
pub mod ergodicity;
pub mod error;
pub mod hilbert;
pub mod ionchain;
pub mod model;
pub mod numeric;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
