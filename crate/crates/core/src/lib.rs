// `!(x >= 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aaqst;
pub mod cli;
pub mod dd;
pub mod error;
pub mod extended;
pub mod files;
pub mod ga;
pub mod lsq;
pub mod macrorealism;
pub mod measurement;
pub mod noon;
pub mod quadrature;
pub mod quantum;
pub mod sspt;

pub use error::{Error, Result};
