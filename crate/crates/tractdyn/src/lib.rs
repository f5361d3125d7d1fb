// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fit;
pub mod linearizer;
pub mod poly;
pub mod quad;
pub mod sampling;
pub mod spectrum;
pub mod tract;
pub mod transfer;

pub use error::{Error, Result};

/// The scalar type used throughout.
pub type Complex = num_complex::Complex64;
