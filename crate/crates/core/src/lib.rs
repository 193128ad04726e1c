//! Nijenhuis operator fields in upper triangular Toeplitz form.
//!
//! The crate is `no_std` with `alloc`: everything here is pure numerics.
//! File formats, the command line and thread pools live in the `nijtoep`
//! crate.

#![no_std]

extern crate alloc;

pub mod chart;
pub mod conditions;
pub mod error;
pub mod expr;
pub mod field;
pub mod generator;
pub mod linalg;
pub mod series;
pub mod toeplitz;
pub mod transform;

pub use chart::{Grid, GridFunction};
pub use error::{Error, Result};
pub use expr::Expression;
pub use field::{OperatorFieldSpec, Tensor12};
pub use linalg::Matrix;
pub use series::{Scalar, TruncatedSeries};
pub use toeplitz::ToeplitzCoeffs;
