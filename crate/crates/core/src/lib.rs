//! Numerics for the Wiman-Valiron inequality: maximum term, central index,
//! maximum modulus and the coefficient distribution of a power series, the
//! catalog of bound expressions, and exceptional sets measured under
//! h-logarithmic measure.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod logmag;
pub mod measures;
pub mod quadrature;
pub mod report;
pub mod rosenbloom;
pub mod series;

pub use error::{Error, Result};
pub use logmag::LogMagnitude;
pub use series::{MaxTermResult, PowerSeries};
