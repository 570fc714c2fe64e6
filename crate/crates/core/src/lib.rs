//! Multiverse analysis of benchmark studies.
//!
//! Enumerates every combination of data-set subgroup, performance measure,
//! missing-value imputation and aggregation rule, ranks the compared methods
//! under each combination, and maps the resulting rankings with a penalized
//! ordinal multidimensional unfolding.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::single_range_in_vec_init, clippy::type_complexity)]

pub mod aggregation;
pub mod diagnostics;
pub mod error;
pub mod imputation;
pub mod io;
pub mod model;
pub mod multiverse;
pub mod unfolding;

pub use error::{Error, Result};
