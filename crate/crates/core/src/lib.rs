//! Optimal lower sets of multiindices for anisotropic sequences `rho`.
//!
//! The sets `Lambda(eps, rho) = {nu : rho^nu <= 1/eps}` are built by a
//! level-by-level tree search; the `n`-term sets `Lambda_n` and the
//! decreasing rearrangement `delta_n` of `rho^{-nu}` follow from them.
//! For the dyadic-block sequence the cardinalities are counted exactly
//! through additive partitions.

// `!(x > 0.0)` style checks are there to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod construct;
pub mod error;
pub mod multiindex;
pub mod partitions;
pub mod series;
pub mod surrogate;
pub mod table;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
