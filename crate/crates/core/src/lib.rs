//! Grid-truncated Langevin sampling for non-log-concave targets.
//!
//! The crate bundles the sampling pipeline (cube-grid estimation, smooth
//! truncation, averaged Langevin Monte Carlo), the hard-instance families used
//! to probe query complexity, Ornstein–Uhlenbeck smoothness diagnostics, and
//! the quadrature and Monte Carlo metrics that validate all of them.

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod instances;
pub mod metrics;
pub mod numkit;
pub mod oracle;
pub mod oudiag;
pub mod rng;
pub mod runner;
pub mod sampler;

pub use error::{NlcsError, Result};
