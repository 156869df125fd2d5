//! Active learning from a strong labeling oracle and a cheap weak labeler.
//!
//! The crate is organized by subsystem:
//!
//! - [`bounds`]: concentration quantities and sample-size schedules.
//! - [`hypotheses`]: thresholds and halfspaces with exact (constrained) ERM,
//!   plus interval and double-wedge difference classifiers.
//! - [`world`]: synthetic unlabeled distributions, strong and weak oracles,
//!   and the query ledger.
//! - [`engine`]: the epoch-based learner, the difference-classifier trainer,
//!   adaptive subsampling, the disagreement test and the coin-bias estimator.
//! - [`lab`]: trials, error measurement, baseline comparison, diagnostics and
//!   parameter sweeps.


// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod bounds;
pub mod engine;
pub mod error;
pub mod hypotheses;
pub mod lab;
pub mod world;

pub use error::{Error, Result};
