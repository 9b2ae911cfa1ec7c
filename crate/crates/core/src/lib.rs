//! Monte Carlo toolkit for ruin probabilities of an insurer whose reserve is
//! invested in an asset driven by a finite-activity Lévy process.
//!
//! The pipeline is: build the log-price model, locate the root `beta` of its
//! cumulant, simulate inter-claim cycles `(M, Q)`, sample the perpetuity
//! `Y_inf`, bracket the ruin probability through its tail, and read off the
//! tail exponent and constant.

pub mod conditions;
pub mod cycle;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod inputs;
pub mod io;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
