//! Opportunistic frame enhancement for edge video analytics.
//!
//! Video analytics pipelines leave GPU cycles idle because filters prune most
//! frames before inference. This crate models a system that harvests those
//! cycles to run a multi-exit image enhancer on the frames that benefit most:
//!
//! - [`core`]: frame difficulty scoring and the exit-level layer-split contract
//! - [`profiles`]: the latency grid `I(kappa, n)` and the bucketized
//!   difficulty -> accuracy-gain table `P(kappa, theta)`
//! - [`scheduler`]: frame -> exit-level assignment under a latency budget,
//!   as a generalized assignment problem with a prune-and-search heuristic
//!   and an exhaustive oracle
//! - [`losses`]: numeric evaluators for the two-stage adversarial training
//!   objective
//! - [`vap`]: seeded synthetic trace generation and the three classic
//!   pipeline filters (temporal diff, cheap model, cascade)
//! - [`simulator`]: a windowed discrete-time simulation tying it all together
//!
//! See the `examples/` directory for a runnable walkthrough of each piece.

pub mod cli;
pub mod core;
pub mod losses;
pub mod profiles;
pub mod scheduler;
pub mod simulator;
pub mod vap;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("instance exceeds enumeration cap: {required} assignments > cap {cap}")]
    EnumerationCap { required: f64, cap: u64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
