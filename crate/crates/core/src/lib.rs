//! Drift-aware model lifecycle simulation with per-phase energy accounting.
//!
//! The crate replays a time-batched labeled stream under different retraining
//! configurations (static, periodic, drift-detector-informed; sliding window
//! vs full history), tracking ROC AUC and the energy spent on training, drift
//! detection and inference, so the strategies can be compared on both
//! accuracy and sustainability.

pub mod dataset;
pub mod detect;
pub mod energy;
pub mod error;
pub mod model;
pub mod policy;
pub mod report;
pub(crate) mod rng_util;
pub mod sim;

pub use error::{Error, Result};
