//! Datasets, the benchmark harness and the command-line front end for
//! [`reweight_core`].
//!
//! [`harness::run_experiment`] runs the full protocol described by an
//! [`config::ExperimentConfig`]: repeated random train/validation/test splits,
//! k-nearest-neighbor restriction, bandwidth selection, multiplicative
//! response perturbation of the nearest neighbors, and test RMSE for every
//! configured estimator. Reports are deterministic functions of the
//! configuration and seed.

pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod harness;
pub mod report;

pub use error::{HarnessError, Result};
pub use reweight_core;
