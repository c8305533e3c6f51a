//! Adaptive non-uniform compressive sampling (ANCS) of time-varying sparse
//! signals.
//!
//! The crate is organised around the closed sensing loop:
//!
//! 1. [`signal_gen`] produces temporally correlated sparse signals and the
//!    region-of-interest (ROI) process, optionally corrupting the ROI reports.
//! 2. [`inference`] turns a sliding window of binary ROI reports into
//!    per-coefficient importance levels with mean-field variational Bayes.
//! 3. [`sensing`] converts importance levels into column gains for a random
//!    Gaussian measurement matrix under a fixed total energy budget, then
//!    takes noisy linear measurements.
//! 4. [`recovery`] reconstructs the signal (constrained ℓ1 or a support-aware
//!    Kalman benchmark) and thresholds the estimate into the next ROI report.
//! 5. [`metrics`] scores the reconstruction and [`harness`] runs the whole loop
//!    as a reproducible Monte Carlo experiment.

pub mod error;
pub mod harness;
pub mod inference;
pub mod metrics;
pub mod recovery;
pub mod sensing;
pub mod signal_gen;

pub use error::{AncsError, Result};
