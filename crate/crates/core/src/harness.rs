//! Closed-loop experiment driver: per-trial loop, Monte Carlo aggregation,
//! figure presets and table output.

pub mod config;
pub mod output;
pub mod sweep;
pub mod trial;

pub use config::{Sampler, ScenarioConfig};
pub use output::{emit, Format, SweepRow, SweepTable};
pub use sweep::{preset, run_scenario, run_sweep, run_trials, ScenarioSummary, SweepSpec, TrialSummary};
pub use trial::{run_trial, run_trial_traced, StepRecord, TrialRecord};
