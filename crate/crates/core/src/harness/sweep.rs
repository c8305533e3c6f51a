//! Monte Carlo scenarios and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Sampler, ScenarioConfig};
use super::output::{SweepRow, SweepTable};
use super::trial::{run_trial, TrialRecord};
use crate::error::{AncsError, Result};
use crate::metrics::{mean_and_stderr, to_db};
use crate::recovery::Estimator;
use crate::signal_gen::Basis;

/// Seed of trial `i` under base seed `seed`.
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Per-trial summary values, kept so that results can be re-aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_seed: u64,
    pub tnmse: f64,
    pub roi_tnmse: Option<f64>,
    pub non_roi_tnmse: Option<f64>,
    pub mean_gain_var: f64,
    pub skipped_steps: usize,
    pub solver_failures: usize,
}

impl TrialSummary {
    fn from_record(rec: &TrialRecord) -> Option<Self> {
        Some(Self {
            trial_seed: rec.trial_seed,
            tnmse: rec.tnmse().ok()?,
            roi_tnmse: rec.roi_tnmse().ok(),
            non_roi_tnmse: rec.non_roi_tnmse().ok(),
            mean_gain_var: rec.mean_gain_var(),
            skipped_steps: rec.skipped_steps(),
            solver_failures: rec.solver_failures(),
        })
    }
}

/// Linear-domain aggregate over trials; dB values are derived from the
/// linear means, never averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub config: ScenarioConfig,
    pub trials: usize,
    pub tnmse: f64,
    pub tnmse_stderr: f64,
    pub roi_tnmse: Option<f64>,
    pub roi_tnmse_stderr: Option<f64>,
    pub non_roi_tnmse: Option<f64>,
    pub mean_gain_var: f64,
    pub per_trial: Vec<TrialSummary>,
}

impl ScenarioSummary {
    pub fn from_trials(config: ScenarioConfig, per_trial: Vec<TrialSummary>) -> Result<Self> {
        if per_trial.is_empty() {
            return Err(AncsError::NoValidSteps);
        }
        let lin: Vec<f64> = per_trial.iter().map(|t| t.tnmse).collect();
        let (tnmse, tnmse_stderr) = mean_and_stderr(&lin);
        let roi: Vec<f64> = per_trial.iter().filter_map(|t| t.roi_tnmse).collect();
        let non: Vec<f64> = per_trial.iter().filter_map(|t| t.non_roi_tnmse).collect();
        let (roi_mean, roi_se) = mean_and_stderr(&roi);
        let gain: Vec<f64> = per_trial.iter().map(|t| t.mean_gain_var).collect();
        Ok(Self {
            config,
            trials: per_trial.len(),
            tnmse,
            tnmse_stderr,
            roi_tnmse: (!roi.is_empty()).then_some(roi_mean),
            roi_tnmse_stderr: (!roi.is_empty()).then_some(roi_se),
            non_roi_tnmse: (!non.is_empty()).then(|| mean_and_stderr(&non).0),
            mean_gain_var: mean_and_stderr(&gain).0,
            per_trial,
        })
    }

    pub fn tnmse_db(&self) -> Option<f64> {
        to_db(self.tnmse).ok()
    }

    pub fn roi_tnmse_db(&self) -> Option<f64> {
        self.roi_tnmse.and_then(|v| to_db(v).ok())
    }

    pub fn non_roi_tnmse_db(&self) -> Option<f64> {
        self.non_roi_tnmse.and_then(|v| to_db(v).ok())
    }
}

/// Runs every trial of `cfg` (in parallel, results in trial order).
pub fn run_trials(cfg: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, trial_seed(cfg.seed, i)))
        .collect()
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioSummary> {
    let records = run_trials(cfg)?;
    let per_trial: Vec<TrialSummary> = records
        .iter()
        .filter_map(|r| {
            let s = TrialSummary::from_record(r);
            if s.is_none() {
                log::warn!("trial {} had no valid steps and is excluded", r.trial_seed);
            }
            s
        })
        .collect();
    ScenarioSummary::from_trials(cfg.clone(), per_trial)
}

/// One swept parameter over a list of values, for each method pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: ScenarioConfig,
    pub param: String,
    pub values: Vec<f64>,
    pub methods: Vec<(Sampler, Estimator)>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let mut probe = self.base.clone();
        for &v in &self.values {
            probe.set_param(&self.param, v)?;
            probe.validate()?;
        }
        if self.values.is_empty() {
            // Still reject unknown parameter names.
            probe.set_param(&self.param, 0.0).map(|_| ())?;
        }
        Ok(())
    }

    /// Configuration of one table cell.
    pub fn cell(&self, value: f64, sampler: Sampler, estimator: Estimator) -> Result<ScenarioConfig> {
        let mut cfg = self.base.clone();
        cfg.set_param(&self.param, value)?;
        cfg.sampler = sampler;
        cfg.estimator = estimator;
        Ok(cfg)
    }
}

pub const ALL_METHODS: [(Sampler, Estimator); 4] = [
    (Sampler::Uniform, Estimator::L1),
    (Sampler::Ancs, Estimator::L1),
    (Sampler::Uniform, Estimator::SaMmse),
    (Sampler::Ancs, Estimator::SaMmse),
];

pub const L1_METHODS: [(Sampler, Estimator); 2] = [(Sampler::Uniform, Estimator::L1), (Sampler::Ancs, Estimator::L1)];

pub const PRESETS: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

/// Built-in sweeps over `base`:
///
/// * `fig3`: p01 ∈ {0, 0.05, 0.1, 0.2, 0.3}, canonical, all four methods.
///   Rates above 0.1 have no chain stationary at λ = 0.1, so the 1→0
///   probability saturates at 1.
/// * `fig4`: M ∈ {40, 50, …, 100}, canonical, all four methods.
/// * `fig5`: SNR ∈ {5, 10, …, 30} dB, canonical, all four methods.
/// * `fig6`: M ∈ {40, 50, …, 100}, DCT basis with 10% report faults, ℓ1.
/// * `fig7`: fault rate ∈ {0, 0.1, …, 0.5}, DCT basis, M = 60, ℓ1.
pub fn preset(name: &str, base: &ScenarioConfig) -> Result<SweepSpec> {
    let mut base = base.clone();
    let (param, values, methods): (&str, Vec<f64>, &[(Sampler, Estimator)]) = match name {
        "fig3" => {
            base.basis = Basis::Canonical;
            base.saturate_chain = true;
            ("p01", vec![0.0, 0.05, 0.1, 0.2, 0.3], &ALL_METHODS)
        }
        "fig4" => {
            base.basis = Basis::Canonical;
            ("m", (4..=10).map(|k| 10.0 * k as f64).collect(), &ALL_METHODS)
        }
        "fig5" => {
            base.basis = Basis::Canonical;
            ("snr_db", (1..=6).map(|k| 5.0 * k as f64).collect(), &ALL_METHODS)
        }
        "fig6" => {
            base.basis = Basis::Dct;
            base.fault_rate = 0.1;
            ("m", (4..=10).map(|k| 10.0 * k as f64).collect(), &L1_METHODS)
        }
        "fig7" => {
            base.basis = Basis::Dct;
            base.m = 60;
            ("fault_rate", vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5], &L1_METHODS)
        }
        other => return Err(AncsError::UnknownPreset(other.to_string())),
    };
    Ok(SweepSpec {
        name: name.to_string(),
        base,
        param: param.to_string(),
        values,
        methods: methods.to_vec(),
    })
}

/// Runs one scenario per (value, method) cell and tabulates the summaries.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.methods.len());
    for (idx, &value) in spec.values.iter().enumerate() {
        for &(sampler, estimator) in &spec.methods {
            let cfg = spec.cell(value, sampler, estimator)?;
            let summary = run_scenario(&cfg)?;
            log::info!(
                "{} {}={} {}+{}: {:.3} dB",
                spec.name,
                spec.param,
                value,
                sampler.as_str(),
                estimator.as_str(),
                summary.tnmse_db().unwrap_or(f64::NEG_INFINITY)
            );
            rows.push(SweepRow::from_summary(
                format!("{}-{:02}-{}-{}", spec.name, idx, sampler.as_str(), estimator.as_str()),
                &spec.param,
                value,
                &summary,
            ));
        }
    }
    Ok(SweepTable { rows })
}
