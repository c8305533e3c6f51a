//! One Monte Carlo trial of the closed sensing loop.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Sampler, ScenarioConfig};
use crate::error::Result;
use crate::inference::{infer, infer_from, ObservationWindow, PosteriorDump, PosteriorState};
use crate::metrics::{nmse, region_nmse, tnmse};
use crate::recovery::{detect_roi, effective_matrix, recover, synthesize, Estimator, SaMmseFilter};
use crate::sensing::{column_gains, uniform_gains, MeasurementEnsemble};
use crate::signal_gen::roi_report;

// Independent generator streams inside a trial. Signals and matrix draws
// are shared by every sampler/estimator pair with the same trial seed.
const STREAM_SIGNAL: u64 = 0;
const STREAM_MATRIX: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_FAULTS: u64 = 3;

fn stream(trial_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// `None` when the signal had zero energy at this step.
    pub nmse: Option<f64>,
    pub roi_nmse: Option<f64>,
    pub non_roi_nmse: Option<f64>,
    /// Importance means that shaped this step's matrix (ANCS only).
    pub cbar: Option<Vec<f64>>,
    /// True support at this step (traced runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<bool>>,
    /// Variance of the column gains over coefficients.
    pub gain_var: f64,
    pub support_size: usize,
    pub vi_sweeps: usize,
    pub vi_converged: bool,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario_id: String,
    pub trial_seed: u64,
    pub steps: Vec<StepRecord>,
}

impl TrialRecord {
    pub fn tnmse(&self) -> Result<f64> {
        tnmse(self.steps.iter().map(|s| s.nmse))
    }

    pub fn roi_tnmse(&self) -> Result<f64> {
        tnmse(self.steps.iter().map(|s| s.roi_nmse))
    }

    pub fn non_roi_tnmse(&self) -> Result<f64> {
        tnmse(self.steps.iter().map(|s| s.non_roi_nmse))
    }

    pub fn mean_gain_var(&self) -> f64 {
        self.steps.iter().map(|s| s.gain_var).sum::<f64>() / self.steps.len().max(1) as f64
    }

    pub fn skipped_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.nmse.is_none()).count()
    }

    pub fn solver_failures(&self) -> usize {
        self.steps.iter().filter(|s| !s.solver_converged).count()
    }
}

pub fn run_trial(cfg: &ScenarioConfig, trial_seed: u64) -> Result<TrialRecord> {
    Ok(run_trial_traced(cfg, trial_seed, false)?.0)
}

/// Runs the loop for `t = 1..=T`; with `trace` set, also returns the
/// posterior after each step's inference.
pub fn run_trial_traced(
    cfg: &ScenarioConfig,
    trial_seed: u64,
    trace: bool,
) -> Result<(TrialRecord, Vec<PosteriorDump>)> {
    cfg.validate()?;
    let model = cfg.signal_model()?;
    let dct = model.dct();
    let priors = cfg.priors()?;
    let vi_opts = cfg.inference_options();
    let bpdn_opts = cfg.bpdn_options();
    let sigma_n = cfg.noise_sigma()?;
    let adaptive = cfg.sampler == Sampler::Ancs;

    let mut signal_rng = stream(trial_seed, STREAM_SIGNAL);
    let mut matrix_rng = stream(trial_seed, STREAM_MATRIX);
    let mut noise_rng = stream(trial_seed, STREAM_NOISE);
    let mut fault_rng = stream(trial_seed, STREAM_FAULTS);

    let mut window = ObservationWindow::new(cfg.n, cfg.window)?;
    let mut posterior = PosteriorState::from_priors(&priors);
    let uniform_cbar = posterior.expected_importance();
    let mut filter = SaMmseFilter::new(cfg.n, cfg.sa_mmse_inputs(sigma_n));
    let mut steps = Vec::with_capacity(cfg.t);
    let mut trace_out = Vec::new();
    let mut state = model.init_state(&mut signal_rng);

    for t in 1..=cfg.t {
        if t > 1 {
            state = model.advance_state(&state, &mut signal_rng);
        }

        let cbar = if adaptive && !cfg.force_uniform_importance {
            Some(posterior.expected_importance())
        } else if adaptive {
            Some(uniform_cbar.clone())
        } else {
            None
        };
        let gains = match &cbar {
            Some(c) => column_gains(c)?,
            None => uniform_gains(cfg.n),
        };
        let gain_var = variance(&gains);
        let ensemble = MeasurementEnsemble::draw(gains, cfg.m, sigma_n, &mut matrix_rng)?;
        let y = crate::sensing::measure(&ensemble.matrix, &state.x, sigma_n, &mut noise_rng)?;

        let (xhat, solver_converged) = match cfg.estimator {
            Estimator::L1 => match recover(&y, &ensemble, cfg.basis, dct, bpdn_opts) {
                Ok(sol) => (sol.x, sol.converged),
                Err(e) => {
                    log::warn!("trial {trial_seed} t={t}: solver error: {e}");
                    (DVector::zeros(cfg.n), false)
                }
            },
            Estimator::SaMmse => {
                let a = effective_matrix(&ensemble.matrix, cfg.basis, dct);
                match filter.step(&y, &a, &state.support) {
                    Ok(coeffs) => (synthesize(coeffs, cfg.basis, dct), true),
                    Err(e) => {
                        log::warn!("trial {trial_seed} t={t}: SA-MMSE error: {e}");
                        (DVector::zeros(cfg.n), false)
                    }
                }
            }
        };

        let (mut vi_sweeps, mut vi_converged) = (0, true);
        if adaptive {
            let detected = detect_roi(&xhat, cfg.threshold);
            let alpha = roi_report(cfg.basis, &state, &detected, cfg.fault_rate, &mut fault_rng);
            window.push(&alpha)?;
            let outcome = if cfg.warm_start {
                infer_from(&window, &priors, posterior.clone(), vi_opts)?
            } else {
                infer(&window, &priors, vi_opts)?
            };
            vi_sweeps = outcome.sweeps;
            vi_converged = outcome.converged;
            posterior = outcome.posterior;
            if trace {
                trace_out.push(posterior.dump());
            }
        }

        let (roi, non_roi) = region_nmse(&state.x, &xhat, &state.roi)?;
        steps.push(StepRecord {
            t,
            nmse: nmse(&state.x, &xhat).ok(),
            roi_nmse: roi.map(|r| r.value),
            non_roi_nmse: non_roi.map(|r| r.value),
            cbar,
            support: trace.then(|| state.support.clone()),
            gain_var,
            support_size: state.support.iter().filter(|&&s| s).count(),
            vi_sweeps,
            vi_converged,
            solver_converged,
        });
    }

    let record = TrialRecord {
        scenario_id: String::new(),
        trial_seed,
        steps,
    };
    if record.skipped_steps() > 0 {
        log::info!("trial {trial_seed}: {} zero-energy steps excluded", record.skipped_steps());
    }
    Ok((record, trace_out))
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n
}
