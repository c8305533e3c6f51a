use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};
use crate::inference::{InferenceOptions, PriorHyperParams};
use crate::recovery::{BpdnOptions, Estimator, SaMmseInputs, SolverMethod};
use crate::sensing::calibrate_noise;
use crate::signal_gen::{AmplitudeParams, Basis, SignalModel, SupportChainParams};

/// How column energy is allocated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Unit-norm columns.
    Uniform,
    /// Column norms proportional to inferred importance.
    #[default]
    Ancs,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Uniform => "uniform",
            Sampler::Ancs => "ancs",
        }
    }
}

/// Every knob of one experiment. Defaults reproduce the canonical-basis
/// setting: N = 200, M = 60, T = 30, 20 dB, λ = 0.1, p01 = 0.02, ρ = 0.2,
/// σ_L = 10, W = 5, b = (3, 1), β = (1, 1), 40 sweeps, tolerance 1e−6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub snr_db: f64,
    pub lambda: f64,
    pub p01: f64,
    pub rho: f64,
    pub sigma_l: f64,
    pub threshold: f64,
    pub basis: Basis,
    pub fault_rate: f64,
    pub window: usize,
    pub b1: f64,
    pub b0: f64,
    pub beta1: f64,
    pub beta0: f64,
    pub sampler: Sampler,
    pub estimator: Estimator,
    pub trials: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub vi_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub solver: SolverMethod,
    /// SA-MMSE without temporal tracking (stationary prior every step).
    pub static_mmse: bool,
    /// Start each inference from the previous step's posterior.
    pub warm_start: bool,
    /// Replace inferred importance by its uniform value (diagnostics).
    pub force_uniform_importance: bool,
    /// Clamp an infeasible 1→0 probability to 1 instead of rejecting the
    /// configuration; the support then has activity `p01/(p01+1)`.
    pub saturate_chain: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 200,
            m: 60,
            t: 30,
            snr_db: 20.0,
            lambda: 0.1,
            p01: 0.02,
            rho: 0.2,
            sigma_l: 10.0,
            threshold: 1.0,
            basis: Basis::Canonical,
            fault_rate: 0.0,
            window: 5,
            b1: 3.0,
            b0: 1.0,
            beta1: 1.0,
            beta0: 1.0,
            sampler: Sampler::Ancs,
            estimator: Estimator::L1,
            trials: 50,
            seed: 0,
            max_iter: 40,
            vi_tol: 1e-6,
            solver_tol: 1e-6,
            solver_max_iter: 5000,
            solver: SolverMethod::Homotopy,
            static_mmse: false,
            warm_start: false,
            force_uniform_importance: false,
            saturate_chain: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("m", self.m), ("t", self.t), ("window", self.window)] {
            if v == 0 {
                return Err(AncsError::invalid(name, "must be at least 1"));
            }
        }
        if self.trials == 0 {
            return Err(AncsError::invalid("trials", "must be at least 1"));
        }
        if self.max_iter == 0 || self.solver_max_iter == 0 {
            return Err(AncsError::invalid("max_iter", "must be at least 1"));
        }
        for (name, p) in [("lambda", self.lambda), ("p01", self.p01), ("fault_rate", self.fault_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AncsError::invalid(name, format!("{p} not in [0, 1]")));
            }
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(AncsError::invalid("snr_db", "must be a number"));
        }
        if !(self.threshold > 0.0) {
            return Err(AncsError::invalid("threshold", "must be positive"));
        }
        if !(self.vi_tol > 0.0) || !(self.solver_tol > 0.0) {
            return Err(AncsError::invalid("tol", "tolerances must be positive"));
        }
        self.chain()?;
        AmplitudeParams::new(self.rho, self.sigma_l)?;
        self.priors()?;
        Ok(())
    }

    pub fn chain(&self) -> Result<SupportChainParams> {
        if self.saturate_chain {
            SupportChainParams::saturating(self.lambda, self.p01)
        } else {
            SupportChainParams::new(self.lambda, self.p01)
        }
    }

    pub fn signal_model(&self) -> Result<SignalModel> {
        Ok(SignalModel::new(
            self.n,
            self.basis,
            self.chain()?,
            AmplitudeParams::new(self.rho, self.sigma_l)?,
        ))
    }

    /// Noise standard deviation for the configured SNR, using the actual
    /// stationary activity of the support chain.
    pub fn noise_sigma(&self) -> Result<f64> {
        calibrate_noise(self.n, self.m, self.chain()?.lambda, self.rho, self.sigma_l, self.snr_db)
    }

    pub fn priors(&self) -> Result<PriorHyperParams> {
        PriorHyperParams::uniform(self.n, self.b1, self.b0, self.beta1, self.beta0)
    }

    pub fn inference_options(&self) -> InferenceOptions {
        InferenceOptions {
            max_iter: self.max_iter,
            tol: self.vi_tol,
        }
    }

    pub fn bpdn_options(&self) -> BpdnOptions {
        BpdnOptions {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            method: self.solver,
        }
    }

    pub fn sa_mmse_inputs(&self, sigma_n: f64) -> SaMmseInputs {
        SaMmseInputs {
            sigma_l2: self.sigma_l * self.sigma_l,
            sigma_n2: sigma_n * sigma_n,
            rho: self.rho,
            static_prior: self.static_mmse,
        }
    }

    /// Sets a numeric parameter by name, as used by sweeps.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(AncsError::invalid("sweep value", format!("{v} is not a count")))
            }
        };
        match name {
            "n" => self.n = count(value)?,
            "m" => self.m = count(value)?,
            "t" => self.t = count(value)?,
            "window" | "w" => self.window = count(value)?,
            "snr_db" | "snr" => self.snr_db = value,
            "lambda" => self.lambda = value,
            "p01" => self.p01 = value,
            "rho" => self.rho = value,
            "sigma_l" => self.sigma_l = value,
            "threshold" => self.threshold = value,
            "fault_rate" => self.fault_rate = value,
            "b1" => self.b1 = value,
            "b0" => self.b0 = value,
            "beta1" => self.beta1 = value,
            "beta0" => self.beta0 = value,
            _ => return Err(AncsError::UnknownParameter(name.to_string())),
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> std::result::Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    /// Reads a `.json` or TOML (any other extension) config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| AncsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        let cfg = parsed.map_err(|message| AncsError::Format {
            path: path.to_path_buf(),
            message,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}
