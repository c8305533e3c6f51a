//! Mean-field variational inference of coefficient importance.
//!
//! Generative model over a window of binary ROI reports `α`:
//!
//! ```text
//! r   ~ Beta(b¹, b⁰)                 overall reliability of the reporter
//! u_n ~ Bernoulli(r)                 is the report on coefficient n honest?
//! c_n ~ Beta(β¹_n, β⁰_n)             importance level of coefficient n
//! α_n ~ Bernoulli(c_n)      if u_n = 1
//!       Bernoulli(1 − c_n)  if u_n = 0
//! ```
//!
//! The posterior is approximated by `Q = Π_n Beta(c_n; β̂¹_n, β̂⁰_n) ·
//! Bernoulli(u_n; τ_n) · Beta(r; b̂¹, b̂⁰)` and fitted by coordinate ascent on
//! the evidence lower bound. The report likelihood only depends on the window
//! through `A_n` (ones reported) and `W_n` (reports seen), so every update is
//! a closed form in those counts.

pub mod special;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};
use special::{digamma_unchecked as psi, ln_beta_unchecked};

pub use special::{digamma, ln_beta, ln_gamma};

/// Lower clamp applied to every Beta parameter.
pub const MIN_BETA_PARAM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorHyperParams {
    pub b1: f64,
    pub b0: f64,
    pub beta1: Vec<f64>,
    pub beta0: Vec<f64>,
}

impl PriorHyperParams {
    pub fn new(b1: f64, b0: f64, beta1: Vec<f64>, beta0: Vec<f64>) -> Result<Self> {
        if beta1.len() != beta0.len() {
            return Err(AncsError::DimensionMismatch {
                context: "importance priors",
                expected: beta1.len(),
                actual: beta0.len(),
            });
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(b1) || !positive(b0) {
            return Err(AncsError::invalid("b", format!("({b1}, {b0}) must be positive")));
        }
        if !beta1.iter().chain(&beta0).all(|&v| positive(v)) {
            return Err(AncsError::invalid("beta", "all entries must be positive"));
        }
        Ok(Self { b1, b0, beta1, beta0 })
    }

    /// Same Beta(β¹, β⁰) importance prior on all `n` coefficients.
    pub fn uniform(n: usize, b1: f64, b0: f64, beta1: f64, beta0: f64) -> Result<Self> {
        Self::new(b1, b0, vec![beta1; n], vec![beta0; n])
    }

    pub fn len(&self) -> usize {
        self.beta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta1.is_empty()
    }

    /// Prior mean of the overall reliability, `b¹/(b¹+b⁰)`.
    pub fn reliability_mean(&self) -> f64 {
        self.b1 / (self.b1 + self.b0)
    }
}

/// Variational parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub bhat1: f64,
    pub bhat0: f64,
    pub betahat1: Vec<f64>,
    pub betahat0: Vec<f64>,
    pub tau: Vec<f64>,
}

impl PosteriorState {
    /// The starting point of coordinate ascent: Beta factors at the prior and
    /// every τ_n at the prior reliability mean.
    pub fn from_priors(priors: &PriorHyperParams) -> Self {
        Self {
            bhat1: priors.b1,
            bhat0: priors.b0,
            betahat1: priors.beta1.clone(),
            betahat0: priors.beta0.clone(),
            tau: vec![priors.reliability_mean(); priors.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn expected_importance(&self) -> Vec<f64> {
        expected_importance(self)
    }

    /// JSON-friendly snapshot including the derived importance means.
    pub fn dump(&self) -> PosteriorDump {
        PosteriorDump {
            bhat1: self.bhat1,
            bhat0: self.bhat0,
            betahat1: self.betahat1.clone(),
            betahat0: self.betahat0.clone(),
            tau: self.tau.clone(),
            cbar: self.expected_importance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDump {
    pub bhat1: f64,
    pub bhat0: f64,
    pub betahat1: Vec<f64>,
    pub betahat0: Vec<f64>,
    pub tau: Vec<f64>,
    pub cbar: Vec<f64>,
}

/// `c̄_n = β̂¹_n / (β̂¹_n + β̂⁰_n)`.
pub fn expected_importance(posterior: &PosteriorState) -> Vec<f64> {
    posterior
        .betahat1
        .iter()
        .zip(&posterior.betahat0)
        .map(|(&a, &b)| a / (a + b))
        .collect()
}

/// Sliding window over the last `capacity` report vectors with running
/// per-coefficient counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    capacity: usize,
    buffer: VecDeque<Vec<bool>>,
    ones: Vec<u32>,
    seen: Vec<u32>,
}

impl ObservationWindow {
    pub fn new(n: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(AncsError::invalid("window", "length must be at least 1"));
        }
        Ok(Self {
            capacity,
            buffer: VecDeque::with_capacity(capacity),
            ones: vec![0; n],
            seen: vec![0; n],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of coefficients.
    pub fn dim(&self) -> usize {
        self.ones.len()
    }

    /// Number of report vectors currently held.
    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// `A_n`: number of ones reported for coefficient `n` in the window.
    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    /// `W_n`: number of reports for coefficient `n` in the window.
    pub fn seen(&self) -> &[u32] {
        &self.seen
    }

    pub fn iter(&self) -> impl Iterator<Item = &[bool]> {
        self.buffer.iter().map(Vec::as_slice)
    }

    /// Appends a report, evicting the oldest one when full.
    pub fn push(&mut self, alpha: &[bool]) -> Result<()> {
        if alpha.len() != self.dim() {
            return Err(AncsError::DimensionMismatch {
                context: "ROI report",
                expected: self.dim(),
                actual: alpha.len(),
            });
        }
        if self.buffer.len() == self.capacity {
            self.evict();
        }
        for ((a, w), &bit) in self.ones.iter_mut().zip(&mut self.seen).zip(alpha) {
            *a += bit as u32;
            *w += 1;
        }
        self.buffer.push_back(alpha.to_vec());
        Ok(())
    }

    /// Drops the oldest report, if any.
    pub fn evict(&mut self) -> Option<Vec<bool>> {
        let old = self.buffer.pop_front()?;
        for ((a, w), &bit) in self.ones.iter_mut().zip(&mut self.seen).zip(&old) {
            *a -= bit as u32;
            *w -= 1;
        }
        Some(old)
    }
}

/// Importance update for one coefficient given its counts and current τ_n.
pub fn update_c(ones: u32, seen: u32, tau: f64, beta1: f64, beta0: f64) -> (f64, f64) {
    let a = ones as f64;
    let z = (seen - ones) as f64;
    let b1 = beta1 + tau * a + (1.0 - tau) * z;
    let b0 = beta0 + tau * z + (1.0 - tau) * a;
    (b1.max(MIN_BETA_PARAM), b0.max(MIN_BETA_PARAM))
}

/// Reliability update for one coefficient.
pub fn update_u(ones: u32, seen: u32, betahat: (f64, f64), bhat: (f64, f64)) -> f64 {
    let (e_ln_c, e_ln_1c) = beta_log_moments(betahat.0, betahat.1);
    let (e_ln_r, e_ln_1r) = beta_log_moments(bhat.0, bhat.1);
    let a = ones as f64;
    let z = (seen - ones) as f64;
    let rho1 = e_ln_r + a * e_ln_c + z * e_ln_1c;
    let rho0 = e_ln_1r + a * e_ln_1c + z * e_ln_c;
    logistic(rho1 - rho0)
}

/// Overall reliability update from all τ_n.
pub fn update_r(tau: &[f64], b1: f64, b0: f64) -> (f64, f64) {
    let honest: f64 = tau.iter().sum();
    let dishonest: f64 = tau.iter().map(|t| 1.0 - t).sum();
    ((b1 + honest).max(MIN_BETA_PARAM), (b0 + dishonest).max(MIN_BETA_PARAM))
}

/// `(E[ln p], E[ln(1 − p)])` under Beta(a, b).
fn beta_log_moments(a: f64, b: f64) -> (f64, f64) {
    let s = psi(a + b);
    (psi(a) - s, psi(b) - s)
}

/// `1 / (1 + e^{−d})` without overflow; saturates to exactly 0 or 1.
fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Stopping controls for [`infer`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            max_iter: 40,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutcome {
    pub posterior: PosteriorState,
    pub sweeps: usize,
    pub converged: bool,
}

/// One coordinate-ascent sweep: all c-factors, then all u-factors, then r.
pub fn sweep(window: &ObservationWindow, priors: &PriorHyperParams, state: &mut PosteriorState) {
    let a = window.ones();
    let w = window.seen();
    for n in 0..state.len() {
        let (b1, b0) = update_c(a[n], w[n], state.tau[n], priors.beta1[n], priors.beta0[n]);
        state.betahat1[n] = b1;
        state.betahat0[n] = b0;
    }
    let bhat = (state.bhat1, state.bhat0);
    for n in 0..state.len() {
        state.tau[n] = update_u(a[n], w[n], (state.betahat1[n], state.betahat0[n]), bhat);
    }
    let (b1, b0) = update_r(&state.tau, priors.b1, priors.b0);
    state.bhat1 = b1;
    state.bhat0 = b0;
}

/// Runs coordinate ascent from the priors over the current window.
pub fn infer(
    window: &ObservationWindow,
    priors: &PriorHyperParams,
    opts: InferenceOptions,
) -> Result<InferenceOutcome> {
    infer_from(window, priors, PosteriorState::from_priors(priors), opts)
}

/// Coordinate ascent from an arbitrary starting state (warm start).
///
/// Stops after `opts.max_iter` sweeps or once
/// `Σ(c̄ᵏ − c̄ᵏ⁻¹)² / Σ(c̄ᵏ⁻¹)² ≤ opts.tol`.
pub fn infer_from(
    window: &ObservationWindow,
    priors: &PriorHyperParams,
    start: PosteriorState,
    opts: InferenceOptions,
) -> Result<InferenceOutcome> {
    if window.dim() != priors.len() || start.len() != priors.len() {
        return Err(AncsError::DimensionMismatch {
            context: "inference",
            expected: priors.len(),
            actual: window.dim().max(start.len()),
        });
    }
    if opts.max_iter == 0 {
        return Err(AncsError::invalid("max_iter", "must be at least 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(AncsError::invalid("vi_tol", "must be positive"));
    }
    let mut state = start;
    let mut prev = state.expected_importance();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_iter {
        sweep(window, priors, &mut state);
        sweeps += 1;
        let cbar = state.expected_importance();
        let num: f64 = cbar.iter().zip(&prev).map(|(c, p)| (c - p).powi(2)).sum();
        let den: f64 = prev.iter().map(|p| p * p).sum();
        prev = cbar;
        if num <= opts.tol * den {
            converged = true;
            break;
        }
    }
    Ok(InferenceOutcome {
        posterior: state,
        sweeps,
        converged,
    })
}

/// Evidence lower bound `E_Q[ln P(α, c, u, r)] − E_Q[ln Q(c, u, r)]`.
pub fn elbo(window: &ObservationWindow, posterior: &PosteriorState, priors: &PriorHyperParams) -> f64 {
    let (e_ln_r, e_ln_1r) = beta_log_moments(posterior.bhat1, posterior.bhat0);
    let mut total = beta_cross(priors.b1, priors.b0, e_ln_r, e_ln_1r)
        + beta_entropy(posterior.bhat1, posterior.bhat0);
    for n in 0..posterior.len() {
        let (bh1, bh0) = (posterior.betahat1[n], posterior.betahat0[n]);
        let (e_ln_c, e_ln_1c) = beta_log_moments(bh1, bh0);
        let tau = posterior.tau[n];
        let a = window.ones()[n] as f64;
        let z = (window.seen()[n] - window.ones()[n]) as f64;
        let likelihood = tau * (a * e_ln_c + z * e_ln_1c) + (1.0 - tau) * (a * e_ln_1c + z * e_ln_c);
        let u_prior = tau * e_ln_r + (1.0 - tau) * e_ln_1r;
        total += likelihood
            + u_prior
            + beta_cross(priors.beta1[n], priors.beta0[n], e_ln_c, e_ln_1c)
            + beta_entropy(bh1, bh0)
            + bernoulli_entropy(tau);
    }
    total
}

/// `E_Q[ln Beta(p; a, b)]` given the log-moments of p under Q.
fn beta_cross(a: f64, b: f64, e_ln_p: f64, e_ln_1p: f64) -> f64 {
    -ln_beta_unchecked(a, b) + (a - 1.0) * e_ln_p + (b - 1.0) * e_ln_1p
}

fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta_unchecked(a, b) - (a - 1.0) * psi(a) - (b - 1.0) * psi(b) + (a + b - 2.0) * psi(a + b)
}

fn bernoulli_entropy(p: f64) -> f64 {
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}
