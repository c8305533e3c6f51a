//! Temporally correlated sparse test signals.
//!
//! Each coefficient carries two independent processes: a two-state Markov
//! chain for its support bit and a first-order Gauss-Markov recursion for its
//! amplitude. In the canonical basis the ROI coincides with the support; in
//! the DCT basis the support lives in the transform domain and the ROI (in the
//! signal domain) follows a third, independent chain with the same rates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};

/// Sparsifying basis of the generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Canonical,
    Dct,
}

/// Returns the 1→0 transition probability that makes `lambda` the stationary
/// activity rate of a chain with 0→1 probability `p01`.
pub fn derive_p10(lambda: f64, p01: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(AncsError::invalid("lambda", format!("{lambda} not in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p01) {
        return Err(AncsError::invalid("p01", format!("{p01} not in [0, 1]")));
    }
    let p10 = p01 * (1.0 - lambda) / lambda;
    if p10 > 1.0 {
        return Err(AncsError::InfeasibleChain { lambda, p01, p10 });
    }
    Ok(p10)
}

/// Variance of the amplitude recursion `a ← (1−ρ)a + ρν`, `ν ~ N(0, σ_L²)`,
/// at its fixed point.
pub fn stationary_amp_var(rho: f64, sigma_l: f64) -> f64 {
    rho * sigma_l * sigma_l / (2.0 - rho)
}

/// Per-coefficient two-state Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportChainParams {
    pub lambda: f64,
    pub p01: f64,
    pub p10: f64,
}

impl SupportChainParams {
    /// Builds a chain that is stationary at `lambda`.
    ///
    /// The boundary rates are accepted as degenerate chains: `lambda = 0`
    /// requires `p01 = 0` (never active) and `lambda = 1` pins `p10 = 0`.
    pub fn new(lambda: f64, p01: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p01) {
            return Err(AncsError::invalid("p01", format!("{p01} not in [0, 1]")));
        }
        let p10 = if lambda == 0.0 {
            if p01 != 0.0 {
                return Err(AncsError::InfeasibleChain {
                    lambda,
                    p01,
                    p10: f64::INFINITY,
                });
            }
            1.0
        } else if lambda == 1.0 {
            0.0
        } else {
            derive_p10(lambda, p01)?
        };
        Ok(Self { lambda, p01, p10 })
    }

    /// Like [`SupportChainParams::new`], but an infeasible `p10 > 1` is
    /// clamped to 1 instead of rejected. The chain then no longer sits at
    /// `lambda`; the returned `lambda` is its actual stationary rate
    /// `p01 / (p01 + 1)`.
    pub fn saturating(lambda: f64, p01: f64) -> Result<Self> {
        match Self::new(lambda, p01) {
            Err(AncsError::InfeasibleChain { .. }) if lambda > 0.0 => Ok(Self {
                lambda: p01 / (p01 + 1.0),
                p01,
                p10: 1.0,
            }),
            other => other,
        }
    }

    fn step<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> bool {
        let u: f64 = rng.gen();
        if bit {
            u >= self.p10
        } else {
            u < self.p01
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeParams {
    pub rho: f64,
    pub sigma_l: f64,
    pub sigma_a_stat: f64,
}

impl AmplitudeParams {
    pub fn new(rho: f64, sigma_l: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(AncsError::invalid("rho", format!("{rho} not in (0, 1]")));
        }
        if !(sigma_l > 0.0 && sigma_l.is_finite()) {
            return Err(AncsError::invalid("sigma_l", format!("{sigma_l} must be positive")));
        }
        Ok(Self {
            rho,
            sigma_l,
            sigma_a_stat: stationary_amp_var(rho, sigma_l).sqrt(),
        })
    }
}

/// Ground truth at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    pub t: usize,
    pub support: Vec<bool>,
    pub amplitudes: Vec<f64>,
    pub roi: Vec<bool>,
    pub x: DVector<f64>,
}

impl SignalState {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Sparse coefficients `s ∘ a` (the signal itself in the canonical basis,
    /// the DCT coefficients otherwise).
    pub fn coefficients(&self) -> DVector<f64> {
        sparse_coefficients(&self.support, &self.amplitudes)
    }
}

fn sparse_coefficients(support: &[bool], amplitudes: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        support.len(),
        support
            .iter()
            .zip(amplitudes)
            .map(|(&s, &a)| if s { a } else { 0.0 }),
    )
}

/// Orthonormal type-II DCT matrix: `u = Ψx` analyses, `x = Ψᵀu` synthesises.
pub fn dct_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

/// Composes the signal-domain vector from support bits and amplitudes.
///
/// `dct` is only read when `basis` is [`Basis::Dct`].
pub fn compose_signal(
    support: &[bool],
    amplitudes: &[f64],
    basis: Basis,
    dct: Option<&DMatrix<f64>>,
) -> DVector<f64> {
    let u = sparse_coefficients(support, amplitudes);
    match basis {
        Basis::Canonical => u,
        Basis::Dct => {
            let psi = dct.expect("DCT basis requires the transform matrix");
            psi.tr_mul(&u)
        }
    }
}

/// Flips each ROI bit independently with probability `fault_rate`.
pub fn inject_faults<R: Rng + ?Sized>(roi: &[bool], fault_rate: f64, rng: &mut R) -> Vec<bool> {
    roi.iter()
        .map(|&bit| {
            let u: f64 = rng.gen();
            bit ^ (u < fault_rate)
        })
        .collect()
}

/// ROI report handed to the inference step.
///
/// Canonical mode forwards the detector output untouched: its errors come
/// from the reconstruction. DCT mode reports the ground-truth ROI through a
/// binary symmetric channel with crossover `fault_rate`.
pub fn roi_report<R: Rng + ?Sized>(
    basis: Basis,
    state: &SignalState,
    detector: &[bool],
    fault_rate: f64,
    rng: &mut R,
) -> Vec<bool> {
    match basis {
        Basis::Canonical => detector.to_vec(),
        Basis::Dct => inject_faults(&state.roi, fault_rate, rng),
    }
}

/// Generator for the joint support/amplitude/ROI process.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub n: usize,
    pub basis: Basis,
    pub chain: SupportChainParams,
    pub amplitude: AmplitudeParams,
    dct: Option<DMatrix<f64>>,
}

impl SignalModel {
    pub fn new(
        n: usize,
        basis: Basis,
        chain: SupportChainParams,
        amplitude: AmplitudeParams,
    ) -> Self {
        let dct = (basis == Basis::Dct).then(|| dct_matrix(n));
        Self {
            n,
            basis,
            chain,
            amplitude,
            dct,
        }
    }

    pub fn dct(&self) -> Option<&DMatrix<f64>> {
        self.dct.as_ref()
    }

    /// Draws the first state from the stationary law of every process.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> SignalState {
        let lambda = self.chain.lambda;
        let support: Vec<bool> = (0..self.n).map(|_| rng.gen::<f64>() < lambda).collect();
        let sd = self.amplitude.sigma_a_stat;
        let amplitudes: Vec<f64> = (0..self.n)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let roi = match self.basis {
            Basis::Canonical => support.clone(),
            Basis::Dct => (0..self.n).map(|_| rng.gen::<f64>() < lambda).collect(),
        };
        let x = compose_signal(&support, &amplitudes, self.basis, self.dct());
        SignalState {
            t: 1,
            support,
            amplitudes,
            roi,
            x,
        }
    }

    /// Advances every process by one step.
    ///
    /// Amplitudes evolve for inactive coefficients as well, so a coefficient
    /// re-entering the support carries a current amplitude.
    pub fn advance_state<R: Rng + ?Sized>(&self, state: &SignalState, rng: &mut R) -> SignalState {
        let support: Vec<bool> = state
            .support
            .iter()
            .map(|&s| self.chain.step(s, rng))
            .collect();
        let AmplitudeParams { rho, sigma_l, .. } = self.amplitude;
        let amplitudes: Vec<f64> = state
            .amplitudes
            .iter()
            .map(|&a| (1.0 - rho) * a + rho * sigma_l * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let roi = match self.basis {
            Basis::Canonical => support.clone(),
            Basis::Dct => state.roi.iter().map(|&r| self.chain.step(r, rng)).collect(),
        };
        let x = compose_signal(&support, &amplitudes, self.basis, self.dct());
        SignalState {
            t: state.t + 1,
            support,
            amplitudes,
            roi,
            x,
        }
    }
}
