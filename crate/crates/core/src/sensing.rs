//! Non-uniform Gaussian measurement matrices and noisy measurement.
//!
//! Column `n` of the matrix gets norm `γ_n ∝ c̄_n`, scaled so that the total
//! sensing energy `‖Φ‖_F² = Σ γ_n²` equals `N`, the budget of a conventional
//! matrix with unit-norm columns.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{AncsError, Result};
use crate::signal_gen::stationary_amp_var;

/// Gains, matrix and noise level used at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    pub gains: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub sigma_n: f64,
}

impl MeasurementEnsemble {
    pub fn draw<R: Rng + ?Sized>(gains: Vec<f64>, m: usize, sigma_n: f64, rng: &mut R) -> Result<Self> {
        let matrix = build_matrix(&gains, m, rng)?;
        Ok(Self { gains, matrix, sigma_n })
    }
}

/// Column gains `γ_n = √N · c̄_n / ‖c̄‖₂`.
pub fn column_gains(cbar: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = cbar.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(AncsError::invalid("cbar", format!("entry {bad} not in [0, 1]")));
    }
    let eta = cbar.iter().map(|c| c * c).sum::<f64>().sqrt();
    if eta == 0.0 {
        return Err(AncsError::DegenerateImportance);
    }
    let scale = (cbar.len() as f64).sqrt() / eta;
    Ok(cbar.iter().map(|c| c * scale).collect())
}

/// Unit gains: the conventional uniform-energy matrix.
pub fn uniform_gains(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Draws an `m × N` i.i.d. Gaussian matrix, normalises each column and scales
/// column `n` to norm `gains[n]`.
///
/// Entries are drawn column by column, so two calls with the same generator
/// state differ only in column scaling.
pub fn build_matrix<R: Rng + ?Sized>(gains: &[f64], m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(AncsError::invalid("m", "need at least one measurement"));
    }
    if let Some(bad) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(AncsError::invalid("gains", format!("entry {bad} is not a finite non-negative value")));
    }
    let mut phi = DMatrix::<f64>::zeros(m, gains.len());
    for (j, &gain) in gains.iter().enumerate() {
        let mut col = phi.column_mut(j);
        let norm = loop {
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = col.norm();
            if norm > 0.0 {
                break norm;
            }
        };
        col *= gain / norm;
    }
    Ok(phi)
}

/// `y = Φx + n`, `n ~ N(0, σ_n² I)`.
pub fn measure<R: Rng + ?Sized>(
    matrix: &DMatrix<f64>,
    x: &DVector<f64>,
    sigma_n: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if matrix.ncols() != x.len() {
        return Err(AncsError::DimensionMismatch {
            context: "measure",
            expected: matrix.ncols(),
            actual: x.len(),
        });
    }
    let mut y = matrix * x;
    if sigma_n > 0.0 {
        for v in y.iter_mut() {
            *v += sigma_n * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(y)
}

/// Noise standard deviation for a target SNR in dB.
///
/// SNR is measured in the measurement domain of the uniform baseline, where
/// `E‖Φx‖² = E‖x‖² = N·λ·σ_a²`, so `σ_n² = N·λ·σ_a² / (M · 10^{SNR/10})`.
pub fn calibrate_noise(n: usize, m: usize, lambda: f64, rho: f64, sigma_l: f64, snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(AncsError::invalid("snr_db", format!("{snr_db} is not usable")));
    }
    if m == 0 {
        return Err(AncsError::invalid("m", "need at least one measurement"));
    }
    let signal_power = n as f64 * lambda * stationary_amp_var(rho, sigma_l);
    let var = signal_power / (m as f64 * 10f64.powf(snr_db / 10.0));
    Ok(var.sqrt())
}
