//! Signal reconstruction and ROI detection.
//!
//! Two estimators close the sensing loop:
//! * [`bpdn`]: ℓ1 minimisation under an ℓ2 residual bound, the practical
//!   reconstruction.
//! * [`kalman`]: a support-aware MMSE tracker that is told the true support
//!   and the process statistics, the benchmark for the best achievable error.

pub mod bpdn;
pub mod kalman;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sensing::MeasurementEnsemble;
use crate::signal_gen::Basis;

pub use bpdn::{bpdn_solve, BpdnOptions, BpdnProblem, BpdnSolution, SolverMethod};
pub use kalman::{sa_mmse, SaMmseFilter, SaMmseInputs};

/// Reconstruction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    L1,
    SaMmse,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::L1 => "l1",
            Estimator::SaMmse => "sa_mmse",
        }
    }
}

/// Matrix acting on the sparse coefficients: `Φ` itself or `Ξ = ΦΨᵀ`.
pub fn effective_matrix(phi: &DMatrix<f64>, basis: Basis, dct: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    match basis {
        Basis::Canonical => phi.clone(),
        Basis::Dct => phi * dct.expect("DCT basis requires the transform matrix").transpose(),
    }
}

/// Maps sparse coefficients back to the signal domain.
pub fn synthesize(coeffs: DVector<f64>, basis: Basis, dct: Option<&DMatrix<f64>>) -> DVector<f64> {
    match basis {
        Basis::Canonical => coeffs,
        Basis::Dct => dct.expect("DCT basis requires the transform matrix").tr_mul(&coeffs),
    }
}

/// ℓ1 reconstruction in the signal domain with residual bound `σ_n·√M`.
///
/// The returned solution's `x` is the signal estimate; in the DCT basis the
/// solver runs on `Ξ = ΦΨᵀ` and the coefficients are synthesised with `Ψᵀ`.
pub fn recover(
    y: &DVector<f64>,
    ensemble: &MeasurementEnsemble,
    basis: Basis,
    dct: Option<&DMatrix<f64>>,
    opts: BpdnOptions,
) -> Result<BpdnSolution> {
    let a = effective_matrix(&ensemble.matrix, basis, dct);
    let c = ensemble.sigma_n * (ensemble.matrix.nrows() as f64).sqrt();
    let mut sol = bpdn_solve(&BpdnProblem::new(&a, y, c, opts)?)?;
    sol.x = synthesize(std::mem::replace(&mut sol.x, DVector::zeros(0)), basis, dct);
    Ok(sol)
}

/// `α_n = 1` iff `|x̂_n| ≥ threshold`.
pub fn detect_roi(xhat: &DVector<f64>, threshold: f64) -> Vec<bool> {
    xhat.iter().map(|v| v.abs() >= threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_gen::dct_matrix;

    #[test]
    fn detector_examples() {
        let x = DVector::from_vec(vec![0.5, 1.2, -3.0]);
        assert_eq!(detect_roi(&x, 1.0), vec![false, true, true]);
        assert_eq!(detect_roi(&DVector::zeros(4), 1.0), vec![false; 4]);
        assert_eq!(detect_roi(&x, f64::INFINITY), vec![false; 3]);
    }

    #[test]
    fn identity_transform_matches_canonical_path() {
        let phi = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let ens = MeasurementEnsemble { gains: vec![1.0; 6], matrix: phi, sigma_n: 0.1 };
        let y = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let eye = DMatrix::<f64>::identity(6, 6);
        let a = recover(&y, &ens, Basis::Canonical, None, BpdnOptions::default()).unwrap();
        let b = recover(&y, &ens, Basis::Dct, Some(&eye), BpdnOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn noiseless_identity_sensing_in_dct_mode() {
        let n = 16;
        let psi = dct_matrix(n);
        let mut u = DVector::zeros(n);
        u[2] = 4.0;
        u[9] = -1.5;
        let x = psi.tr_mul(&u);
        let ens = MeasurementEnsemble {
            gains: vec![1.0; n],
            matrix: DMatrix::identity(n, n),
            sigma_n: 0.0,
        };
        let sol = recover(&x, &ens, Basis::Dct, Some(&psi), BpdnOptions::default()).unwrap();
        assert!((&sol.x - &x).norm() <= 1e-6);
        let uhat = &psi * &sol.x;
        assert!((uhat.norm() - sol.x.norm()).abs() < 1e-9);
    }
}
