//! Support-aware MMSE benchmark.
//!
//! Each active coefficient is tracked by the amplitude recursion
//! `a ← (1−ρ)a + ρν`; the filter is told the true support at every step, so
//! it only estimates amplitudes on that support. Coefficients entering the
//! support start from the stationary prior `N(0, ρσ_L²/(2−ρ))`.
//!
//! The measurement update uses the information form
//! `(σ²P⁻¹ + HᵀH) m⁺ = σ²P⁻¹m + Hᵀy`, `P⁺ = σ²(σ²P⁻¹ + HᵀH)⁻¹`, which stays
//! well conditioned as the noise vanishes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaMmseInputs {
    pub sigma_l2: f64,
    pub sigma_n2: f64,
    pub rho: f64,
    /// Ignore temporal correlation: every step uses the stationary prior.
    #[serde(default)]
    pub static_prior: bool,
}

impl SaMmseInputs {
    pub fn stationary_var(&self) -> f64 {
        self.rho * self.sigma_l2 / (2.0 - self.rho)
    }
}

#[derive(Debug, Clone)]
pub struct SaMmseFilter {
    inputs: SaMmseInputs,
    n: usize,
    active: Vec<usize>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl SaMmseFilter {
    pub fn new(n: usize, inputs: SaMmseInputs) -> Self {
        Self {
            inputs,
            n,
            active: Vec::new(),
            mean: DVector::zeros(0),
            cov: DMatrix::zeros(0, 0),
        }
    }

    /// Predicts to the current step over `support`, then conditions on `y`.
    ///
    /// `matrix` acts on the coefficients the support refers to. Returns the
    /// filtered mean, zero off the support.
    pub fn step(&mut self, y: &DVector<f64>, matrix: &DMatrix<f64>, support: &[bool]) -> Result<DVector<f64>> {
        if support.len() != self.n || matrix.ncols() != self.n {
            return Err(AncsError::DimensionMismatch {
                context: "sa_mmse support",
                expected: self.n,
                actual: support.len().min(matrix.ncols()),
            });
        }
        if matrix.nrows() != y.len() {
            return Err(AncsError::DimensionMismatch {
                context: "sa_mmse measurement",
                expected: matrix.nrows(),
                actual: y.len(),
            });
        }
        let active: Vec<usize> = (0..self.n).filter(|&i| support[i]).collect();
        let (mean, cov) = self.predict(&active);
        let mut estimate = DVector::zeros(self.n);
        if active.is_empty() {
            self.active = active;
            self.mean = mean;
            self.cov = cov;
            return Ok(estimate);
        }

        let h = matrix.select_columns(&active);
        let k = active.len();
        let s2 = self.inputs.sigma_n2;
        let prior_info = cov
            .clone()
            .cholesky()
            .ok_or_else(|| AncsError::Domain("predicted covariance is not positive definite".into()))?
            .inverse();
        let mut info = &prior_info * s2 + h.tr_mul(&h);
        let rhs = &prior_info * &mean * s2 + h.tr_mul(y);
        let chol = match info.clone().cholesky() {
            Some(ch) => ch,
            None => {
                info += DMatrix::<f64>::identity(k, k) * 1e-12;
                info.cholesky()
                    .ok_or_else(|| AncsError::Domain("singular measurement update".into()))?
            }
        };
        let post_mean = chol.solve(&rhs);
        let mut post_cov = chol.inverse() * s2;
        post_cov = (&post_cov + post_cov.transpose()) * 0.5;

        for (slot, &i) in active.iter().enumerate() {
            estimate[i] = post_mean[slot];
        }
        self.active = active;
        self.mean = post_mean;
        self.cov = post_cov;
        Ok(estimate)
    }

    fn predict(&self, active: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let SaMmseInputs { rho, sigma_l2, static_prior, .. } = self.inputs;
        let k = active.len();
        let stationary = self.inputs.stationary_var();
        let mut mean = DVector::zeros(k);
        let mut cov = DMatrix::zeros(k, k);
        let previous: Vec<Option<usize>> = active
            .iter()
            .map(|i| if static_prior { None } else { self.active.binary_search(i).ok() })
            .collect();
        let decay = 1.0 - rho;
        for a in 0..k {
            match previous[a] {
                Some(pa) => {
                    mean[a] = decay * self.mean[pa];
                    for b in 0..k {
                        if let Some(pb) = previous[b] {
                            cov[(a, b)] = decay * decay * self.cov[(pa, pb)];
                        }
                    }
                    cov[(a, a)] += rho * rho * sigma_l2;
                }
                None => cov[(a, a)] = stationary,
            }
        }
        (mean, cov)
    }
}

/// Runs the filter over a whole sequence.
pub fn sa_mmse(
    ys: &[DVector<f64>],
    matrices: &[DMatrix<f64>],
    supports: &[Vec<bool>],
    inputs: SaMmseInputs,
) -> Result<Vec<DVector<f64>>> {
    if ys.len() != matrices.len() || ys.len() != supports.len() {
        return Err(AncsError::DimensionMismatch {
            context: "sa_mmse sequence",
            expected: ys.len(),
            actual: matrices.len().min(supports.len()),
        });
    }
    let Some(first) = matrices.first() else {
        return Ok(Vec::new());
    };
    let mut filter = SaMmseFilter::new(first.ncols(), inputs);
    ys.iter()
        .zip(matrices)
        .zip(supports)
        .map(|((y, h), s)| filter.step(y, h, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn inputs(sigma_l2: f64, sigma_n2: f64, rho: f64) -> SaMmseInputs {
        SaMmseInputs { sigma_l2, sigma_n2, rho, static_prior: false }
    }

    #[test]
    fn scalar_wiener_gain() {
        let mut f = SaMmseFilter::new(1, inputs(1.0, 1.0, 1.0));
        let est = f
            .step(&DVector::from_vec(vec![2.0]), &DMatrix::from_element(1, 1, 1.0), &[true])
            .unwrap();
        assert!((est[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_support_estimates_zero() {
        let mut f = SaMmseFilter::new(3, inputs(100.0, 0.1, 0.2));
        let est = f
            .step(&DVector::from_vec(vec![1.0, 2.0]), &DMatrix::from_element(2, 3, 1.0), &[false; 3])
            .unwrap();
        assert_eq!(est, DVector::zeros(3));
    }

    #[test]
    fn noiseless_limit_is_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, n) = (8, 12);
        let h = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let support: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let x = DVector::from_fn(n, |i, _| if support[i] { i as f64 - 4.0 } else { 0.0 });
        let y = &h * &x;
        let mut f = SaMmseFilter::new(n, inputs(100.0, 1e-14, 0.2));
        let est = f.step(&y, &h, &support).unwrap();
        assert!((&est - &x).amax() < 1e-6, "{}", (&est - &x).amax());
    }

    #[test]
    fn uncorrelated_process_reduces_to_static_mmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, n) = (6, 10);
        let sigma_l2 = 4.0;
        let sigma_n2 = 0.3;
        let mut f = SaMmseFilter::new(n, inputs(sigma_l2, sigma_n2, 1.0));
        for _ in 0..5 {
            let h = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let support: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.4).collect();
            let y = DVector::from_fn(m, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let est = f.step(&y, &h, &support).unwrap();

            // Direct per-step MMSE: σ_L² Hₛᵀ (σ_L² HₛHₛᵀ + σ²I)⁻¹ y.
            let cols: Vec<usize> = (0..n).filter(|&i| support[i]).collect();
            let hs = h.select_columns(&cols);
            let s = &hs * hs.transpose() * sigma_l2 + DMatrix::<f64>::identity(m, m) * sigma_n2;
            let direct = hs.transpose() * s.lu().solve(&y).unwrap() * sigma_l2;
            for (slot, &i) in cols.iter().enumerate() {
                assert!((est[i] - direct[slot]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn static_flag_ignores_history() {
        let h = DMatrix::from_element(1, 1, 1.0);
        let sup = [true];
        let y1 = DVector::from_vec(vec![5.0]);
        let y2 = DVector::from_vec(vec![1.0]);
        let mut stat = SaMmseFilter::new(1, SaMmseInputs { static_prior: true, ..inputs(1.0, 0.5, 0.2) });
        stat.step(&y1, &h, &sup).unwrap();
        let a = stat.step(&y2, &h, &sup).unwrap();
        let mut fresh = SaMmseFilter::new(1, SaMmseInputs { static_prior: true, ..inputs(1.0, 0.5, 0.2) });
        let b = fresh.step(&y2, &h, &sup).unwrap();
        assert_eq!(a, b);

        let mut tracking = SaMmseFilter::new(1, inputs(1.0, 0.5, 0.2));
        tracking.step(&y1, &h, &sup).unwrap();
        assert!(tracking.step(&y2, &h, &sup).unwrap()[0] > b[0]);
    }

    #[test]
    fn sequence_wrapper_checks_lengths() {
        let r = sa_mmse(&[DVector::zeros(1)], &[], &[vec![true]], inputs(1.0, 1.0, 0.5));
        assert!(r.is_err());
        assert!(sa_mmse(&[], &[], &[], inputs(1.0, 1.0, 0.5)).unwrap().is_empty());
    }
}
