//! Basis pursuit denoising in constrained form:
//!
//! ```text
//! minimise ‖x‖₁  subject to  ‖y − Ax‖₂ ≤ c
//! ```
//!
//! The primary solver follows the LASSO regularisation path
//! `min ½‖y − Ax‖² + μ‖x‖₁` from `μ = ‖Aᵀy‖∞` downward (homotopy). Along the
//! path the residual norm shrinks monotonically and the solution is piecewise
//! linear in μ, so the first point with `‖y − Ax‖ = c` is found exactly by a
//! quadratic root on the active segment. That point is the constrained
//! optimum.
//!
//! If the path breaks down (singular active Gram matrix or too many
//! breakpoints) the problem is handed to an ADMM splitting of the constrained
//! form: soft-thresholding for the ℓ1 term and projection onto the residual
//! ball, followed by a minimal-norm correction onto the ball.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpdnOptions {
    /// Relative tolerance on feasibility and ADMM residuals.
    pub tol: f64,
    /// Path breakpoints for homotopy, iterations for ADMM.
    pub max_iter: usize,
    pub method: SolverMethod,
}

impl Default for BpdnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            method: SolverMethod::Homotopy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Regularisation path, falling back to ADMM on breakdown.
    Homotopy,
    Admm,
}

#[derive(Debug, Clone)]
pub struct BpdnProblem<'a> {
    pub matrix: &'a DMatrix<f64>,
    pub y: &'a DVector<f64>,
    /// Residual bound, `σ_n·√M` in the sensing loop.
    pub c: f64,
    pub opts: BpdnOptions,
}

impl<'a> BpdnProblem<'a> {
    pub fn new(matrix: &'a DMatrix<f64>, y: &'a DVector<f64>, c: f64, opts: BpdnOptions) -> Result<Self> {
        if matrix.nrows() != y.len() {
            return Err(AncsError::DimensionMismatch {
                context: "bpdn",
                expected: matrix.nrows(),
                actual: y.len(),
            });
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(AncsError::invalid("c", format!("{c} must be finite and non-negative")));
        }
        Ok(Self { matrix, y, c, opts })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpdnSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual constraint met within tolerance and the solver terminated normally.
    pub converged: bool,
    pub method: SolverMethod,
}

/// Solves the constrained problem; non-convergence is reported in the
/// returned flag with the best iterate, never as an error.
pub fn bpdn_solve(problem: &BpdnProblem<'_>) -> Result<BpdnSolution> {
    let BpdnProblem { matrix: a, y, c, opts } = *problem;
    let n = a.ncols();
    let y_norm = y.norm();
    if y_norm <= c || n == 0 {
        return Ok(finish(a, y, c, opts, DVector::zeros(n), 0, true, opts.method));
    }
    if opts.method == SolverMethod::Homotopy {
        if let Some((x, steps)) = homotopy(a, y, c, opts.max_iter) {
            return Ok(finish(a, y, c, opts, x, steps, true, SolverMethod::Homotopy));
        }
        log::debug!("homotopy path broke down; falling back to ADMM");
    }
    let (x, iters, ok) = admm(a, y, c, opts.tol, opts.max_iter);
    Ok(finish(a, y, c, opts, x, iters, ok, SolverMethod::Admm))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    c: f64,
    opts: BpdnOptions,
    x: DVector<f64>,
    iterations: usize,
    terminated: bool,
    method: SolverMethod,
) -> BpdnSolution {
    let residual_norm = (y - a * &x).norm();
    let feasible = residual_norm <= feasibility_bound(c, y.norm(), opts.tol);
    BpdnSolution {
        x,
        residual_norm,
        iterations,
        converged: terminated && feasible,
        method,
    }
}

/// `c·(1 + tol)` plus a floor at rounding level so that `c = 0` is attainable
/// in floating point.
pub fn feasibility_bound(c: f64, y_norm: f64, tol: f64) -> f64 {
    c * (1.0 + tol) + 1e-10 * y_norm
}

enum Event {
    Add(usize),
    Drop(usize),
    Boundary,
    PathEnd,
}

fn homotopy(a: &DMatrix<f64>, y: &DVector<f64>, c: f64, max_steps: usize) -> Option<(DVector<f64>, usize)> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut r = y.clone();
    let mut corr = a.tr_mul(&r);
    let (first, mu0) = argmax_abs(&corr);
    let mut mu = mu0;
    if mu <= 0.0 {
        return None;
    }
    let mut active = vec![first];
    let mut signs = vec![corr[first].signum()];
    let mut is_active = vec![false; n];
    is_active[first] = true;
    // A dropped coefficient may only re-enter with the opposite sign.
    let mut just_dropped: Option<(usize, f64)> = None;
    let floor = 1e-13 * mu0;

    for step in 1..=max_steps {
        let k = active.len();
        let a_s = a.select_columns(&active);
        let gram = a_s.tr_mul(&a_s);
        let chol = gram.cholesky()?;
        let d = chol.solve(&DVector::from_vec(signs.clone()));
        let v = &a_s * &d;
        let av = a.tr_mul(&v);

        let mut delta = mu;
        let mut event = Event::PathEnd;
        for j in 0..n {
            if is_active[j] {
                continue;
            }
            let blocked = just_dropped.filter(|&(d, _)| d == j).map(|(_, sign)| sign);
            for (sign, cand) in [(1.0, (mu - corr[j]) / (1.0 - av[j])), (-1.0, (mu + corr[j]) / (1.0 + av[j]))] {
                if blocked == Some(sign) {
                    continue;
                }
                if cand.is_finite() && cand > floor && cand < delta {
                    delta = cand;
                    event = Event::Add(j);
                }
            }
        }
        for i in 0..k {
            let cand = -x[active[i]] / d[i];
            if cand.is_finite() && cand > floor && cand < delta {
                delta = cand;
                event = Event::Drop(i);
            }
        }
        // ‖r − δv‖² = c²; the residual decreases along the segment.
        let qa = v.norm_squared();
        let qb = r.dot(&v);
        let qc = r.norm_squared() - c * c;
        let disc = qb * qb - qa * qc;
        if qa > 0.0 && disc >= 0.0 {
            let root = (qb - disc.sqrt()) / qa;
            if root >= 0.0 && root <= delta {
                delta = root;
                event = Event::Boundary;
            }
        }

        for i in 0..k {
            x[active[i]] += delta * d[i];
        }
        r.axpy(-delta, &v, 1.0);
        mu -= delta;
        corr = a.tr_mul(&r);
        just_dropped = None;

        match event {
            Event::Boundary | Event::PathEnd => return Some((x, step)),
            Event::Add(j) => {
                is_active[j] = true;
                active.push(j);
                signs.push(corr[j].signum());
            }
            Event::Drop(i) => {
                let j = active.remove(i);
                let sign = signs.remove(i);
                x[j] = 0.0;
                is_active[j] = false;
                just_dropped = Some((j, sign));
            }
        }
        if mu <= floor {
            return Some((x, step));
        }
    }
    None
}

fn argmax_abs(v: &DVector<f64>) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &val)| if val.abs() > best.1 { (i, val.abs()) } else { best })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn project_ball(z: &mut DVector<f64>, center: &DVector<f64>, radius: f64) {
    let mut diff = &*z - center;
    let norm = diff.norm();
    if norm > radius {
        diff *= radius / norm;
        *z = center + diff;
    }
}

/// ADMM on `min ‖v₁‖₁ + 1{‖v₂ − y‖ ≤ c}` s.t. `v₁ = x`, `v₂ = Ax`.
///
/// The x-update solves `(I + AᵀA)x = b` through the `M × M` system
/// `I + AAᵀ`, which does not depend on the penalty, so μ can adapt freely.
const RELAX: f64 = 1.6;
// Penalty balancing stops here so that the fixed-penalty convergence
// guarantee applies to the tail.
const ADAPT_UNTIL: usize = 1000;

fn admm(a: &DMatrix<f64>, y: &DVector<f64>, c: f64, tol: f64, max_iter: usize) -> (DVector<f64>, usize, bool) {
    let (m, n) = a.shape();
    let gram = a * a.transpose();
    let system = (&gram + DMatrix::<f64>::identity(m, m))
        .cholesky()
        .expect("I + AAᵀ is positive definite");

    let scale = a.tr_mul(y).amax().max(f64::MIN_POSITIVE);
    let mut mu = 10.0 / scale;
    let mut v1 = DVector::<f64>::zeros(n);
    let mut v2 = y.clone();
    let mut d1 = DVector::<f64>::zeros(n);
    let mut d2 = DVector::<f64>::zeros(m);
    let eps_abs = tol * y.norm() / ((m + n) as f64).sqrt();
    let mut converged = false;
    let mut iters = 0;

    while iters < max_iter {
        iters += 1;
        let p = &v1 - &d1;
        let w = &v2 - &d2;
        let q = a * &p + &gram * &w;
        let ax = system.solve(&q);
        let x = &p + a.tr_mul(&(&w - &ax));

        let v1_old = v1.clone();
        let v2_old = v2.clone();
        let thresh = 1.0 / mu;
        // Over-relaxed splitting.
        let xr = &x * RELAX + &v1_old * (1.0 - RELAX);
        let axr = &ax * RELAX + &v2_old * (1.0 - RELAX);
        v1 = (&xr + &d1).map(|v| soft_threshold(v, thresh));
        v2 = &axr + &d2;
        project_ball(&mut v2, y, c);
        d1 += &xr - &v1;
        d2 += &axr - &v2;

        let r_pri = ((&x - &v1).norm_squared() + (&ax - &v2).norm_squared()).sqrt();
        let s_dual = mu * ((&v1 - &v1_old) + a.tr_mul(&(&v2 - &v2_old))).norm();
        let primal_scale = (x.norm_squared() + ax.norm_squared())
            .sqrt()
            .max((v1.norm_squared() + v2.norm_squared()).sqrt());
        let dual_scale = mu * (&d1 + a.tr_mul(&d2)).norm();
        let eps_pri = ((m + n) as f64).sqrt() * eps_abs + tol * primal_scale;
        let eps_dual = (n as f64).sqrt() * eps_abs + tol * dual_scale;
        if r_pri <= eps_pri && s_dual <= eps_dual {
            converged = true;
            break;
        }
        if iters % 10 == 0 && iters <= ADAPT_UNTIL {
            let factor = if r_pri > 10.0 * s_dual {
                2.0
            } else if s_dual > 10.0 * r_pri {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                mu *= factor;
                d1 /= factor;
                d2 /= factor;
            }
        }
    }

    let x = correct_onto_ball(a, y, c, v1);
    (x, iters, converged)
}

/// Smallest-norm change of `x` that brings the residual inside the ball.
/// Only the part of the residual in the range of `A` can be reduced; if the
/// part outside already exceeds `c` the range part is removed entirely.
fn correct_onto_ball(a: &DMatrix<f64>, y: &DVector<f64>, c: f64, x: DVector<f64>) -> DVector<f64> {
    let r = y - a * &x;
    let rn2 = r.norm_squared();
    if rn2 <= c * c {
        return x;
    }
    let svd = a.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
        return x;
    };
    let cutoff = svd.singular_values.max() * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    let coords: Vec<(usize, f64)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &sv)| sv > cutoff)
        .map(|(i, _)| (i, u.column(i).dot(&r)))
        .collect();
    let range2: f64 = coords.iter().map(|(_, ci)| ci * ci).sum();
    if range2 <= 0.0 {
        return x;
    }
    let budget = (c * c - (rn2 - range2)).max(0.0);
    let shrink = 1.0 - (budget / range2).sqrt().min(1.0);
    let mut x = x;
    for (i, ci) in coords {
        let w = shrink * ci / svd.singular_values[i];
        x.axpy(w, &v_t.row(i).transpose(), 1.0);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    fn solve(a: &DMatrix<f64>, y: &DVector<f64>, c: f64, method: SolverMethod) -> BpdnSolution {
        let opts = BpdnOptions { method, ..Default::default() };
        bpdn_solve(&BpdnProblem::new(a, y, c, opts).unwrap()).unwrap()
    }

    #[test]
    fn identity_with_zero_radius_returns_y() {
        let a = DMatrix::<f64>::identity(5, 5);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.0, 0.25, 3.0]);
        for method in [SolverMethod::Homotopy, SolverMethod::Admm] {
            let sol = solve(&a, &y, 0.0, method);
            assert!((&sol.x - &y).amax() < 1e-6, "{method:?}: {}", sol.x);
            assert!(sol.converged);
        }
    }

    #[test]
    fn zero_measurement_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian(4, 9, &mut rng);
        let y = DVector::zeros(4);
        for c in [0.0, 0.5] {
            let sol = solve(&a, &y, c, SolverMethod::Homotopy);
            assert!(sol.x.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn exact_sparse_recovery_matches_support_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (m, n) = (6, 8);
        let a = gaussian(m, n, &mut rng);
        let mut x = DVector::zeros(n);
        x[1] = 1.7;
        x[6] = -0.9;
        let y = &a * &x;

        // Oracle: least squares over every support of size ≤ 2; keep the
        // interpolating candidates and pick the smallest ℓ1 norm.
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            for j in i..n {
                let cols: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
                let sub = a.select_columns(&cols);
                let z = sub.clone().svd(true, true).solve(&y, 1e-14).unwrap();
                if (&sub * &z - &y).norm() < 1e-9 {
                    let mut full = DVector::zeros(n);
                    for (k, &col) in cols.iter().enumerate() {
                        full[col] = z[k];
                    }
                    let l1 = full.lp_norm(1);
                    if best.as_ref().map_or(true, |b| l1 < b.0) {
                        best = Some((l1, full));
                    }
                }
            }
        }
        let oracle = best.unwrap().1;
        assert!((&oracle - &x).amax() < 1e-9);

        let sol = solve(&a, &y, 0.0, SolverMethod::Homotopy);
        assert!((&sol.x - &oracle).amax() < 1e-6, "{}", sol.x);
        assert_eq!(sol.method, SolverMethod::Homotopy);
    }

    #[test]
    fn homotopy_and_admm_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (m, n) = (15, 40);
            let a = gaussian(m, n, &mut rng);
            let mut x = DVector::zeros(n);
            for _ in 0..4 {
                x[rng.gen_range(0..n)] = 3.0 * rng.sample::<f64, _>(StandardNormal);
            }
            let noise = DVector::from_fn(m, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
            let y = &a * &x + noise;
            let c = 0.1 * (m as f64).sqrt();
            let h = solve(&a, &y, c, SolverMethod::Homotopy);
            let d = solve(&a, &y, c, SolverMethod::Admm);
            assert!(h.converged, "homotopy: {h:?}");
            assert!(d.converged, "admm: {} iterations", d.iterations);
            let (lh, ld) = (h.x.lp_norm(1), d.x.lp_norm(1));
            assert!((lh - ld).abs() <= 1e-4 * (1.0 + lh), "{lh} vs {ld}");
            assert!(h.residual_norm <= feasibility_bound(c, y.norm(), 1e-6));
        }
    }

    #[test]
    fn non_convergence_is_flagged_not_fatal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = gaussian(10, 30, &mut rng);
        let y = DVector::from_fn(10, |_, _| rng.sample::<f64, _>(StandardNormal));
        let opts = BpdnOptions { max_iter: 2, method: SolverMethod::Admm, tol: 1e-12 };
        let sol = bpdn_solve(&BpdnProblem::new(&a, &y, 0.1, opts).unwrap()).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.x.len(), 30);
    }

    #[test]
    fn rejects_bad_problems() {
        let a = DMatrix::<f64>::identity(3, 3);
        let y = DVector::zeros(2);
        assert!(BpdnProblem::new(&a, &y, 0.0, BpdnOptions::default()).is_err());
        let y = DVector::zeros(3);
        assert!(BpdnProblem::new(&a, &y, -1.0, BpdnOptions::default()).is_err());
    }
}
