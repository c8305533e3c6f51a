//! Independent reference implementations shared by integration tests.

#![allow(dead_code)]

use ancs_core::inference::{ObservationWindow, PosteriorState, PriorHyperParams};
use nalgebra::{DMatrix, DVector};
use proptest::test_runner::{Config, RngSeed};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::digamma;

/// Reproducible property-test settings: fixed seed, nothing persisted.
pub fn fixed_config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..Config::default()
    }
}

pub fn window_of(n: usize, rows: &[Vec<bool>]) -> ObservationWindow {
    let mut w = ObservationWindow::new(n, rows.len().max(1)).unwrap();
    for r in rows {
        w.push(r).unwrap();
    }
    w
}

/// Repeats closed-form sweeps until neither c̄ nor τ moves.
pub fn sweep_to_fixed_point(window: &ObservationWindow, priors: &PriorHyperParams) -> PosteriorState {
    let mut state = PosteriorState::from_priors(priors);
    for _ in 0..100_000 {
        let before = state.clone();
        ancs_core::inference::sweep(window, priors, &mut state);
        let moved = state
            .expected_importance()
            .iter()
            .zip(before.expected_importance())
            .map(|(a, b)| (a - b).abs())
            .chain(state.tau.iter().zip(&before.tau).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if moved < 1e-14 {
            break;
        }
    }
    state
}

fn log_moments(a: f64, b: f64) -> (f64, f64) {
    let s = digamma(a + b);
    (digamma(a) - s, digamma(b) - s)
}

fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
}

fn bern_entropy(p: f64) -> f64 {
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// ELBO written observation by observation from the generative model.
pub fn elbo_oracle(rows: &[Vec<bool>], post: &PosteriorState, priors: &PriorHyperParams) -> f64 {
    let (lr, l1r) = log_moments(post.bhat1, post.bhat0);
    let mut total = -ln_beta(priors.b1, priors.b0) + (priors.b1 - 1.0) * lr + (priors.b0 - 1.0) * l1r;
    total += beta_entropy(post.bhat1, post.bhat0);
    for n in 0..post.tau.len() {
        let (a, b, tau) = (post.betahat1[n], post.betahat0[n], post.tau[n]);
        let (lc, l1c) = log_moments(a, b);
        for row in rows {
            let honest = if row[n] { lc } else { l1c };
            let flipped = if row[n] { l1c } else { lc };
            total += tau * honest + (1.0 - tau) * flipped;
        }
        total += tau * lr + (1.0 - tau) * l1r;
        total += -ln_beta(priors.beta1[n], priors.beta0[n]) + (priors.beta1[n] - 1.0) * lc + (priors.beta0[n] - 1.0) * l1c;
        total += beta_entropy(a, b) + bern_entropy(tau);
    }
    total
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Maximises a function of a Beta pair by nested golden-section search over
/// (log concentration, logit mean).
fn maximise_beta_pair(f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let pair = |ls: f64, lm: f64| {
        let (s, m) = (ls.exp(), logistic(lm));
        (s * m, s * (1.0 - m))
    };
    let inner = |ls: f64| golden_max(|lm| {
        let (a, b) = pair(ls, lm);
        f(a, b)
    }, -16.0, 16.0, 1e-9);
    let ls = golden_max(
        |ls| {
            let (a, b) = pair(ls, inner(ls));
            f(a, b)
        },
        (1e-2f64).ln(),
        (1e4f64).ln(),
        1e-9,
    );
    pair(ls, inner(ls))
}

/// Block coordinate ascent on [`elbo_oracle`] by direct numerical search,
/// same start and block order as the closed-form updates.
pub fn mean_field_oracle(rows: &[Vec<bool>], priors: &PriorHyperParams) -> PosteriorState {
    let n = priors.beta1.len();
    let mut q = PosteriorState {
        bhat1: priors.b1,
        bhat0: priors.b0,
        betahat1: priors.beta1.clone(),
        betahat0: priors.beta0.clone(),
        tau: vec![priors.b1 / (priors.b1 + priors.b0); n],
    };
    for _ in 0..400 {
        let before = q.clone();
        for k in 0..n {
            let (a, b) = maximise_beta_pair(|a, b| {
                let mut t = q.clone();
                t.betahat1[k] = a;
                t.betahat0[k] = b;
                elbo_oracle(rows, &t, priors)
            });
            q.betahat1[k] = a;
            q.betahat0[k] = b;
        }
        for k in 0..n {
            q.tau[k] = golden_max(
                |tau| {
                    let mut t = q.clone();
                    t.tau[k] = tau;
                    elbo_oracle(rows, &t, priors)
                },
                0.0,
                1.0,
                1e-10,
            );
        }
        let (a, b) = maximise_beta_pair(|a, b| {
            let mut t = q.clone();
            t.bhat1 = a;
            t.bhat0 = b;
            elbo_oracle(rows, &t, priors)
        });
        q.bhat1 = a;
        q.bhat0 = b;
        let cbar = |s: &PosteriorState| -> Vec<f64> {
            s.betahat1.iter().zip(&s.betahat0).map(|(a, b)| a / (a + b)).collect()
        };
        let dc = cbar(&q).iter().zip(cbar(&before)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let dt = q.tau.iter().zip(&before.tau).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if dc.max(dt) < 1e-8 {
            break;
        }
    }
    q
}

/// Smallest ℓ1 norm over `{x : ‖y − Ax‖ ≤ c}` by enumerating supports and
/// sign patterns. On a fixed support and sign pattern the objective is
/// linear and the feasible set an ellipsoid, so the minimiser is closed form.
pub fn bpdn_oracle(a: &DMatrix<f64>, y: &DVector<f64>, c: f64) -> f64 {
    let (m, n) = a.shape();
    if y.norm() <= c {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = support.len();
        if k > m {
            continue;
        }
        let sub = a.select_columns(&support);
        let Some(chol) = sub.tr_mul(&sub).cholesky() else { continue };
        let z_ls = chol.solve(&sub.tr_mul(y));
        let slack = c * c - (y - &sub * &z_ls).norm_squared();
        if slack < 0.0 {
            continue;
        }
        for signs in 0u32..(1 << k) {
            let sigma = DVector::from_fn(k, |i, _| if signs & (1 << i) != 0 { -1.0 } else { 1.0 });
            let g_sigma = chol.solve(&sigma);
            let scale = (slack / sigma.dot(&g_sigma)).sqrt();
            let z = &z_ls - g_sigma * scale;
            if z.iter().zip(sigma.iter()).all(|(zi, si)| zi * si >= -1e-12) {
                best = best.min(z.abs().sum());
            }
        }
    }
    best
}
