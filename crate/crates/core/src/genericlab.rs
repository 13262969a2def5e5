//! Statistical verification of the generic-game claims: almost every
//! full-rank square game reduces by exactly one, and the structured
//! rectangular construction reduces by exactly two.
//!
//! Sampling is uniform on [-1, 1]; the claims hold for any absolutely
//! continuous law, so the choice is free and documented only for
//! reproducibility. Every failure is retried at a tighter rank tolerance
//! before being counted, separating numerical rank misjudgment from genuine
//! measure-zero hits.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::{Matrix, Tolerance};
use crate::reduction::{apply_pat, reduce, BimatrixGame, PatParams};

/// Which generic-game claim an experiment exercises.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Square full-rank games: one-step reduction to rank m - 1 expected.
    SquareLimit { sizes: Vec<usize> },
    /// Structured rectangular games of planted rank k: two-step reduction
    /// to rank k - 2 expected.
    RectTwoStep { sizes: Vec<(usize, usize, usize)> },
}

/// Aggregated outcome of a reproducible batch of trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: usize,
    pub successes: usize,
    /// Per-trial seeds of the failures, for offline inspection.
    pub failures: Vec<u64>,
    pub seed: u64,
}

/// Samples a square game with i.i.d. uniform [-1, 1] payoffs, resampling
/// until the payoff sum has full rank (an almost-sure event).
pub fn sample_square_game(m: usize, seed: u64) -> Result<BimatrixGame, Error> {
    if m < 2 {
        return Err(Error::InvalidParam(format!("square game needs m >= 2, got {m}")));
    }
    let tol = Tolerance::relaxed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = uniform_matrix(m, m, &mut rng);
        let b = uniform_matrix(m, m, &mut rng);
        let g = BimatrixGame::new(a, b)?;
        if g.game_rank(&tol) == m {
            return Ok(g);
        }
    }
}

/// The almost-everywhere predicate for full-rank square games:
/// `1_m^T C^{-1} 1_m != 0`, i.e. a one-step reduction exists and the
/// two-step shift does not. Errors when `C` is singular.
pub fn check_square_limit(g: &BimatrixGame, tol: &Tolerance) -> Result<bool, Error> {
    let m = g.m();
    if m != g.n() {
        return Err(Error::Shape(format!("square check needs m = n, got {}x{}", m, g.n())));
    }
    let c = g.c();
    if c.rank(tol) < m {
        return Err(Error::Numerical("payoff sum is singular; the limit predicate needs full rank".into()));
    }
    let ones = DVector::from_element(m, 1.0);
    let x = c
        .solve(&ones, tol)
        .ok_or_else(|| Error::Numerical("solve C x = 1 failed on a full-rank matrix".into()))?;
    let s = x.sum();
    Ok(s.abs() > tol.residual_tol * (1.0 + x.norm() * (m as f64).sqrt()))
}

/// Samples the structured rectangular construction
/// `C = 1_m u^T + v 1_n^T + sum_{i<k-2} r_i c_i^T`, split into a random
/// `A` and `B = C - A`. Both ones-vector span conditions hold by
/// construction and `rank(C) = k` generically.
///
/// The premise is enforced as `3 < m < n`; `allow_small` relaxes it to
/// `2 < m < n` for boundary experiments.
pub fn sample_structured_rect_game(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    allow_small: bool,
) -> Result<BimatrixGame, Error> {
    let m_floor = if allow_small { 2 } else { 3 };
    if m <= m_floor || n <= m {
        return Err(Error::InvalidParam(format!(
            "structured game needs {} < m < n, got m = {m}, n = {n}",
            m_floor
        )));
    }
    if k < 2 || k > m {
        return Err(Error::InvalidParam(format!(
            "structured game needs 2 <= k <= m, got k = {k}, m = {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = uniform_vector(n, &mut rng);
    let v = uniform_vector(m, &mut rng);
    let ones_m = DVector::from_element(m, 1.0);
    let ones_n = DVector::from_element(n, 1.0);
    let mut c = &ones_m * u.transpose() + &v * ones_n.transpose();
    for _ in 0..k - 2 {
        let r = uniform_vector(m, &mut rng);
        let col = uniform_vector(n, &mut rng);
        c += &r * col.transpose();
    }
    let a = uniform_matrix(m, n, &mut rng);
    let b = Matrix::new(&c - a.inner())?;
    BimatrixGame::new(a, b)
}

/// A planted positive-affine-transform instance: ground truth for the
/// round-trip through `reduce`.
#[derive(Debug, Clone, Serialize)]
pub struct PlantedPat {
    pub base: BimatrixGame,
    pub transformed: BimatrixGame,
    pub params: PatParams,
    pub gamma: f64,
}

/// Builds a game whose payoff sum cancels at the planted `gamma`: the base
/// has `rank(A + B) = base_rank` (0 or 1) and the transform uses
/// `alpha1 / alpha2 = gamma` plus random shifts, so `reduce` should recover
/// `gamma* = gamma` and a rank at most `base_rank`.
///
/// The pencil branch needs headroom to see the drop: `m >= base_rank + 3`
/// and `m <= n` are required so that the rank at `gamma` (at most
/// `base_rank + 2`) sits strictly below the generic rank `m`.
pub fn sample_planted_pat(
    m: usize,
    n: usize,
    base_rank: usize,
    gamma: f64,
    seed: u64,
) -> Result<PlantedPat, Error> {
    if base_rank > 1 {
        return Err(Error::InvalidParam(format!("base rank must be 0 or 1, got {base_rank}")));
    }
    if m < base_rank + 3 || n < m {
        return Err(Error::InvalidParam(format!(
            "planted instance needs m >= base_rank + 3 and n >= m, got m = {m}, n = {n}"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParam(format!("gamma must be positive and finite, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = uniform_matrix(m, n, &mut rng);
    let mut b = -a.inner().clone();
    if base_rank == 1 {
        let r = uniform_vector(m, &mut rng);
        let col = uniform_vector(n, &mut rng);
        b += &r * col.transpose();
    }
    let base = BimatrixGame::new(a, Matrix::new(b)?)?;
    let params = PatParams {
        alpha1: 1.0,
        alpha2: 1.0 / gamma,
        beta1: rng.random_range(-2.0..2.0),
        beta2: rng.random_range(-2.0..2.0),
        u: uniform_vector(n, &mut rng),
        v: uniform_vector(m, &mut rng),
    };
    let transformed = apply_pat(&base, &params)?;
    Ok(PlantedPat { base, transformed, params, gamma })
}

/// Runs a reproducible batch of trials: trial `i` uses seed `seed + i` and
/// cycles through the configured sizes. Failures are retried at a tighter
/// rank tolerance before being recorded.
pub fn run_experiment(
    kind: &ExperimentKind,
    trials: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<ExperimentReport, Error> {
    if trials < 1 {
        return Err(Error::InvalidParam("experiment needs at least one trial".into()));
    }
    match kind {
        ExperimentKind::SquareLimit { sizes } if sizes.is_empty() => {
            return Err(Error::InvalidParam("no sizes configured".into()));
        }
        ExperimentKind::RectTwoStep { sizes } if sizes.is_empty() => {
            return Err(Error::InvalidParam("no sizes configured".into()));
        }
        _ => {}
    }
    let mut failures = Vec::new();
    let mut successes = 0usize;
    for i in 0..trials {
        let trial_seed = seed.wrapping_add(i as u64);
        let ok = run_trial(kind, i, trial_seed, tol)? || {
            let tighter = Tolerance {
                rank_tol: tol.rank_tol * 0.1,
                eig_tol: tol.eig_tol,
                residual_tol: tol.residual_tol,
            };
            run_trial(kind, i, trial_seed, &tighter)?
        };
        if ok {
            successes += 1;
        } else {
            failures.push(trial_seed);
        }
    }
    Ok(ExperimentReport { trials, successes, failures, seed })
}

fn run_trial(
    kind: &ExperimentKind,
    index: usize,
    trial_seed: u64,
    tol: &Tolerance,
) -> Result<bool, Error> {
    match kind {
        ExperimentKind::SquareLimit { sizes } => {
            let m = sizes[index % sizes.len()];
            let g = sample_square_game(m, trial_seed)?;
            if !check_square_limit(&g, tol)? {
                return Ok(false);
            }
            let cert = reduce(&g, tol)?;
            Ok(cert.rank_after == m - 1 && cert.replay(&g, tol))
        }
        ExperimentKind::RectTwoStep { sizes } => {
            let (m, n, k) = sizes[index % sizes.len()];
            let g = sample_structured_rect_game(m, n, k, trial_seed, false)?;
            let cert = reduce(&g, tol)?;
            Ok(cert.rank_after == k - 2 && cert.replay(&g, tol))
        }
    }
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::wrap(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)))
}

fn uniform_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}
