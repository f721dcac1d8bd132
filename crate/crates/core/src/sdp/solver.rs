//! Low-rank ascent for `max Tr(B X)` over `X ⪰ 0`, `X_ii = 1`, and rounding
//! of the result to a balanced labeling.
//!
//! `X = F F'` with unit rows `F_i` in `R^r`. Each step moves along the
//! gradient `2 B F` projected onto the tangent space of every row's sphere,
//! renormalises the rows, and backtracks until the Armijo condition holds,
//! so the objective never decreases.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::model::Labeling;
use crate::seed::mix;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConfig {
    /// Factor width; `None` means `max(2, ceil(sqrt(2n)))`.
    pub rank: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the projected gradient norm drops below this times `||B||_F`.
    pub grad_tol: f64,
    pub seed: u64,
    /// Keep the objective after every accepted step of the winning restart.
    pub record_history: bool,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            rank: None,
            restarts: 5,
            max_iters: 5000,
            grad_tol: 1e-6,
            seed: 0,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub factor: DMatrix<f64>,
    pub objective: f64,
    pub initial_objective: f64,
    pub rounded: Labeling,
    /// Iterations taken by the winning restart.
    pub rounds_used: usize,
    pub restart: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub history: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;
const MAX_STEP: f64 = 1e6;

fn default_rank(n: usize) -> usize {
    ((2.0 * n as f64).sqrt().ceil() as usize).max(2)
}

fn normalize_rows(f: &mut DMatrix<f64>) {
    for mut row in f.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
}

fn objective(b: &DMatrix<f64>, f: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let bf = b * f;
    (f.dot(&bf), bf)
}

struct Run {
    factor: DMatrix<f64>,
    objective: f64,
    initial: f64,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    history: Vec<f64>,
}

fn ascend(b: &DMatrix<f64>, rank: usize, cfg: &SdpConfig, seed: u64, stop: f64) -> Run {
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = DMatrix::from_fn(n, rank, |_, _| StandardNormal.sample(&mut rng));
    normalize_rows(&mut f);
    let (mut value, mut bf) = objective(b, &f);
    let initial = value;
    let mut history = Vec::new();
    if cfg.record_history {
        history.push(value);
    }
    let mut step = 1.0 / b.norm().max(1.0);
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm = f64::INFINITY;

    while iterations < cfg.max_iters {
        let mut rg = 2.0 * &bf;
        for i in 0..n {
            let radial = rg.row(i).dot(&f.row(i));
            let tangent = rg.row(i) - f.row(i) * radial;
            rg.row_mut(i).copy_from(&tangent);
        }
        gnorm = rg.norm();
        if gnorm < stop {
            converged = true;
            break;
        }
        let target = ARMIJO * gnorm * gnorm;
        let accepted = loop {
            let mut trial = &f + step * &rg;
            normalize_rows(&mut trial);
            let (tv, tbf) = objective(b, &trial);
            if tv >= value + step * target {
                break Some((trial, tv, tbf));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        iterations += 1;
        let Some((trial, tv, tbf)) = accepted else {
            break;
        };
        assert!(tv >= value, "ascent step lowered the objective");
        f = trial;
        value = tv;
        bf = tbf;
        if cfg.record_history {
            history.push(value);
        }
        step = (step * 2.0).min(MAX_STEP);
    }
    Run {
        factor: f,
        objective: value,
        initial,
        iterations,
        converged,
        gradient_norm: gnorm,
        history,
    }
}

/// Solves the relaxation from `cfg.restarts` random starts and keeps the best
/// (ties to the lowest restart index). Optimality is not certified here.
pub fn sdp_solve(b: &SymMatrix, cfg: &SdpConfig) -> Result<SdpSolution> {
    let n = b.n();
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidParams(format!("need even n >= 2, got {n}")));
    }
    if (0..n).any(|i| b.get(i, i) != 0.0) {
        return Err(Error::InvalidParams("B must have a zero diagonal".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidParams("restarts must be positive".into()));
    }
    let rank = cfg.rank.unwrap_or_else(|| default_rank(n)).clamp(1, n);
    let dense = b.as_dense();
    let stop = cfg.grad_tol * b.frobenius_norm();
    let runs: Vec<Run> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| ascend(dense, rank, cfg, mix(cfg.seed, r), stop))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.objective > a.1.objective { b } else { a })
        .expect("at least one restart");
    let rounded = round_factor(&best.factor)?;
    Ok(SdpSolution {
        factor: best.factor,
        objective: best.objective,
        initial_objective: best.initial,
        rounded,
        rounds_used: best.iterations,
        restart,
        converged: best.converged,
        gradient_norm: best.gradient_norm,
        history: best.history,
    })
}

/// Signs of the leading eigenvector of `F F'`, obtained from the small
/// matrix `F' F` and lifted back through `F`, then balanced.
pub fn round_factor(f: &DMatrix<f64>) -> Result<Labeling> {
    let gram = f.transpose() * f;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.imax();
    if !(eig.eigenvalues[top] > 0.0) {
        return Err(Error::Degenerate("factor has no positive direction".into()));
    }
    let lifted = f * eig.eigenvectors.column(top);
    balanced_signs(lifted.as_slice())
}

/// Signs of the leading eigenvector of a feasible `X`, then balanced.
pub fn round_matrix(x: &SymMatrix) -> Result<Labeling> {
    let eig = SymmetricEigen::new(x.as_dense().clone());
    let top = eig.eigenvalues.imax();
    if !(eig.eigenvalues[top] > 0.0) {
        return Err(Error::Degenerate("matrix has no positive eigenvalue".into()));
    }
    balanced_signs(eig.eigenvectors.column(top).as_slice())
}

/// Sign vector of `v` (zero counts as `+1`), made balanced by flipping the
/// excess side's entries of smallest magnitude, lowest index first on ties.
pub fn balanced_signs(v: &[f64]) -> Result<Labeling> {
    let n = v.len();
    if n % 2 != 0 {
        return Err(Error::InvalidParams(format!("cannot balance odd length {n}")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("eigenvector is zero or non-finite".into()));
    }
    let mut signs: Vec<i8> = v.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect();
    let plus = signs.iter().filter(|&&s| s == 1).count();
    let (excess_sign, excess) = if plus > n / 2 {
        (1, plus - n / 2)
    } else {
        (-1, n / 2 - plus)
    };
    let mut side: Vec<usize> = (0..n).filter(|&i| signs[i] == excess_sign).collect();
    side.sort_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(a.cmp(&b)));
    for &i in side.iter().take(excess) {
        signs[i] = -excess_sign;
    }
    Labeling::new(signs)
}
