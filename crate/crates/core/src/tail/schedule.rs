//! The finite-n schedule for the impossibility argument, the exact
//! probability that a single vertex of `H` prefers the wrong side, and the
//! union bound on ML failure.

use serde::Serialize;

use super::binomial::{diff_binomial_tail, ln_choose, log_sum_exp, TailMethod, TailResult};
use crate::error::{Error, Result};
use crate::model::SbmParams;

/// `gamma = log^3 n`, `delta = ceil(log n / log log n)`, `|H| = floor(n / gamma)`.
///
/// `h_size` is zero below roughly n = 94, where `log^3 n > n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundSchedule {
    pub n: usize,
    pub gamma_n: f64,
    pub delta_n: u64,
    pub h_size: usize,
}

impl LowerBoundSchedule {
    pub const MIN_N: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_N || n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "schedule needs even n >= {}, got {n}",
                Self::MIN_N
            )));
        }
        let ln_n = (n as f64).ln();
        let gamma_n = ln_n.powi(3);
        let delta_n = (ln_n / ln_n.ln()).ceil() as u64;
        let h_size = (n as f64 / gamma_n).floor() as usize;
        Ok(Self {
            n,
            gamma_n,
            delta_n,
            h_size,
        })
    }
}

/// Probability that a fixed vertex `j` of `H` has at least `delta_n` more
/// neighbours in the other community than in its own community minus `H`.
pub fn rho_exact(params: &SbmParams) -> Result<TailResult> {
    let sched = LowerBoundSchedule::new(params.n)?;
    let half = (params.n / 2) as u64;
    diff_binomial_tail(
        half,
        half - sched.h_size as u64,
        params.p(),
        params.q(),
        sched.delta_n as i64,
    )
}

/// `sum_{k=1}^{n/4} C(n/2, k)^2 T(2k(n/2 - k), p, q, 0)`.
///
/// This is a bound, not a probability, and can exceed 1.
pub fn ml_failure_upper_bound(params: &SbmParams) -> Result<f64> {
    Ok(ml_failure_bound_terms(params)?
        .iter()
        .map(|t| t.exp())
        .sum())
}

/// Log of each summand of the ML union bound, indexed from `k = 1`.
pub fn ml_failure_bound_terms(params: &SbmParams) -> Result<Vec<f64>> {
    let half = (params.n / 2) as u64;
    let (p, q) = (params.p(), params.q());
    (1..=params.n as u64 / 4)
        .map(|k| {
            let pairs = 2 * k * (half - k);
            let tail = diff_binomial_tail(pairs, pairs, p, q, 0)?;
            Ok(2.0 * ln_choose(half, k) + tail.log_probability)
        })
        .collect()
}

/// Log of the ML union bound, usable when the sum underflows.
pub fn ml_failure_log_upper_bound(params: &SbmParams) -> Result<f64> {
    Ok(log_sum_exp(&ml_failure_bound_terms(params)?))
}

/// True when every term of the bound was computed on the full support.
pub fn ml_bound_is_exact(params: &SbmParams) -> Result<bool> {
    let half = (params.n / 2) as u64;
    let (p, q) = (params.p(), params.q());
    for k in 1..=params.n as u64 / 4 {
        let pairs = 2 * k * (half - k);
        if diff_binomial_tail(pairs, pairs, p, q, 0)?.method != TailMethod::FullConvolution {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_pmf(m: u64, p: f64, k: u64) -> f64 {
        // multiplicative form, independent of the log-space code
        let mut c = 1.0;
        for i in 0..k {
            c *= (m - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
    }

    fn brute_tail(mz: u64, mw: u64, p: f64, q: f64, s: i64) -> f64 {
        let mut total = 0.0;
        for z in 0..=mz {
            for w in 0..=mw {
                if z as i64 - w as i64 >= s {
                    total += binom_pmf(mz, q, z) * binom_pmf(mw, p, w);
                }
            }
        }
        total
    }

    fn brute_choose(m: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |c, i| c * (m - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn schedule_values() {
        let s = LowerBoundSchedule::new(16).unwrap();
        assert_eq!(s.delta_n, 3);
        assert_eq!(s.h_size, 0);
        let s = LowerBoundSchedule::new(1000).unwrap();
        assert_eq!(s.delta_n, 4);
        assert_eq!(s.h_size, 3);
        assert!(LowerBoundSchedule::new(14).is_err());
        assert!(LowerBoundSchedule::new(17).is_err());
    }

    #[test]
    fn rho_small_oracle() {
        let params = SbmParams::new(16, 4.0, 1.0).unwrap();
        let rho = rho_exact(&params).unwrap();
        let oracle = brute_tail(8, 8, params.p(), params.q(), 3);
        assert!((rho.probability - oracle).abs() < 1e-14, "{} vs {oracle}", rho.probability);
        assert!((rho.probability - 1.5565476294637766e-4).abs() < 1e-17);
    }

    #[test]
    fn rho_moderate_n() {
        let params = SbmParams::new(100, 5.0, 1.0).unwrap();
        let sched = LowerBoundSchedule::new(100).unwrap();
        assert_eq!((sched.h_size, sched.delta_n), (1, 4));
        let rho = rho_exact(&params).unwrap();
        let oracle = brute_tail(50, 49, params.p(), params.q(), 4);
        assert!((rho.probability - oracle).abs() < 1e-12 * oracle);
        // frozen from a 30-digit evaluation of the same double sum
        assert!((rho.probability / 3.8499991475234412e-5 - 1.0).abs() < 1e-12);
        // removing W summands can only raise the tail
        let equal = diff_binomial_tail(50, 50, params.p(), params.q(), 4).unwrap();
        assert!(rho.probability >= equal.probability);
    }

    #[test]
    fn rho_exponent_falls_toward_f() {
        // -log rho / log n at n = 100, 1e3, 1e4, 1e5 (30-digit reference)
        let reference = [2.207269683, 1.595528858, 1.486465713, 1.337179165];
        let f = 3.0 - 5f64.sqrt();
        let mut last = f64::INFINITY;
        for (n, want) in [100usize, 1000, 10_000, 100_000].into_iter().zip(reference) {
            let params = SbmParams::new(n, 5.0, 1.0).unwrap();
            let got = -rho_exact(&params).unwrap().log_probability / params.log_n();
            assert!((got - want).abs() < 1e-8, "n = {n}: {got} vs {want}");
            assert!(got < last && got > f);
            last = got;
        }
    }

    #[test]
    fn ml_bound_oracle() {
        let params = SbmParams::new(16, 4.0, 1.0).unwrap();
        let (p, q) = (params.p(), params.q());
        let oracle: f64 = (1..=4u64)
            .map(|k| {
                let pairs = 2 * k * (8 - k);
                brute_choose(8, k).powi(2) * brute_tail(pairs, pairs, p, q, 0)
            })
            .sum();
        let bound = ml_failure_upper_bound(&params).unwrap();
        assert!((bound - oracle).abs() < 1e-12 * oracle, "{bound} vs {oracle}");
        assert!(ml_bound_is_exact(&params).unwrap());
        assert!((ml_failure_log_upper_bound(&params).unwrap() - bound.ln()).abs() < 1e-12);
    }

    #[test]
    fn ml_bound_decreases_in_alpha() {
        let weak = ml_failure_upper_bound(&SbmParams::new(16, 4.0, 1.0).unwrap()).unwrap();
        // alpha = 6 puts p above 1 at n = 16
        assert!(SbmParams::new(16, 6.0, 1.0).is_err());
        let strong = ml_failure_upper_bound(&SbmParams::new(16, 5.0, 1.0).unwrap()).unwrap();
        assert!(strong <= weak);
    }

    #[test]
    fn ml_bound_vanishes_without_cross_edges() {
        let n = 16usize;
        let alpha = n as f64 / (n as f64).ln();
        let params = SbmParams::new(n, alpha, 0.0).unwrap();
        assert_eq!(ml_failure_upper_bound(&params).unwrap(), 0.0);
        let near = SbmParams::new(n, alpha * 0.99, 0.0).unwrap();
        assert!(ml_failure_upper_bound(&near).unwrap() < 1e-20);
    }
}
