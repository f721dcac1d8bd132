//! Exact upper tail of the difference of two independent binomials,
//! `P(Z - W >= s)` with `Z ~ Bin(mz, q)` and `W ~ Bin(mw, p)`.
//!
//! Everything runs in natural-log space. Writing the tail as
//! `sum_w P(W = w) P(Z >= s + w)` turns the convolution into a single pass
//! over the support of `W` once the log-survival function of `Z` is known.
//! Large supports are truncated where a multiplicative Chernoff bound
//! certifies the discarded mass.

use std::sync::OnceLock;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::bounds::chernoff_multiplicative_upper;
use crate::error::{Error, Result};

/// Supports larger than this are truncated.
pub const FULL_SUPPORT_LIMIT: u64 = 2000;

/// Absolute discarded mass allowed per binomial on the first pass.
const TRUNCATION_TARGET: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    FullConvolution,
    TruncatedConvolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailResult {
    pub probability: f64,
    pub log_probability: f64,
    pub truncation_error_bound: f64,
    pub method: TailMethod,
}

impl TailResult {
    fn exact(log_probability: f64) -> Self {
        Self::from_log(log_probability, 0.0, TailMethod::FullConvolution)
    }

    fn from_log(log_probability: f64, err: f64, method: TailMethod) -> Self {
        let log_probability = log_probability.min(0.0);
        Self {
            probability: log_probability.exp(),
            log_probability,
            truncation_error_bound: err,
            method,
        }
    }
}

const LN_FACTORIAL_TABLE: usize = 1 << 16;

/// `ln k!`, tabulated by compensated summation for `k < 2^16`.
pub fn ln_factorial(k: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        out.push(0.0);
        for i in 1..LN_FACTORIAL_TABLE {
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            out.push(sum);
        }
        out
    });
    match table.get(k as usize) {
        Some(&v) => v,
        None => ln_gamma(k as f64 + 1.0),
    }
}

/// `ln C(m, k)` for integer arguments.
///
/// For `k` small against a large `m` the falling factorial is expanded as
/// `k ln m + sum ln(1 - i/m)`, which avoids cancelling two huge log-gamma
/// values.
pub fn ln_choose(m: u64, k: u64) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    let k = k.min(m - k);
    if k == 0 {
        return 0.0;
    }
    if (m as usize) < LN_FACTORIAL_TABLE {
        return ln_factorial(m) - ln_factorial(k) - ln_factorial(m - k);
    }
    let mf = m as f64;
    let kf = k as f64;
    if k <= 4096 && m >= 8 * k {
        let falling: f64 = kf * mf.ln() + (1..k).map(|i| (-(i as f64) / mf).ln_1p()).sum::<f64>();
        falling - ln_factorial(k)
    } else {
        ln_gamma(mf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(mf - kf + 1.0)
    }
}

/// `ln C(m, k)` generalised to real `k` through the gamma function.
pub fn ln_choose_real(m: f64, k: f64) -> f64 {
    if k < 0.0 || k > m {
        return f64::NEG_INFINITY;
    }
    ln_gamma(m + 1.0) - ln_gamma(k + 1.0) - ln_gamma(m - k + 1.0)
}

/// Log-pmf of `Bin(m, p)` on `0..=kmax`.
pub fn binomial_log_pmf(m: u64, p: f64, kmax: u64) -> Vec<f64> {
    let kmax = kmax.min(m);
    if p == 0.0 {
        let mut out = vec![f64::NEG_INFINITY; kmax as usize + 1];
        out[0] = 0.0;
        return out;
    }
    if p == 1.0 {
        let mut out = vec![f64::NEG_INFINITY; kmax as usize + 1];
        if kmax == m {
            out[m as usize] = 0.0;
        }
        return out;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=kmax)
        .map(|k| ln_choose(m, k) + k as f64 * lp + (m - k) as f64 * lq)
        .collect()
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Smallest `k >= start` such that the Chernoff bound on
/// `P(Bin(m, p) > k)` is at most `target`, together with that bound.
fn chernoff_cutoff(m: u64, p: f64, start: u64, target: f64) -> (u64, f64) {
    let mu = m as f64 * p;
    if mu == 0.0 {
        return (start.min(m), 0.0);
    }
    let mut k = start.max(mu.ceil() as u64);
    while k < m {
        let t = (k + 1) as f64 / mu;
        let bound = chernoff_multiplicative_upper(mu, t).unwrap_or(1.0);
        if bound <= target {
            return (k, bound);
        }
        k += 1;
    }
    (m, 0.0)
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `P(Z - W >= s)` with `Z ~ Bin(mz, q)` and `W ~ Bin(mw, p)` independent.
pub fn diff_binomial_tail(mz: u64, mw: u64, p: f64, q: f64, s: i64) -> Result<TailResult> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    if s <= -(mw as i64) {
        return Ok(TailResult::exact(0.0));
    }
    if s > mz as i64 {
        return Ok(TailResult::exact(f64::NEG_INFINITY));
    }
    if mz <= FULL_SUPPORT_LIMIT && mw <= FULL_SUPPORT_LIMIT {
        let log_p = tail_on_support(mz, mw, p, q, s, mz, mw);
        return Ok(TailResult::exact(log_p));
    }

    let mut target = TRUNCATION_TARGET;
    let mut pass = 0;
    loop {
        let (wmax, w_err) = chernoff_cutoff(mw, p, 0, target);
        // P(Z >= s + w) is needed up to w = wmax
        let reach = (s + wmax as i64).clamp(0, mz as i64) as u64;
        let (zmax, z_err) = chernoff_cutoff(mz, q, reach, target);
        let log_p = tail_on_support(mz, mw, p, q, s, zmax, wmax);
        let err = w_err + z_err;
        let result = TailResult::from_log(log_p, err, TailMethod::TruncatedConvolution);
        // refine once when the absolute target is loose against a tiny tail
        let loose = err > 1e-9 * result.probability && (wmax < mw || zmax < mz);
        if !loose || pass == 1 || result.probability == 0.0 {
            return Ok(result);
        }
        target = (result.probability * 1e-12).max(f64::MIN_POSITIVE);
        pass += 1;
    }
}

fn tail_on_support(mz: u64, mw: u64, p: f64, q: f64, s: i64, zmax: u64, wmax: u64) -> f64 {
    let lz = binomial_log_pmf(mz, q, zmax);
    let lw = binomial_log_pmf(mw, p, wmax);

    let mut log_surv = vec![f64::NEG_INFINITY; lz.len() + 1];
    for z in (0..lz.len()).rev() {
        log_surv[z] = log_add_exp(lz[z], log_surv[z + 1]);
    }

    let terms: Vec<f64> = lw
        .iter()
        .enumerate()
        .filter_map(|(w, &lpw)| {
            let t = s + w as i64;
            if t <= 0 {
                Some(lpw)
            } else if t as usize >= lz.len() {
                None
            } else {
                Some(lpw + log_surv[t as usize])
            }
        })
        .collect();
    log_sum_exp(&terms)
}
