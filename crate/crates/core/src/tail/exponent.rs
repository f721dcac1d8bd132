//! Rate functions governing the dominant term of the binomial-difference
//! tail at `p = alpha log(n)/n`, `q = beta log(n)/n`.
//!
//! `log_v` is the log of the single joint-pmf term in which `W` takes
//! `tau (m/n) log n` successes and `Z` takes `(tau + eps)(m/n) log n`.
//! Its maximiser over `tau` is close to `tau_star`, where the rate
//! function `h` is stationary, and `h(tau_star) = g`.

use serde::Serialize;

use super::binomial::ln_choose_real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentInputs {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub m: u64,
    pub n: u64,
}

fn check_rates(alpha: f64, beta: f64, epsilon: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!(
            "alpha and beta must be positive, got ({alpha}, {beta})"
        )));
    }
    if !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon must be finite, got {epsilon}")));
    }
    Ok(())
}

/// Log of the dominant joint-pmf term, with real-valued binomial counts.
pub fn log_v(inputs: &ExponentInputs) -> Result<f64> {
    let ExponentInputs {
        alpha,
        beta,
        epsilon,
        tau,
        m,
        n,
    } = *inputs;
    if n < 2 || m == 0 {
        return Err(Error::Domain(format!("need n >= 2 and m >= 1, got n = {n}, m = {m}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
    }
    let nf = n as f64;
    let mf = m as f64;
    let ln_n = nf.ln();
    let p = alpha * ln_n / nf;
    let q = beta * ln_n / nf;
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("p = {p}, q = {q} outside [0, 1]")));
    }
    let scale = mf / nf * ln_n;
    let w_count = tau * scale;
    let z_count = (tau + epsilon) * scale;
    for (name, c) in [("tau", w_count), ("tau + eps", z_count)] {
        if !(0.0..=mf).contains(&c) {
            return Err(Error::Domain(format!(
                "count for {name} is {c}, outside [0, m = {m}]"
            )));
        }
    }
    let term = |count: f64, prob: f64| if count == 0.0 { 0.0 } else { count * prob.ln() };
    Ok(ln_choose_real(mf, z_count)
        + ln_choose_real(mf, w_count)
        + term(w_count, p)
        + term(z_count, q)
        + (mf - w_count) * (-p).ln_1p()
        + (mf - z_count) * (-q).ln_1p())
}

/// Stationary point of `h` in `tau`: `-eps/2 + sqrt((eps/2)^2 + alpha beta)`.
pub fn tau_star(alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
    check_rates(alpha, beta, epsilon)?;
    let half = epsilon / 2.0;
    Ok(-half + (half * half + alpha * beta).sqrt())
}

/// The rate function `h(alpha, beta, tau, eps)` minimised over `tau`.
pub fn h_rate(alpha: f64, beta: f64, tau: f64, epsilon: f64) -> Result<f64> {
    check_rates(alpha, beta, epsilon)?;
    if !(tau > 0.0 && tau + epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "need tau > 0 and tau + eps > 0, got tau = {tau}, eps = {epsilon}"
        )));
    }
    let te = tau + epsilon;
    Ok(te * (te.ln() - 1.0) + tau * (tau.ln() - 1.0) - tau * (alpha * beta).ln()
        - epsilon * beta.ln()
        + (alpha + beta))
}

/// Closed-form minimum of `h` over `tau`. Negative `eps` is accepted.
pub fn g_exponent(alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
    check_rates(alpha, beta, epsilon)?;
    let half = epsilon / 2.0;
    let root = (half * half + alpha * beta).sqrt();
    if !(root > half.abs()) {
        return Err(Error::Domain(format!(
            "sqrt((eps/2)^2 + alpha beta) = {root} does not exceed |eps|/2"
        )));
    }
    Ok((alpha + beta) - epsilon * beta.ln() - 2.0 * root
        + half * (alpha * beta * (root + half) / (root - half)).ln())
}

/// Relative half-width of the grid searched around `tau_star`.
const TAU_WINDOW: f64 = 0.10;
const TAU_GRID: usize = 200;

/// `max_tau log_v` near `tau_star`: the closed-form stationary point plus a
/// grid over `tau_star * [0.9, 1.1]`, which absorbs the gap between the
/// continuous rate function and the exact log-gamma evaluation.
pub fn log_t_star(m: u64, n: u64, alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
    let center = tau_star(alpha, beta, epsilon)?;
    let at = |tau: f64| {
        log_v(&ExponentInputs {
            alpha,
            beta,
            epsilon,
            tau,
            m,
            n,
        })
    };
    let mut best = at(center)?;
    for i in 0..=TAU_GRID {
        let frac = -TAU_WINDOW + 2.0 * TAU_WINDOW * i as f64 / TAU_GRID as f64;
        if let Ok(v) = at(center * (1.0 + frac)) {
            best = best.max(v);
        }
    }
    Ok(best)
}

/// Exponent of the per-node mislabel probability after local improvement
/// when the partial labeling is wrong on a `delta_c` fraction:
/// `g(alpha, beta, -gamma delta_c)` with
/// `gamma = 1 / (delta_c sqrt(log(1/delta_c)))`.
pub fn mislabel_exponent(alpha: f64, beta: f64, delta_c: f64) -> Result<f64> {
    if !(delta_c > 0.0 && delta_c < 1.0) {
        return Err(Error::Domain(format!("delta_c must lie in (0, 1), got {delta_c}")));
    }
    let gamma = 1.0 / (delta_c * (1.0 / delta_c).ln().sqrt());
    g_exponent(alpha, beta, -gamma * delta_c)
}
