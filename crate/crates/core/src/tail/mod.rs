//! Threshold functions, exact binomial-difference tails, rate exponents and
//! scalar concentration bounds.

mod binomial;
mod bounds;
mod exponent;
mod schedule;

use serde::Serialize;

use crate::error::{Error, Result};

pub use binomial::{
    binomial_log_pmf, diff_binomial_tail, ln_choose, ln_choose_real, TailMethod, TailResult,
    FULL_SUPPORT_LIMIT,
};
pub use bounds::{bernstein_scalar_upper, chernoff_multiplicative_upper, chernoff_weak_upper};
pub use exponent::{
    g_exponent, h_rate, log_t_star, log_v, mislabel_exponent, tau_star, ExponentInputs,
};
pub use schedule::{
    ml_bound_is_exact, ml_failure_bound_terms, ml_failure_log_upper_bound,
    ml_failure_upper_bound, rho_exact, LowerBoundSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    pub f_value: f64,
    pub recoverable: bool,
    pub connectivity_ok: bool,
    pub equivalent_form_ok: bool,
}

/// `f(alpha, beta) = (alpha + beta)/2 - sqrt(alpha beta)`; exact recovery is
/// possible iff `f > 1`.
pub fn threshold_f(alpha: f64, beta: f64) -> Result<ThresholdVerdict> {
    if !(alpha.is_finite() && alpha >= 0.0 && beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!(
            "alpha and beta must be finite and nonnegative, got ({alpha}, {beta})"
        )));
    }
    let sum = alpha + beta;
    let f_value = sum / 2.0 - (alpha * beta).sqrt();
    let diff = alpha - beta;
    Ok(ThresholdVerdict {
        f_value,
        recoverable: f_value > 1.0,
        connectivity_ok: sum / 2.0 > 1.0,
        equivalent_form_ok: sum > 2.0 && diff * diff > 4.0 * sum - 4.0,
    })
}
