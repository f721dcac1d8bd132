//! Scalar concentration bounds.

use crate::error::{Error, Result};

/// Multiplicative Chernoff bound `P(X >= t mu) <= (e^{t-1} / t^t)^mu` for a
/// sum of independent Bernoulli variables with mean `mu`.
pub fn chernoff_multiplicative_upper(mu: f64, t: f64) -> Result<f64> {
    check_chernoff(mu, t)?;
    Ok((mu * (t - 1.0) - mu * t * t.ln()).exp())
}

/// The looser form `(t / e)^{-t mu}`. Unlike the sharp form it exceeds 1
/// for `t < e`.
pub fn chernoff_weak_upper(mu: f64, t: f64) -> Result<f64> {
    check_chernoff(mu, t)?;
    Ok((-t * mu * (t.ln() - 1.0)).exp())
}

fn check_chernoff(mu: f64, t: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if !(t.is_finite() && t >= 1.0) {
        return Err(Error::Domain(format!("t must be at least 1, got {t}")));
    }
    Ok(())
}

/// Bernstein bound `exp(-(t^2/2) / (sigma2 + R t / 3))`.
pub fn bernstein_scalar_upper(sigma2: f64, r: f64, t: f64) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::Domain(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("R must be positive, got {r}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok((-(0.5 * t * t) / (sigma2 + r * t / 3.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_multiplicative_upper(3.7, 1.0).unwrap(), 1.0);
        assert!((chernoff_multiplicative_upper(1.0, E).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((chernoff_multiplicative_upper(1.0, 2.0).unwrap() - E / 4.0).abs() < 1e-15);
        assert!((chernoff_multiplicative_upper(1.0, 2.0).unwrap() - 0.679570).abs() < 1e-6);
        assert!(chernoff_multiplicative_upper(1.0, 0.5).is_err());
        assert!(chernoff_multiplicative_upper(0.0, 2.0).is_err());
    }

    #[test]
    fn weak_form_dominates() {
        for &t in &[1.0, 1.5, 2.0, E, 5.0, 40.0] {
            let sharp = chernoff_multiplicative_upper(2.5, t).unwrap();
            let weak = chernoff_weak_upper(2.5, t).unwrap();
            assert!(weak >= sharp);
        }
        assert!((chernoff_weak_upper(2.0, E).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(bernstein_scalar_upper(2.0, 3.0, 0.0).unwrap(), 1.0);
        assert_eq!(bernstein_scalar_upper(0.0, 3.0, 0.0).unwrap(), 1.0);
        let b = bernstein_scalar_upper(1.0, 1.0, 1.0).unwrap();
        assert!((b - (-0.375f64).exp()).abs() < 1e-15);
        assert!((b - 0.687289).abs() < 1e-6);
        let seq: Vec<f64> = (0..3)
            .map(|t| bernstein_scalar_upper(1.0, 1.0, t as f64).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] <= w[0]));
        assert!(bernstein_scalar_upper(-1.0, 1.0, 1.0).is_err());
        assert!(bernstein_scalar_upper(1.0, 0.0, 1.0).is_err());
    }
}
