//! Evaluation metrics shared by the fitters and the benchmark.

use crate::angle::Angle;
use crate::error::{Error, Result};

/// Mean circular error `(1/T) Σ |sin((θ_i - θ̂_i)/2)|`.
///
/// Zero for perfect agreement, one when every pair is antipodal.
pub fn mean_circular_error(truth: &[Angle], est: &[Angle]) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} truth vs {} estimates",
            truth.len(),
            est.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("mean circular error of empty sequences".into()));
    }
    let total: f64 = truth
        .iter()
        .zip(est)
        .map(|(t, e)| ((t.radians() - e.radians()) / 2.0).sin().abs())
        .sum();
    Ok(total / truth.len() as f64)
}

/// Bayesian information criterion `-2 L + ln(n) · df`.
pub fn bic(loglik: f64, df: usize, n: usize) -> f64 {
    -2.0 * loglik + (n as f64).ln() * df as f64
}
