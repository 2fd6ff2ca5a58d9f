//! Gaussian likelihood primitives for the tied-mean mixture.

use std::f64::consts::PI;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::ParametricAgmm;

/// Variances below this are treated as degenerate.
pub const SIGMA2_DEGENERATE: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Density of `N(mu, sigma2)` at `theta`.
pub fn gaussian_pdf(theta: f64, mu: f64, sigma2: f64) -> Result<f64> {
    Ok(gaussian_log_pdf(theta, mu, sigma2)?.exp())
}

/// Log density of `N(mu, sigma2)` at `theta`.
pub fn gaussian_log_pdf(theta: f64, mu: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let d = theta - mu;
    Ok(-0.5 * (LN_2PI + sigma2.ln()) - d * d / (2.0 * sigma2))
}

/// Mean of mixture component `k` (1-based): `μ - (2k+1)π`.
pub fn component_mean(mu: f64, k: usize) -> f64 {
    mu - (2 * k + 1) as f64 * PI
}

/// `log Σ exp(v)` computed stably; `-∞` entries contribute nothing.
pub fn log_sum_exp(vals: &[f64]) -> f64 {
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = vals.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Per-observation component log densities `log r_k + log f(θ | μ(x)-(2k+1)π, σ²)`.
pub(crate) fn component_log_terms(
    model: &ParametricAgmm,
    theta: f64,
    x: &[f64],
    out: &mut Vec<f64>,
) -> Result<()> {
    let mu = model.latent_mean(x)?;
    out.clear();
    for (k_idx, &r) in model.weights.iter().enumerate() {
        let mean_k = component_mean(mu, k_idx + 1);
        let term = if r > 0.0 {
            r.ln() + gaussian_log_pdf(theta, mean_k, model.sigma2)?
        } else {
            f64::NEG_INFINITY
        };
        out.push(term);
    }
    Ok(())
}

/// Observed-data log likelihood `Σ_i log Σ_k r_k f(θ_i | φ(x_i)'β - (2k+1)π, σ²)`.
///
/// Evaluated in log space throughout; component densities at distance 2π or
/// more from the data underflow a direct summation.
pub fn mixture_loglik(model: &ParametricAgmm, data: &Dataset) -> Result<f64> {
    if model.sigma2 < SIGMA2_DEGENERATE {
        return Err(Error::DegenerateVariance { sigma2: model.sigma2 });
    }
    let mut terms = Vec::with_capacity(model.num_components());
    let mut total = 0.0;
    for i in 0..data.len() {
        component_log_terms(model, data.theta(i).radians(), data.x(i), &mut terms)?;
        total += log_sum_exp(&terms);
    }
    Ok(total)
}
