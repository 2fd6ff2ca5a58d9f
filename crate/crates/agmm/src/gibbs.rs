//! Conjugate Gibbs sampling for the parametric model.
//!
//! Priors: `β ~ N(0, σ₀² I)`, `σ² ~ Inv-Gamma(α, λ)`, `r ~ Dirichlet(γ)`,
//! with hyperprior `σ₀² ~ Inv-Gamma(α₀, λ₀)`. Every full conditional is a
//! standard distribution, so one sweep is: categorical turn counts,
//! multivariate normal `β`, inverse-gamma `σ²`, Dirichlet `r`,
//! inverse-gamma `σ₀²` — no Metropolis steps anywhere.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::basis::Basis;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::init::{init_parameters, initial_assignment, InitOptions};
use crate::likelihood::{component_mean, gaussian_log_pdf, log_sum_exp};
use crate::linalg::{Cholesky, NormalEquations};
use crate::model::ParametricAgmm;
use crate::rng::{rng_from_seed, Rng};

/// Prior hyperparameters; all must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    /// Inverse-gamma shape and rate for the `σ₀²` hyperprior.
    pub alpha0: f64,
    pub lambda0: f64,
    /// Inverse-gamma shape and rate for `σ²`.
    pub alpha: f64,
    pub lambda: f64,
    /// Dirichlet concentration for `r`, length `K`.
    pub gamma: Vec<f64>,
}

impl Priors {
    /// Unit hyperparameters: `α = λ = α₀ = λ₀ = 1`, `γ = (1, ..., 1)`.
    pub fn unit(k: usize) -> Priors {
        Priors { alpha0: 1.0, lambda0: 1.0, alpha: 1.0, lambda: 1.0, gamma: vec![1.0; k] }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let positive = self.alpha0 > 0.0
            && self.lambda0 > 0.0
            && self.alpha > 0.0
            && self.lambda > 0.0
            && self.gamma.iter().all(|&g| g > 0.0);
        if !positive {
            return Err(Error::InvalidArgument("all prior hyperparameters must be positive".into()));
        }
        if self.gamma.len() != k {
            return Err(Error::InvalidArgument(format!(
                "Dirichlet concentration has length {}, expected K = {k}",
                self.gamma.len()
            )));
        }
        Ok(())
    }
}

/// One recorded state of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsDraw {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub r: Vec<f64>,
    pub z: Vec<u16>,
    pub sigma0_2: f64,
}

/// A dense record of every sweep, including burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTrace {
    pub draws: Vec<GibbsDraw>,
    pub burn_in: usize,
}

impl GibbsTrace {
    pub fn total(&self) -> usize {
        self.draws.len()
    }

    /// Draws after burn-in.
    pub fn retained(&self) -> &[GibbsDraw] {
        &self.draws[self.burn_in..]
    }
}

fn inv_gamma(shape: f64, rate: f64, rng: &mut Rng) -> f64 {
    // X ~ Gamma(shape, scale = 1/rate)  =>  1/X ~ Inv-Gamma(shape, rate)
    let g = Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters");
    1.0 / g.sample(rng)
}

/// Runs one chain of the collapsed-nothing Gibbs sampler.
///
/// The state starts from the clustering initialization, so the chain is
/// deterministic given `(data, K, priors, seed)`.
pub fn gibbs_sample(
    data: &Dataset,
    basis: &Basis,
    k: usize,
    priors: &Priors,
    total: usize,
    burn_in: usize,
    seed: u64,
) -> Result<GibbsTrace> {
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k > u16::MAX as usize {
        return Err(Error::InvalidArgument("K is unreasonably large".into()));
    }
    priors.validate(k)?;
    if total <= burn_in {
        return Err(Error::InvalidArgument(format!(
            "total iterations ({total}) must exceed burn-in ({burn_in})"
        )));
    }
    if basis.input_dim() != data.dim() {
        return Err(Error::InvalidArgument("basis dimension does not match data".into()));
    }

    let n = data.len();
    let q = basis.output_dim();
    let phis: Vec<Vec<f64>> = data
        .xs()
        .iter()
        .map(|x| basis.expand(x))
        .collect::<Result<_>>()?;

    // Gram matrix Φ'Φ is fixed across sweeps.
    let mut gram = vec![0.0; q * q];
    for phi in &phis {
        for a in 0..q {
            for b in 0..q {
                gram[a * q + b] += phi[a] * phi[b];
            }
        }
    }

    // Starting state from the clustering pipeline; fall back to a flat
    // state when the hard M-step cannot run.
    let mut z: Vec<usize> = initial_assignment(data, k, &InitOptions::default())?.z;
    let (mut beta, mut sigma2, mut r) =
        match init_parameters(data, &crate::init::ZAssignment { z: z.clone() }, basis) {
            Ok(m) => (m.beta, m.sigma2.max(1e-4), m.weights),
            Err(_) => (vec![0.0; q], 1.0, vec![1.0 / k as f64; k]),
        };
    let mut sigma0_2 = 1.0;

    let mut rng = rng_from_seed(seed);
    let mut draws = Vec::with_capacity(total);
    let mut terms = vec![0.0; k];
    for _ in 0..total {
        // Turn counts.
        for i in 0..n {
            let mu: f64 = phis[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
            for k_idx in 0..k {
                terms[k_idx] = if r[k_idx] > 0.0 {
                    r[k_idx].ln()
                        + gaussian_log_pdf(
                            data.theta(i).radians(),
                            component_mean(mu, k_idx + 1),
                            sigma2,
                        )?
                } else {
                    f64::NEG_INFINITY
                };
            }
            let lse = log_sum_exp(&terms);
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut pick = k - 1;
            for k_idx in 0..k {
                cum += (terms[k_idx] - lse).exp();
                if u <= cum {
                    pick = k_idx;
                    break;
                }
            }
            z[i] = pick + 1;
        }

        // β | rest: precision Φ'Φ/σ² + I/σ₀², mean from the shifted responses.
        let mut ne = NormalEquations::new(q);
        for i in 0..n {
            let y = data.theta(i).radians() + (2 * z[i] + 1) as f64 * PI;
            ne.add_observation(&phis[i], y, 1.0 / sigma2);
        }
        ne.add_diagonal(1.0 / sigma0_2);
        let chol = Cholesky::decompose(ne.matrix(), q)?;
        let mean = chol.solve(ne.rhs());
        let eps: Vec<f64> = (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let noise = chol.back_substitute(&eps);
        beta = mean.iter().zip(&noise).map(|(m, e)| m + e).collect();

        // σ² | rest.
        let mut rss = 0.0;
        for i in 0..n {
            let mu: f64 = phis[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
            let resid = data.theta(i).radians() + (2 * z[i] + 1) as f64 * PI - mu;
            rss += resid * resid;
        }
        sigma2 = inv_gamma(priors.alpha + n as f64 / 2.0, priors.lambda + rss / 2.0, &mut rng);

        // r | rest.
        let mut counts = vec![0.0; k];
        for &zi in &z {
            counts[zi - 1] += 1.0;
        }
        let mut gs = Vec::with_capacity(k);
        for k_idx in 0..k {
            let g = Gamma::new(priors.gamma[k_idx] + counts[k_idx], 1.0)
                .expect("positive gamma shape");
            gs.push(g.sample(&mut rng));
        }
        let gsum: f64 = gs.iter().sum();
        r = gs.into_iter().map(|g| g / gsum).collect();

        // σ₀² | rest.
        let bb: f64 = beta.iter().map(|b| b * b).sum();
        sigma0_2 =
            inv_gamma(priors.alpha0 + q as f64 / 2.0, priors.lambda0 + bb / 2.0, &mut rng);

        draws.push(GibbsDraw {
            beta: beta.clone(),
            sigma2,
            r: r.clone(),
            z: z.iter().map(|&v| v as u16).collect(),
            sigma0_2,
        });
    }
    Ok(GibbsTrace { draws, burn_in })
}

/// Posterior means, standard deviations and central 95% intervals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PosteriorSummary {
    pub beta_mean: Vec<f64>,
    pub beta_sd: Vec<f64>,
    pub beta_ci: Vec<(f64, f64)>,
    pub sigma2_mean: f64,
    pub sigma2_sd: f64,
    pub sigma2_ci: (f64, f64),
    pub r_mean: Vec<f64>,
    pub r_sd: Vec<f64>,
    pub r_ci: Vec<(f64, f64)>,
}

impl PosteriorSummary {
    /// The posterior-mean parametric model, usable for prediction.
    pub fn mean_model(&self, basis: Basis) -> Result<ParametricAgmm> {
        let total: f64 = self.r_mean.iter().sum();
        let weights = self.r_mean.iter().map(|r| r / total).collect();
        ParametricAgmm::new(basis, self.beta_mean.clone(), self.sigma2_mean, weights)
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(values: &[f64]) -> (f64, f64, (f64, f64)) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    (mean, var.sqrt(), (quantile(&sorted, 0.025), quantile(&sorted, 0.975)))
}

/// Summarizes the retained draws; requires at least 100 of them.
pub fn posterior_summary(trace: &GibbsTrace) -> Result<PosteriorSummary> {
    let retained = trace.retained();
    if retained.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "only {} retained draws; need at least 100",
            retained.len()
        )));
    }
    let q = retained[0].beta.len();
    let k = retained[0].r.len();
    let mut beta_mean = Vec::with_capacity(q);
    let mut beta_sd = Vec::with_capacity(q);
    let mut beta_ci = Vec::with_capacity(q);
    for j in 0..q {
        let col: Vec<f64> = retained.iter().map(|d| d.beta[j]).collect();
        let (m, s, ci) = summarize(&col);
        beta_mean.push(m);
        beta_sd.push(s);
        beta_ci.push(ci);
    }
    let sig: Vec<f64> = retained.iter().map(|d| d.sigma2).collect();
    let (sigma2_mean, sigma2_sd, sigma2_ci) = summarize(&sig);
    let mut r_mean = Vec::with_capacity(k);
    let mut r_sd = Vec::with_capacity(k);
    let mut r_ci = Vec::with_capacity(k);
    for j in 0..k {
        let col: Vec<f64> = retained.iter().map(|d| d.r[j]).collect();
        let (m, s, ci) = summarize(&col);
        r_mean.push(m);
        r_sd.push(s);
        r_ci.push(ci);
    }
    Ok(PosteriorSummary {
        beta_mean,
        beta_sd,
        beta_ci,
        sigma2_mean,
        sigma2_sd,
        sigma2_ci,
        r_mean,
        r_sd,
        r_ci,
    })
}
