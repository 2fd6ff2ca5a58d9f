//! Maximum-likelihood estimation of the parametric model by EM, with
//! component-count selection via BIC.

use std::f64::consts::PI;

use crate::angle::{wrap_to_circle, Angle};
use crate::basis::Basis;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::init::{initial_model, InitOptions};
use crate::likelihood::{component_log_terms, log_sum_exp, mixture_loglik};
use crate::linalg::NormalEquations;
use crate::metrics::bic;
use crate::model::{FitReport, ParametricAgmm, Responsibilities};

/// Variance floor applied by the M-step; prevents collapse onto a single point.
pub const SIGMA2_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EmOptions {
    /// Convergence threshold on the absolute log-likelihood change.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { tol: 1e-8, max_iter: 500 }
    }
}

impl EmOptions {
    /// Defaults for the kernel-local EM.
    ///
    /// The local M-step maximizes per-grid local likelihoods, so the
    /// monitored global log likelihood settles onto a small oscillation
    /// floor instead of descending to machine precision; a looser stop
    /// rule reflects that. Estimates are unchanged from tighter settings.
    pub fn local() -> Self {
        EmOptions { tol: 1e-3, max_iter: 200 }
    }
}

/// E-step: posterior component memberships, computed in log space.
pub fn e_step(model: &ParametricAgmm, data: &Dataset) -> Result<Responsibilities> {
    if model.basis.input_dim() != data.dim() {
        return Err(Error::InvalidArgument(format!(
            "model expects dimension {}, data has {}",
            model.basis.input_dim(),
            data.dim()
        )));
    }
    if model.beta.iter().any(|b| !b.is_finite()) || !model.sigma2.is_finite() {
        return Err(Error::InvalidArgument("model parameters contain non-finite values".into()));
    }
    let n = data.len();
    let k = model.num_components();
    let mut psi = vec![0.0; n * k];
    let mut terms = Vec::with_capacity(k);
    for i in 0..n {
        component_log_terms(model, data.theta(i).radians(), data.x(i), &mut terms)?;
        let lse = log_sum_exp(&terms);
        if !lse.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "no component has positive density at observation {i}"
            )));
        }
        let row = &mut psi[i * k..(i + 1) * k];
        for (dst, &t) in row.iter_mut().zip(&terms) {
            *dst = (t - lse).exp();
        }
        let total: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Responsibilities::new(psi, n, k)
}

/// M-step: weighted least squares for `β`, closed forms for `σ²` and `r`.
///
/// `β` solves `min_β Σ_{i,k} ψ_{i,k} (θ_i + (2k+1)π - φ(x_i)'β)²`. Because
/// each ψ row sums to one, the Gram matrix collapses to `Σ_i φφ'` and the
/// response collapses to the ψ-averaged shift; the q×q system is solved by
/// Cholesky factorization. `σ²` is the ψ-weighted mean squared residual
/// (denominator n) floored at [`SIGMA2_FLOOR`], and `r_k` are the column
/// means of ψ.
pub fn m_step(data: &Dataset, psi: &Responsibilities, basis: &Basis) -> Result<ParametricAgmm> {
    let n = data.len();
    let k = psi.num_components();
    if psi.num_rows() != n {
        return Err(Error::InvalidArgument(format!(
            "responsibilities have {} rows for {} observations",
            psi.num_rows(),
            n
        )));
    }
    let q = basis.output_dim();

    // Per-row shift moments: s1 = Σ_k ψ (2k+1), s2 = Σ_k ψ (2k+1)².
    let mut s1 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for i in 0..n {
        let row = psi.row(i);
        for (k_idx, &w) in row.iter().enumerate() {
            let odd = (2 * (k_idx + 1) + 1) as f64;
            s1[i] += w * odd;
            s2[i] += w * odd * odd;
        }
    }

    let mut ne = NormalEquations::new(q);
    let mut phis = Vec::with_capacity(n);
    for i in 0..n {
        let phi = basis.expand(data.x(i))?;
        let target = data.theta(i).radians() + PI * s1[i];
        ne.add_observation(&phi, target, 1.0);
        phis.push(phi);
    }
    let beta = ne.solve()?;

    let mut rss = 0.0;
    for i in 0..n {
        let mu: f64 = phis[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
        let a = data.theta(i).radians() - mu;
        rss += a * a + 2.0 * a * PI * s1[i] + PI * PI * s2[i];
    }
    let sigma2 = (rss / n as f64).max(SIGMA2_FLOOR);

    let mut weights = vec![0.0; k];
    for i in 0..n {
        for (k_idx, &w) in psi.row(i).iter().enumerate() {
            weights[k_idx] += w;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }

    ParametricAgmm::new(basis.clone(), beta, sigma2, weights)
}

/// Runs EM from `init` until the log likelihood moves less than `tol`.
///
/// The returned trace starts at the initial log likelihood and appends one
/// entry per iteration; it is non-decreasing up to floating-point slack.
pub fn fit_em(
    data: &Dataset,
    init: ParametricAgmm,
    opts: &EmOptions,
) -> Result<(ParametricAgmm, FitReport)> {
    if opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let k = init.num_components();
    let q = init.basis.output_dim();
    let basis = init.basis.clone();
    let mut model = init;
    let mut prev = mixture_loglik(&model, data)?;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        let psi = e_step(&model, data)?;
        model = m_step(data, &psi, &basis)?;
        let ll = mixture_loglik(&model, data)?;
        trace.push(ll);
        iterations += 1;
        if (ll - prev).abs() < opts.tol {
            converged = true;
            prev = ll;
            break;
        }
        prev = ll;
    }
    let report = FitReport {
        bic: bic(prev, q + k, data.len()),
        loglik_trace: trace,
        iterations,
        converged,
        selected_k: k,
        selected_h: None,
    };
    Ok((model, report))
}

/// One candidate from a BIC sweep.
#[derive(Debug, Clone)]
pub struct KCandidate {
    pub k: usize,
    pub outcome: Result<(ParametricAgmm, FitReport)>,
}

/// Fits every `K` in `k_range` and returns the BIC minimizer.
///
/// Initialization uses the clustering pipeline when it yields exactly `K`
/// offsets and the θ-quantile fallback otherwise. Per-K failures are
/// recorded in the candidate list and skipped; ties in BIC go to the
/// smaller `K`.
pub fn select_k(
    data: &Dataset,
    basis: &Basis,
    k_range: &[usize],
    em_opts: &EmOptions,
    init_opts: &InitOptions,
) -> Result<(usize, Vec<KCandidate>)> {
    if k_range.is_empty() {
        return Err(Error::InvalidArgument("empty K range".into()));
    }
    let mut ks: Vec<usize> = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut candidates = Vec::with_capacity(ks.len());
    for &k in &ks {
        let outcome = initial_model(data, k, basis, init_opts)
            .and_then(|init| fit_em(data, init, em_opts));
        candidates.push(KCandidate { k, outcome });
    }
    let mut best: Option<(usize, f64)> = None;
    for cand in &candidates {
        if let Ok((_, report)) = &cand.outcome {
            if best.map_or(true, |(_, b)| report.bic < b) {
                best = Some((cand.k, report.bic));
            }
        }
    }
    match best {
        Some((k, _)) => Ok((k, candidates)),
        None => Err(Error::InitFailure("every candidate K failed to fit".into())),
    }
}

/// Wrapped mean prediction `wrap(φ(x)'β)`.
pub fn predict_mean(model: &ParametricAgmm, x: &[f64]) -> Result<Angle> {
    wrap_to_circle(model.latent_mean(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::{component_mean, gaussian_pdf};
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn wrap(v: f64) -> Angle {
        wrap_to_circle(v).unwrap()
    }

    fn toy_model(k: usize, sigma2: f64) -> ParametricAgmm {
        let basis = Basis::polynomial(1, 1);
        let weights = vec![1.0 / k as f64; k];
        ParametricAgmm::new(basis, vec![2.0 * PI, 1.0], sigma2, weights).unwrap()
    }

    /// Random dataset plus responsibilities for oracle comparisons.
    fn random_instance(seed: u64, n: usize, k: usize) -> (Dataset, Responsibilities) {
        let mut rng = rng_from_seed(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let thetas: Vec<Angle> = (0..n).map(|_| wrap(rng.gen_range(-3.0..3.0))).collect();
        let data = Dataset::from_scalar(xs, thetas).unwrap();
        let mut psi = Vec::with_capacity(n * k);
        for _ in 0..n {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            psi.extend(raw.into_iter().map(|v| v / total));
        }
        (data, Responsibilities::new(psi, n, k).unwrap())
    }

    #[test]
    fn e_step_single_component_is_one() {
        let model = toy_model(1, 0.5);
        let data = Dataset::from_scalar(vec![0.1, -0.4], vec![wrap(0.3), wrap(1.0)]).unwrap();
        let psi = e_step(&model, &data).unwrap();
        assert_eq!(psi.row(0), &[1.0]);
        assert_eq!(psi.row(1), &[1.0]);
    }

    #[test]
    fn e_step_equidistant_is_half() {
        // theta exactly pi away from both adjacent component means.
        let basis = Basis::polynomial(1, 0);
        let mu = 4.0 * PI; // component means at pi and -pi
        let model = ParametricAgmm::new(basis, vec![mu], 0.7, vec![0.5, 0.5]).unwrap();
        let data =
            Dataset::from_scalar(vec![0.0], vec![Angle::from_radians(0.0).unwrap()]).unwrap();
        let psi = e_step(&model, &data).unwrap();
        assert!((psi.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((psi.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn e_step_matches_density_ratio_oracle() {
        let basis = Basis::polynomial(1, 1);
        let model =
            ParametricAgmm::new(basis, vec![5.5, 2.0], 1.3, vec![0.5, 0.2, 0.3]).unwrap();
        let data = Dataset::from_scalar(
            vec![-0.8, -0.1, 0.4, 0.9],
            vec![wrap(0.2), wrap(-2.0), wrap(1.4), wrap(3.0)],
        )
        .unwrap();
        let psi = e_step(&model, &data).unwrap();
        for i in 0..data.len() {
            let mu = model.latent_mean(data.x(i)).unwrap();
            let dens: Vec<f64> = (1..=3)
                .map(|k| {
                    model.weights[k - 1]
                        * gaussian_pdf(
                            data.theta(i).radians(),
                            component_mean(mu, k),
                            model.sigma2,
                        )
                        .unwrap()
                })
                .collect();
            let total: f64 = dens.iter().sum();
            for k_idx in 0..3 {
                assert!((psi.get(i, k_idx) - dens[k_idx] / total).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn m_step_degree0_collapses_to_moments() {
        let tvals = [0.2, -0.1, 0.5, 0.05];
        let data = Dataset::from_scalar(
            vec![0.0, 1.0, 2.0, 3.0],
            tvals.iter().map(|&t| Angle::from_radians(t).unwrap()).collect(),
        )
        .unwrap();
        let psi = Responsibilities::hard(&[1, 1, 1, 1], 1).unwrap();
        let basis = Basis::polynomial(1, 0);
        let model = m_step(&data, &psi, &basis).unwrap();
        let shifted: Vec<f64> = tvals.iter().map(|t| t + 3.0 * PI).collect();
        let mean = shifted.iter().sum::<f64>() / 4.0;
        let var = shifted.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((model.beta[0] - mean).abs() < 1e-12);
        assert!((model.sigma2 - var).abs() < 1e-12);
    }

    #[test]
    fn m_step_recovers_generating_line_exactly() {
        // Hard responsibilities from a noiseless generator.
        let mut rng = rng_from_seed(17);
        let beta_true = [0.7, 2.0 * PI];
        let n = 60;
        let mut xs = Vec::new();
        let mut thetas = Vec::new();
        let mut z = Vec::new();
        for _ in 0..n {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y = beta_true[0] + beta_true[1] * x;
            xs.push(x);
            thetas.push(wrap(y));
            z.push((y / (2.0 * PI)).floor() as i64);
        }
        let zmin = *z.iter().min().unwrap();
        let z: Vec<usize> = z.into_iter().map(|v| (v - zmin + 1) as usize).collect();
        let kmax = *z.iter().max().unwrap();
        let data = Dataset::from_scalar(xs, thetas).unwrap();
        let psi = Responsibilities::hard(&z, kmax).unwrap();
        let model = m_step(&data, &psi, &Basis::polynomial(1, 1)).unwrap();
        assert!((model.beta[1] - beta_true[1]).abs() < 1e-8);
        let shift = (model.beta[0] - beta_true[0]) / (2.0 * PI);
        assert!((shift - shift.round()).abs() < 1e-8);
    }

    #[test]
    fn m_step_weights_are_column_means() {
        let (data, psi) = random_instance(5, 40, 3);
        let model = m_step(&data, &psi, &Basis::polynomial(1, 1)).unwrap();
        for k_idx in 0..3 {
            let col: f64 = (0..40).map(|i| psi.get(i, k_idx)).sum::<f64>() / 40.0;
            assert!((model.weights[k_idx] - col).abs() < 1e-12);
        }
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_step_beta_is_local_max_of_weighted_objective() {
        // Perturbing beta along random directions never lowers the
        // complete-data objective.
        let (data, psi) = random_instance(23, 50, 3);
        let basis = Basis::polynomial(1, 2);
        let model = m_step(&data, &psi, &basis).unwrap();
        let objective = |beta: &[f64]| -> f64 {
            let mut total = 0.0;
            for i in 0..data.len() {
                let phi = basis.expand(data.x(i)).unwrap();
                let mu: f64 = phi.iter().zip(beta).map(|(a, b)| a * b).sum();
                for k_idx in 0..3 {
                    let c = data.theta(i).radians() + (2 * (k_idx + 1) + 1) as f64 * PI;
                    total += psi.get(i, k_idx) * (c - mu).powi(2);
                }
            }
            total
        };
        let base = objective(&model.beta);
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let dir: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for sign in [-1.0, 1.0] {
                let perturbed: Vec<f64> = model
                    .beta
                    .iter()
                    .zip(&dir)
                    .map(|(b, d)| b + sign * 1e-4 * d)
                    .collect();
                assert!(objective(&perturbed) >= base - 1e-12);
            }
        }
    }

    #[test]
    fn m_step_singular_design_rejected() {
        // Constant predictor with a degree-1 basis: columns are collinear.
        let data =
            Dataset::from_scalar(vec![0.5; 10], (0..10).map(|i| wrap(i as f64 * 0.1)).collect())
                .unwrap();
        let psi = Responsibilities::hard(&[1; 10], 1).unwrap();
        let err = m_step(&data, &psi, &Basis::polynomial(1, 1)).unwrap_err();
        assert_eq!(err, Error::SingularDesign);
    }

    #[test]
    fn fixed_point_converges_immediately() {
        // Start EM at the converged solution of a separable instance.
        let mut xs = Vec::new();
        let mut thetas = Vec::new();
        for i in 0..40 {
            let x = -1.0 + i as f64 / 20.0;
            xs.push(x);
            thetas.push(wrap(0.5 + 0.8 * x));
        }
        let data = Dataset::from_scalar(xs, thetas).unwrap();
        let psi = Responsibilities::hard(&[1; 40], 1).unwrap();
        let basis = Basis::polynomial(1, 1);
        let init = m_step(&data, &psi, &basis).unwrap();
        let (_, report) = fit_em(&data, init, &EmOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2, "took {} iterations", report.iterations);
    }

    #[test]
    fn loglik_trace_is_monotone() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let n = rng.gen_range(20..120);
            let k = rng.gen_range(1..4usize);
            let slope = rng.gen_range(-8.0..8.0);
            let noise = rng.gen_range(0.05..0.8);
            let mut xs = Vec::new();
            let mut thetas = Vec::new();
            for _ in 0..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let eps: f64 = rng.gen_range(-noise..noise);
                xs.push(x);
                thetas.push(wrap(0.3 + slope * x + eps));
            }
            let data = Dataset::from_scalar(xs, thetas).unwrap();
            let basis = Basis::polynomial(1, 1);
            let init = initial_model(&data, k, &basis, &InitOptions::default()).unwrap();
            let (_, report) = fit_em(&data, init, &EmOptions::default()).unwrap();
            for w in report.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn e_m_fixed_point_is_stable() {
        // At convergence, one more E/M round leaves psi unchanged.
        let (data, _) = random_instance(31, 60, 2);
        let basis = Basis::polynomial(1, 1);
        let init = initial_model(&data, 2, &basis, &InitOptions::default()).unwrap();
        let (model, _) = fit_em(&data, init, &EmOptions { tol: 1e-12, max_iter: 2000 }).unwrap();
        let psi = e_step(&model, &data).unwrap();
        let refit = m_step(&data, &psi, &model.basis).unwrap();
        let psi2 = e_step(&refit, &data).unwrap();
        for i in 0..data.len() {
            for k_idx in 0..2 {
                assert!((psi.get(i, k_idx) - psi2.get(i, k_idx)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn select_k_prefers_one_for_single_line() {
        // Latent line centered at pi stays inside one branch of the link,
        // so the wrapped sample is one connected piece.
        let mut rng = rng_from_seed(77);
        let mut xs = Vec::new();
        let mut thetas = Vec::new();
        for _ in 0..80 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let eps: f64 = rng.gen_range(-0.3..0.3);
            xs.push(x);
            thetas.push(wrap(PI + 0.9 * x + eps));
        }
        let data = Dataset::from_scalar(xs, thetas).unwrap();
        let (best, _) = select_k(
            &data,
            &Basis::polynomial(1, 1),
            &[1, 2, 3],
            &EmOptions::default(),
            &InitOptions::default(),
        )
        .unwrap();
        assert_eq!(best, 1);
    }

    #[test]
    fn select_k_singleton_range() {
        let (data, _) = random_instance(3, 30, 1);
        let (best, cands) = select_k(
            &data,
            &Basis::polynomial(1, 0),
            &[2],
            &EmOptions::default(),
            &InitOptions::default(),
        )
        .unwrap();
        assert_eq!(best, 2);
        assert_eq!(cands.len(), 1);
    }

    #[test]
    fn select_k_is_order_invariant() {
        let (data, _) = random_instance(8, 60, 2);
        let basis = Basis::polynomial(1, 1);
        let em = EmOptions::default();
        let init = InitOptions::default();
        let (a, _) = select_k(&data, &basis, &[1, 2, 3], &em, &init).unwrap();
        let (b, _) = select_k(&data, &basis, &[3, 1, 2], &em, &init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_mean_pinned_values() {
        let basis = Basis::polynomial(1, 1);
        let zero = ParametricAgmm::new(basis.clone(), vec![0.0, 0.0], 1.0, vec![1.0]).unwrap();
        assert_eq!(predict_mean(&zero, &[0.4]).unwrap().radians(), -PI);
        let constant = ParametricAgmm::new(basis, vec![PI, 0.0], 1.0, vec![1.0]).unwrap();
        assert_eq!(predict_mean(&constant, &[123.0]).unwrap().radians(), 0.0);
    }

    #[test]
    fn predict_mean_invariant_to_two_pi_shift() {
        let basis = Basis::polynomial(1, 0);
        let a = ParametricAgmm::new(basis.clone(), vec![0.9], 1.0, vec![1.0]).unwrap();
        let b = ParametricAgmm::new(basis, vec![0.9 + 2.0 * PI], 1.0, vec![1.0]).unwrap();
        let pa = predict_mean(&a, &[0.0]).unwrap().radians();
        let pb = predict_mean(&b, &[0.0]).unwrap().radians();
        assert!((pa - pb).abs() < 1e-12);
    }
}
