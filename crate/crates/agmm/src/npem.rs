//! Kernel local-likelihood EM for nonparametric `μ(·)`, `σ²(·)` and `r_k(·)`.
//!
//! The unknown functions are approximated by local constants at grid
//! points; each M-step refits the constants from kernel-weighted
//! responsibilities, and function values elsewhere come from
//! interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle::{wrap_to_circle, Angle};
use crate::dataset::Dataset;
use crate::em::{EmOptions, SIGMA2_FLOOR};
use crate::error::{Error, Result};
use crate::init::{initial_assignment, InitOptions};
use crate::kernel::{Kernel, KernelShape};
use crate::likelihood::{component_mean, gaussian_log_pdf, log_sum_exp};
use crate::metrics::{bic, mean_circular_error};
use crate::model::{FitReport, Responsibilities};

/// Where the local constants live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridSpec {
    /// One grid point per distinct observed predictor.
    AllObservations,
    /// Evenly spaced points across the observed range (scalar predictors only).
    Uniform(usize),
}

impl GridSpec {
    pub fn build(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        match self {
            GridSpec::AllObservations => {
                let mut grid: Vec<Vec<f64>> = data.xs().to_vec();
                grid.sort_by(|a, b| a.partial_cmp(b).expect("finite predictors"));
                grid.dedup();
                Ok(grid)
            }
            GridSpec::Uniform(j) => {
                if data.dim() != 1 {
                    return Err(Error::InvalidArgument(
                        "uniform grids are only defined for scalar predictors".into(),
                    ));
                }
                if *j < 2 {
                    return Err(Error::InvalidArgument("uniform grid needs at least 2 points".into()));
                }
                let lo = data.xs().iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
                let hi = data.xs().iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
                if !(hi > lo) {
                    return Err(Error::InvalidArgument(
                        "uniform grid needs a nondegenerate predictor range".into(),
                    ));
                }
                let step = (hi - lo) / (*j as f64 - 1.0);
                Ok((0..*j).map(|t| vec![lo + t as f64 * step]).collect())
            }
        }
    }
}

/// Local constants `(μ_j, σ²_j, r_{·,j})` on a grid, with linear
/// interpolation between grid points (inverse-distance weighting for
/// multivariate predictors) and constant extrapolation beyond them.
#[derive(Debug, Clone, PartialEq)]
pub struct NonparametricAgmm {
    grid: Vec<Vec<f64>>,
    mu: Vec<f64>,
    sigma2: Vec<f64>,
    r: Vec<Vec<f64>>,
}

/// Function values at one location.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub mu: f64,
    pub sigma2: f64,
    pub r: Vec<f64>,
}

impl NonparametricAgmm {
    pub fn new(
        grid: Vec<Vec<f64>>,
        mu: Vec<f64>,
        sigma2: Vec<f64>,
        r: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let j = grid.len();
        if j == 0 {
            return Err(Error::InvalidState("empty grid".into()));
        }
        if mu.len() != j || sigma2.len() != j || r.len() != j {
            return Err(Error::InvalidArgument(format!(
                "constant arrays must all have length {j}"
            )));
        }
        let k = r[0].len();
        if k == 0 {
            return Err(Error::InvalidArgument("at least one mixture component required".into()));
        }
        for (idx, row) in r.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidArgument(format!("weight row {idx} has wrong length")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-10 || row.iter().any(|&v| !(0.0..=1.0 + 1e-12).contains(&v)) {
                return Err(Error::InvalidArgument(format!("weight row {idx} is not a simplex")));
            }
        }
        if sigma2.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("all local variances must be positive".into()));
        }
        let mut model = NonparametricAgmm { grid, mu, sigma2, r };
        model.sort_by_grid();
        for w in model.grid.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidArgument("grid points must be distinct".into()));
            }
        }
        Ok(model)
    }

    /// Keeps the grid (and the constants, in lockstep) sorted so that
    /// scalar interpolation can bracket by binary search.
    fn sort_by_grid(&mut self) {
        let j = self.grid.len();
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by(|&a, &b| self.grid[a].partial_cmp(&self.grid[b]).expect("finite grid"));
        self.grid = order.iter().map(|&i| self.grid[i].clone()).collect();
        self.mu = order.iter().map(|&i| self.mu[i]).collect();
        self.sigma2 = order.iter().map(|&i| self.sigma2[i]).collect();
        self.r = order.iter().map(|&i| self.r[i].clone()).collect();
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn num_components(&self) -> usize {
        self.r[0].len()
    }

    pub fn constants(&self, j: usize) -> Interpolated {
        Interpolated { mu: self.mu[j], sigma2: self.sigma2[j], r: self.r[j].clone() }
    }

    /// Wrapped mean prediction `wrap(μ(x))`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<Angle> {
        wrap_to_circle(interpolate(self, x)?.mu)
    }

    /// Interpolated variance `σ²(x)`.
    pub fn variance_at(&self, x: &[f64]) -> Result<f64> {
        Ok(interpolate(self, x)?.sigma2)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("nonparametric model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("bad model JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct NonparametricJson {
    grid: Vec<Vec<f64>>,
    mu: Vec<f64>,
    sigma2: Vec<f64>,
    r: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    k: usize,
}

impl Serialize for NonparametricAgmm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NonparametricJson {
            grid: self.grid.clone(),
            mu: self.mu.clone(),
            sigma2: self.sigma2.clone(),
            r: self.r.clone(),
            k: self.num_components(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonparametricAgmm {
    fn deserialize<D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<NonparametricAgmm, D::Error> {
        let raw = NonparametricJson::deserialize(d)?;
        let model = NonparametricAgmm::new(raw.grid, raw.mu, raw.sigma2, raw.r)
            .map_err(serde::de::Error::custom)?;
        if model.num_components() != raw.k {
            return Err(serde::de::Error::custom(format!(
                "model claims K = {} but rows have {} entries",
                raw.k,
                model.num_components()
            )));
        }
        Ok(model)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn blend(model: &NonparametricAgmm, pairs: &[(usize, f64)]) -> Interpolated {
    let k = model.num_components();
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    let mut mu = 0.0;
    let mut sigma2 = 0.0;
    let mut r = vec![0.0; k];
    for &(j, w) in pairs {
        let f = w / total;
        mu += f * model.mu[j];
        sigma2 += f * model.sigma2[j];
        for (dst, &v) in r.iter_mut().zip(&model.r[j]) {
            *dst += f * v;
        }
    }
    let rsum: f64 = r.iter().sum();
    for v in r.iter_mut() {
        *v /= rsum;
    }
    Interpolated { mu, sigma2, r }
}

/// Function values at `x`.
///
/// Scalar predictors: piecewise-linear between the bracketing grid points,
/// constant beyond the grid. Multivariate predictors: inverse-distance
/// weighting over the `min(2p, J)` nearest grid points. At a grid point
/// the stored constants are returned exactly.
pub fn interpolate(model: &NonparametricAgmm, x: &[f64]) -> Result<Interpolated> {
    let p = model.grid[0].len();
    if x.len() != p {
        return Err(Error::InvalidArgument(format!(
            "query has dimension {}, grid has {p}",
            x.len()
        )));
    }
    let j = model.grid_len();
    if p == 1 {
        let v = x[0];
        let idx = model.grid.partition_point(|g| g[0] < v);
        if idx < j && model.grid[idx][0] == v {
            return Ok(model.constants(idx));
        }
        if idx == 0 {
            return Ok(model.constants(0));
        }
        if idx == j {
            return Ok(model.constants(j - 1));
        }
        let (x0, x1) = (model.grid[idx - 1][0], model.grid[idx][0]);
        let t = (v - x0) / (x1 - x0);
        Ok(blend(model, &[(idx - 1, 1.0 - t), (idx, t)]))
    } else {
        let mut dists: Vec<(usize, f64)> =
            (0..j).map(|g| (g, euclid(&model.grid[g], x))).collect();
        dists.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances").then(a.0.cmp(&b.0)));
        if dists[0].1 == 0.0 {
            return Ok(model.constants(dists[0].0));
        }
        let m = (2 * p).min(j);
        let pairs: Vec<(usize, f64)> =
            dists[..m].iter().map(|&(g, d)| (g, 1.0 / d)).collect();
        Ok(blend(model, &pairs))
    }
}

/// E-step with function values interpolated at each observation.
pub fn local_e_step(model: &NonparametricAgmm, data: &Dataset) -> Result<Responsibilities> {
    let n = data.len();
    let k = model.num_components();
    let mut psi = vec![0.0; n * k];
    let mut terms = Vec::with_capacity(k);
    for i in 0..n {
        let at = interpolate(model, data.x(i))?;
        terms.clear();
        for (k_idx, &rk) in at.r.iter().enumerate() {
            let term = if rk > 0.0 {
                rk.ln()
                    + gaussian_log_pdf(
                        data.theta(i).radians(),
                        component_mean(at.mu, k_idx + 1),
                        at.sigma2,
                    )?
            } else {
                f64::NEG_INFINITY
            };
            terms.push(term);
        }
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

/// M-step: kernel-and-ψ-weighted local constants at every grid point.
pub fn local_m_step(
    data: &Dataset,
    psi: &Responsibilities,
    grid: &[Vec<f64>],
    kernel: &Kernel,
) -> Result<NonparametricAgmm> {
    let n = data.len();
    let k = psi.num_components();
    if psi.num_rows() != n {
        return Err(Error::InvalidArgument("responsibilities do not match dataset".into()));
    }
    let j = grid.len();
    if j == 0 {
        return Err(Error::InvalidState("empty grid".into()));
    }

    // Per-row shift moments, shared across grid points.
    let mut s1 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for i in 0..n {
        for (k_idx, &w) in psi.row(i).iter().enumerate() {
            let odd = (2 * (k_idx + 1) + 1) as f64;
            s1[i] += w * odd;
            s2[i] += w * odd * odd;
        }
    }

    let mut mu = vec![0.0; j];
    let mut sigma2 = vec![0.0; j];
    let mut r = vec![vec![0.0; k]; j];
    let mut weights = vec![0.0; n];
    for g in 0..j {
        let mut wsum = 0.0;
        for i in 0..n {
            let w = kernel.weight(euclid(data.x(i), &grid[g]));
            weights[i] = w;
            wsum += w;
        }
        if !(wsum > 0.0) {
            return Err(Error::IsolatedGridPoint { index: g });
        }
        let mut num = 0.0;
        for i in 0..n {
            num += weights[i] * (data.theta(i).radians() + PI * s1[i]);
        }
        mu[g] = num / wsum;

        let mut rss = 0.0;
        for i in 0..n {
            let a = data.theta(i).radians() - mu[g];
            rss += weights[i] * (a * a + 2.0 * a * PI * s1[i] + PI * PI * s2[i]);
        }
        sigma2[g] = (rss / wsum).max(SIGMA2_FLOOR);

        for i in 0..n {
            for (k_idx, &p) in psi.row(i).iter().enumerate() {
                r[g][k_idx] += weights[i] * p;
            }
        }
        let total: f64 = r[g].iter().sum();
        for v in r[g].iter_mut() {
            *v /= total;
        }
    }
    NonparametricAgmm::new(grid.to_vec(), mu, sigma2, r)
}

/// Observed-data log likelihood under interpolated function values.
pub fn local_loglik(model: &NonparametricAgmm, data: &Dataset) -> Result<f64> {
    let mut terms = Vec::with_capacity(model.num_components());
    let mut total = 0.0;
    for i in 0..data.len() {
        let at = interpolate(model, data.x(i))?;
        terms.clear();
        for (k_idx, &rk) in at.r.iter().enumerate() {
            terms.push(if rk > 0.0 {
                rk.ln()
                    + gaussian_log_pdf(
                        data.theta(i).radians(),
                        component_mean(at.mu, k_idx + 1),
                        at.sigma2,
                    )?
            } else {
                f64::NEG_INFINITY
            });
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// Alternates [`local_e_step`] / [`local_m_step`] until the interpolated
/// log likelihood moves less than `tol`.
///
/// The report's BIC uses `df = J + K` (grid size plus component count),
/// mirroring the parametric formula with the grid constants standing in
/// for the basis dimension; it is only used to rank component counts at a
/// fixed grid and bandwidth.
pub fn fit_local_em(
    data: &Dataset,
    init: NonparametricAgmm,
    kernel: &Kernel,
    opts: &EmOptions,
) -> Result<(NonparametricAgmm, FitReport)> {
    let k = init.num_components();
    let j = init.grid_len();
    let grid = init.grid.clone();
    let mut model = init;
    let mut prev = local_loglik(&model, data)?;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        let psi = local_e_step(&model, data)?;
        model = local_m_step(data, &psi, &grid, kernel)?;
        let ll = local_loglik(&model, data)?;
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
        bic: bic(prev, j + k, data.len()),
        loglik_trace: trace,
        iterations,
        converged,
        selected_k: k,
        selected_h: Some(kernel.h),
    };
    Ok((model, report))
}

/// Starting local constants: hard turn counts from the clustering pipeline
/// followed by one kernel M-step.
pub fn initial_local_model(
    data: &Dataset,
    k: usize,
    kernel: &Kernel,
    grid: &[Vec<f64>],
    init_opts: &InitOptions,
) -> Result<NonparametricAgmm> {
    let z = initial_assignment(data, k, init_opts)?;
    let psi = Responsibilities::hard(&z.z, k)?;
    local_m_step(data, &psi, grid, kernel)
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub folds: usize,
    pub grid: GridSpec,
    pub shape: KernelShape,
    pub em: EmOptions,
    pub init: InitOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            folds: 5,
            grid: GridSpec::AllObservations,
            shape: KernelShape::Gaussian,
            em: EmOptions::local(),
            init: InitOptions::default(),
        }
    }
}

/// Two-stage tuning: `K` by BIC over the `(K, h)` grid, then `h` by
/// cross-validated held-out circular error at the chosen `K`.
///
/// Ties go to the smaller `K` and then to the larger `h`. Cells that fail
/// to fit are skipped. Folds are assigned round-robin by index, so the
/// procedure is deterministic.
pub fn tune(
    data: &Dataset,
    k_range: &[usize],
    h_range: &[f64],
    opts: &TuneOptions,
) -> Result<(usize, f64)> {
    if k_range.is_empty() || h_range.is_empty() {
        return Err(Error::InvalidArgument("empty tuning range".into()));
    }
    if opts.folds < 2 {
        return Err(Error::InvalidArgument("cross validation needs at least 2 folds".into()));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut hs = h_range.to_vec();
    hs.sort_by(|a, b| a.partial_cmp(b).expect("finite bandwidths"));
    hs.dedup();

    // Stage 1: pick K minimizing BIC anywhere on the (K, h) grid.
    let full_grid = opts.grid.build(data)?;
    let mut best_k: Option<(usize, f64)> = None;
    for &k in &ks {
        for &h in &hs {
            let kernel = Kernel::new(opts.shape, h)?;
            let fit = initial_local_model(data, k, &kernel, &full_grid, &opts.init)
                .and_then(|init| fit_local_em(data, init, &kernel, &opts.em));
            if let Ok((_, report)) = fit {
                if best_k.map_or(true, |(_, b)| report.bic < b) {
                    best_k = Some((k, report.bic));
                }
            }
        }
    }
    let (k, _) = best_k.ok_or_else(|| {
        Error::InitFailure("every (K, h) cell failed during BIC selection".into())
    })?;

    // Stage 2: cross-validate h at the chosen K.
    if hs.len() == 1 {
        return Ok((k, hs[0]));
    }
    let mut best_h: Option<(f64, f64)> = None;
    for &h in &hs {
        let kernel = Kernel::new(opts.shape, h)?;
        let mut fold_scores = Vec::with_capacity(opts.folds);
        let mut failed = false;
        for fold in 0..opts.folds {
            let train = match data.filter(|i| i % opts.folds != fold) {
                Ok(d) => d,
                Err(_) => {
                    failed = true;
                    break;
                }
            };
            let test = match data.filter(|i| i % opts.folds == fold) {
                Ok(d) => d,
                Err(_) => continue, // empty fold when folds > n
            };
            let grid = match opts.grid.build(&train) {
                Ok(g) => g,
                Err(_) => {
                    failed = true;
                    break;
                }
            };
            let fitted = initial_local_model(&train, k, &kernel, &grid, &opts.init)
                .and_then(|init| fit_local_em(&train, init, &kernel, &opts.em));
            let (model, _) = match fitted {
                Ok(m) => m,
                Err(_) => {
                    failed = true;
                    break;
                }
            };
            let mut preds = Vec::with_capacity(test.len());
            let mut ok = true;
            for i in 0..test.len() {
                match model.predict_mean(test.x(i)) {
                    Ok(a) => preds.push(a),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                failed = true;
                break;
            }
            fold_scores.push(mean_circular_error(test.thetas(), &preds)?);
        }
        if failed || fold_scores.is_empty() {
            continue;
        }
        let score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        // `<=` so equal scores prefer the larger bandwidth.
        if best_h.map_or(true, |(_, b)| score <= b) {
            best_h = Some((h, score));
        }
    }
    match best_h {
        Some((h, _)) => Ok((k, h)),
        None => Err(Error::InitFailure("every bandwidth failed cross validation".into())),
    }
}
