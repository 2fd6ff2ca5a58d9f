//! Turn-count initialization from density-based clustering.
//!
//! The latent turn counts are not observed, but disparate pieces of the
//! wrapped sample are visible as clusters in `(x, θ)` space. Clustering
//! finds the pieces, a sequential rounding rule assigns each piece an
//! integer offset, and one hard-assignment M-step turns the offsets into
//! starting parameters for EM.

use std::f64::consts::PI;

use crate::basis::Basis;
use crate::dataset::Dataset;
use crate::em::m_step;
use crate::error::{Error, Result};
use crate::model::{ParametricAgmm, Responsibilities};

/// Clustering hyperparameters.
///
/// `eps` applies after each coordinate of `(x, θ)` is standardized to unit
/// sample standard deviation, so it is scale free.
#[derive(Debug, Clone)]
pub struct InitOptions {
    pub eps: f64,
    pub min_pts: usize,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions { eps: 0.3, min_pts: 4 }
    }
}

/// Cluster index per point; 0 marks noise. Noise points are attached to
/// their nearest cluster only when offsets are assigned, so they cannot
/// pollute the cluster boundary pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterAssignment {
    /// Indices of the members of cluster `c` (1-based).
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }
}

/// Integer turn counts per point, normalized so the smallest is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ZAssignment {
    pub z: Vec<usize>,
}

impl ZAssignment {
    pub fn num_components(&self) -> usize {
        self.z.iter().copied().max().unwrap_or(0)
    }
}

fn standardized_points(data: &Dataset) -> Vec<Vec<f64>> {
    let n = data.len();
    let d = data.dim() + 1;
    let mut pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = data.x(i).to_vec();
            v.push(data.theta(i).radians());
            v
        })
        .collect();
    for j in 0..d {
        let mean = pts.iter().map(|p| p[j]).sum::<f64>() / n as f64;
        let var = if n > 1 {
            pts.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        if sd > 1e-12 {
            for p in pts.iter_mut() {
                p[j] /= sd;
            }
        }
    }
    pts
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// DBSCAN over `(x_i, θ_i)` with Euclidean distance on standardized
/// coordinates. Points left over as noise keep label 0.
pub fn density_cluster(data: &Dataset, eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if min_pts < 1 {
        return Err(Error::InvalidArgument("min_pts must be at least 1".into()));
    }
    let n = data.len();
    let pts = standardized_points(data);
    let eps2 = eps * eps;
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n).filter(|&j| sq_dist(&pts[i], &pts[j]) <= eps2).collect()
    };

    // 0 = unlabeled/noise during the scan.
    let mut labels = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut num_clusters = 0usize;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let nbrs = neighbors(i);
        if nbrs.len() < min_pts {
            continue; // noise for now; may be absorbed as a border point later
        }
        num_clusters += 1;
        labels[i] = num_clusters;
        let mut queue = nbrs;
        while let Some(j) = queue.pop() {
            if labels[j] == 0 {
                labels[j] = num_clusters;
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let jn = neighbors(j);
            if jn.len() >= min_pts {
                queue.extend(jn);
            }
        }
    }

    if num_clusters == 0 {
        return Err(Error::InitFailure(
            "all points classified as noise; increase --init-eps or lower --init-minpts".into(),
        ));
    }

    Ok(ClusterAssignment { labels, num_clusters })
}

/// Minimum predictor-space distance between two clusters.
///
/// Returns the achieved distance together with the realizing pair of point
/// indices; when several pairs tie, the lowest-index pair wins.
pub fn cluster_gap(a: &[usize], b: &[usize], data: &Dataset) -> Result<(f64, usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("cluster_gap needs non-empty clusters".into()));
    }
    let mut best = (f64::INFINITY, 0usize, 0usize);
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable();
    sb.sort_unstable();
    for &i in &sa {
        for &j in &sb {
            let d = sq_dist(data.x(i), data.x(j)).sqrt();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    Ok(best)
}

/// Assigns turn counts to clusters by the sequential rounding rule.
///
/// The first cluster gets offset 1. Every other cluster is attached, in
/// nearest-first order, to its closest already-assigned cluster in
/// predictor space; the offset difference is the rounded angular gap read
/// off at the cluster boundary, and offsets are finally shifted so the
/// smallest is one.
///
/// Two robustness choices, both forced by geometries where the naive rule
/// mis-rounds:
/// - clusters are processed greedily by gap size rather than by index, so
///   every attachment happens across the smallest predictor gap available
///   (the rounding is only exact between curve-adjacent clusters);
/// - the angular gap is the median over the nearest cross-pairs rather
///   than the single minimizing pair. For disjoint clusters the nearest
///   pairs all straddle the same boundary and agree; for clusters that
///   overlap in predictor space (side pieces created by noise) the single
///   pair compares a typical draw with a tail draw and mis-rounds with
///   noticeable probability, while the median does not.
pub fn assign_offsets(clusters: &ClusterAssignment, data: &Dataset) -> Result<ZAssignment> {
    let c = clusters.num_clusters;
    if c == 0 {
        return Err(Error::InvalidArgument("no clusters to assign offsets to".into()));
    }
    if clusters.labels.len() != data.len() {
        return Err(Error::InvalidArgument("cluster labels do not match dataset".into()));
    }
    let members: Vec<Vec<usize>> = (1..=c).map(|k| clusters.members(k)).collect();
    for (k, m) in members.iter().enumerate() {
        if m.is_empty() {
            return Err(Error::InvalidArgument(format!("cluster {} is empty", k + 1)));
        }
    }

    // Pairwise cluster gaps: the minimum predictor distance plus the
    // boundary angular gap (median over the nearest cross-pairs, at most
    // nine, lowest-index pairs first on ties).
    let mut gap = vec![vec![(f64::INFINITY, 0.0f64); c]; c];
    for (a, ma) in members.iter().enumerate() {
        for (b, mb) in members.iter().enumerate().skip(a + 1) {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(ma.len() * mb.len());
            for &i in ma {
                for &j in mb {
                    pairs.push((sq_dist(data.x(i), data.x(j)), i, j));
                }
            }
            pairs.sort_by(|p, q| {
                p.0.partial_cmp(&q.0)
                    .expect("finite distances")
                    .then(p.1.cmp(&q.1))
                    .then(p.2.cmp(&q.2))
            });
            let m = pairs.len().min(9);
            let mut diffs: Vec<f64> = pairs[..m]
                .iter()
                .map(|&(_, i, j)| data.theta(j).radians() - data.theta(i).radians())
                .collect();
            diffs.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
            let boundary_diff = diffs[(diffs.len() - 1) / 2];
            let d = pairs[0].0.sqrt();
            gap[a][b] = (d, boundary_diff);
            gap[b][a] = (d, -boundary_diff);
        }
    }

    let mut offsets = vec![0i64; c];
    let mut assigned = vec![false; c];
    offsets[0] = 1;
    assigned[0] = true;
    for _ in 1..c {
        // Smallest gap from any unassigned cluster to any assigned one;
        // ties go to the lowest (unassigned, assigned) index pair.
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..c {
            if assigned[k] {
                continue;
            }
            for prev in 0..c {
                if !assigned[prev] {
                    continue;
                }
                let d = gap[k][prev].0;
                if best.map_or(true, |(bd, ..)| d < bd) {
                    best = Some((d, k, prev));
                }
            }
        }
        let (_, k, k_star) = best.expect("some cluster is still unassigned");
        // gap[k][k_star].1 is theta(member of k_star) - theta(member of k).
        let diff = gap[k][k_star].1;
        offsets[k] = offsets[k_star] + (diff / (2.0 * PI)).round() as i64;
        assigned[k] = true;
    }

    // Noise points inherit the offset of their nearest clustered point.
    let pts = standardized_points(data);
    let z_raw: Vec<i64> = clusters
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l > 0 {
                return offsets[l - 1];
            }
            let mut best = (f64::INFINITY, 0usize);
            for (j, &lj) in clusters.labels.iter().enumerate() {
                if lj == 0 {
                    continue;
                }
                let d = sq_dist(&pts[i], &pts[j]);
                if d < best.0 {
                    best = (d, lj);
                }
            }
            offsets[best.1 - 1]
        })
        .collect();
    let min = *z_raw.iter().min().expect("n >= 1");
    let z = z_raw.into_iter().map(|v| (v - min + 1) as usize).collect();
    Ok(ZAssignment { z })
}

/// One hard-assignment M-step: `ψ_{i,k} = 1` exactly when `z_i = k`.
pub fn init_parameters(data: &Dataset, z: &ZAssignment, basis: &Basis) -> Result<ParametricAgmm> {
    let k = z.num_components();
    if k == 0 || z.z.len() != data.len() {
        return Err(Error::InvalidArgument("assignment does not match dataset".into()));
    }
    let psi = Responsibilities::hard(&z.z, k)?;
    m_step(data, &psi, basis).map_err(|e| match e {
        Error::SingularDesign => Error::InitFailure(
            "hard-assignment M-step hit a singular design; lower the basis degree".into(),
        ),
        other => other,
    })
}

/// Turn counts for a requested component count `K`.
///
/// Uses the clustering pipeline when it produces exactly `K` offsets;
/// otherwise falls back to an equal-count split along θ quantiles so EM
/// can probe component counts the clustering does not suggest.
pub fn initial_assignment(data: &Dataset, k: usize, opts: &InitOptions) -> Result<ZAssignment> {
    if k < 1 {
        return Err(Error::InvalidArgument("component count must be at least 1".into()));
    }
    if data.len() < k {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} points into {k} components",
            data.len()
        )));
    }
    if let Ok(clusters) = density_cluster(data, opts.eps, opts.min_pts) {
        if let Ok(z) = assign_offsets(&clusters, data) {
            if z.num_components() == k {
                return Ok(z);
            }
        }
    }
    Ok(quantile_split(data, k))
}

/// Equal-count buckets along θ, labeled 1..=k in increasing θ order.
fn quantile_split(data: &Dataset, k: usize) -> ZAssignment {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        data.theta(a).radians().partial_cmp(&data.theta(b).radians()).expect("angles are finite")
    });
    let mut z = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        z[i] = (rank * k / n).min(k - 1) + 1;
    }
    ZAssignment { z }
}

/// Clustering-initialized starting model for a requested `K`.
pub fn initial_model(
    data: &Dataset,
    k: usize,
    basis: &Basis,
    opts: &InitOptions,
) -> Result<ParametricAgmm> {
    let z = initial_assignment(data, k, opts)?;
    // The quantile fallback always yields exactly k groups; the clustering
    // path was already filtered on that.
    init_parameters(data, &z, basis)
}
