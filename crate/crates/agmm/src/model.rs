//! The parametric mixture model, posterior responsibilities and fit reports.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};

/// Gaussian mixture of regressions with tied component means.
///
/// One latent line `μ(x) = φ(x)'β` with shared variance `σ²`; component `k`
/// (1-based) has mean `μ(x) - (2k+1)π` and weight `r_k`.
///
/// Serializes as `{basis, beta, sigma2, r, K}`; deserialization re-checks
/// every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricAgmm {
    pub basis: Basis,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParametricJson {
    basis: Basis,
    beta: Vec<f64>,
    sigma2: f64,
    r: Vec<f64>,
    #[serde(rename = "K")]
    k: usize,
}

impl Serialize for ParametricAgmm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ParametricJson {
            basis: self.basis.clone(),
            beta: self.beta.clone(),
            sigma2: self.sigma2,
            r: self.weights.clone(),
            k: self.num_components(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParametricAgmm {
    fn deserialize<D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<ParametricAgmm, D::Error> {
        let raw = ParametricJson::deserialize(d)?;
        if raw.k != raw.r.len() {
            return Err(serde::de::Error::custom(format!(
                "model claims K = {} but has {} weights",
                raw.k,
                raw.r.len()
            )));
        }
        ParametricAgmm::new(raw.basis, raw.beta, raw.sigma2, raw.r)
            .map_err(serde::de::Error::custom)
    }
}

impl ParametricAgmm {
    pub fn new(basis: Basis, beta: Vec<f64>, sigma2: f64, weights: Vec<f64>) -> Result<Self> {
        if beta.len() != basis.output_dim() {
            return Err(Error::InvalidArgument(format!(
                "beta has length {} but basis produces {} features",
                beta.len(),
                basis.output_dim()
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        if weights.is_empty() {
            return Err(Error::InvalidArgument("at least one mixture component required".into()));
        }
        if weights.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidArgument("mixture weights must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(ParametricAgmm { basis, beta, sigma2, weights })
    }

    /// Number of mixture components `K`.
    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    /// The latent mean `φ(x)'β`.
    pub fn latent_mean(&self, x: &[f64]) -> Result<f64> {
        let phi = self.basis.expand(x)?;
        Ok(phi.iter().zip(&self.beta).map(|(a, b)| a * b).sum())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parametric model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("bad model JSON: {e}")))
    }
}

/// Posterior component memberships `ψ`, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    psi: Vec<f64>,
    n: usize,
    k: usize,
}

impl Responsibilities {
    /// Builds from row-major storage, validating the simplex invariant.
    pub fn new(psi: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if psi.len() != n * k || n == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "responsibility storage {} does not match {n} x {k}",
                psi.len()
            )));
        }
        for i in 0..n {
            let row = &psi[i * k..(i + 1) * k];
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidArgument(format!("row {i} leaves [0, 1]")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!("row {i} sums to {total}")));
            }
        }
        Ok(Responsibilities { psi, n, k })
    }

    /// Hard assignments: `ψ_{i,k} = 1` exactly when `z_i = k` (1-based).
    pub fn hard(z: &[usize], k: usize) -> Result<Self> {
        let n = z.len();
        let mut psi = vec![0.0; n * k];
        for (i, &zi) in z.iter().enumerate() {
            if zi < 1 || zi > k {
                return Err(Error::InvalidArgument(format!(
                    "assignment z[{i}] = {zi} outside 1..={k}"
                )));
            }
            psi[i * k + (zi - 1)] = 1.0;
        }
        Ok(Responsibilities { psi, n, k })
    }

    pub fn num_rows(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.psi[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, k_idx: usize) -> f64 {
        self.psi[i * self.k + k_idx]
    }
}

/// Convergence record for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub bic: f64,
    pub selected_k: usize,
    pub selected_h: Option<f64>,
}
