//! On-disk formats shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use agmm::{Angle, NonparametricAgmm, ParametricAgmm, Smoother};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// A fitted model of any method, tagged for round-tripping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", content = "model", rename_all = "lowercase")]
pub enum ModelFile {
    Em(ParametricAgmm),
    Gibbs(ParametricAgmm),
    Npem(NonparametricAgmm),
    Smoothing(Smoother),
}

impl ModelFile {
    pub fn method_name(&self) -> &'static str {
        match self {
            ModelFile::Em(_) => "em",
            ModelFile::Gibbs(_) => "gibbs",
            ModelFile::Npem(_) => "npem",
            ModelFile::Smoothing(_) => "smoothing",
        }
    }

    pub fn predict(&self, x: &[f64]) -> agmm::Result<Angle> {
        match self {
            ModelFile::Em(m) | ModelFile::Gibbs(m) => agmm::predict_mean(m, x),
            ModelFile::Npem(m) => m.predict_mean(x),
            ModelFile::Smoothing(s) => s.predict(x),
        }
    }

    /// Variance estimate at `x`; `None` for methods without one.
    pub fn variance_at(&self, x: &[f64]) -> Option<agmm::Result<f64>> {
        match self {
            ModelFile::Em(m) | ModelFile::Gibbs(m) => Some(Ok(m.sigma2)),
            ModelFile::Npem(m) => Some(m.variance_at(x)),
            ModelFile::Smoothing(_) => None,
        }
    }
}

/// Sidecar metadata written next to a generated dataset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruthFile {
    pub example: u8,
    pub seed: u64,
    pub sigma2_truth: f64,
}

/// Writes through a temp file in the same directory, then renames.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("agmm-out")
    ));
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))
}

pub fn read_truth(path: &Path) -> Result<TruthFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading truth {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing truth {}", path.display()))
}

/// `model.json` -> `model.report.json`, `data.csv` -> `data.truth.json`.
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}
