//! Argument parsing helpers for the structured flag values.

use agmm::{Basis, GridSpec, Kernel, KernelShape};
use anyhow::{bail, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Parametric EM fit.
    Em,
    /// Kernel local-likelihood EM fit.
    Npem,
    /// Conjugate Gibbs sampler.
    Gibbs,
    /// sin/cos smoothing baseline.
    Smoothing,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Em => "em",
            Method::Npem => "npem",
            Method::Gibbs => "gibbs",
            Method::Smoothing => "smoothing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Triangular,
}

impl KernelArg {
    pub fn shape(self) -> KernelShape {
        match self {
            KernelArg::Gaussian => KernelShape::Gaussian,
            KernelArg::Triangular => KernelShape::Triangular,
        }
    }

    pub fn kernel(self, h: f64) -> agmm::Result<Kernel> {
        Kernel::new(self.shape(), h)
    }
}

/// `poly:D` -> a polynomial basis of degree `D`.
pub fn parse_basis(spec: &str, input_dim: usize) -> Result<Basis> {
    match spec.strip_prefix("poly:").and_then(|d| d.parse::<usize>().ok()) {
        Some(degree) => Ok(Basis::polynomial(input_dim, degree)),
        None => bail!("bad basis '{spec}'; expected poly:<degree>"),
    }
}

/// `all` or `uniform:J`.
pub fn parse_grid(spec: &str) -> Result<GridSpec> {
    if spec == "all" {
        return Ok(GridSpec::AllObservations);
    }
    match spec.strip_prefix("uniform:").and_then(|j| j.parse::<usize>().ok()) {
        Some(j) => Ok(GridSpec::Uniform(j)),
        None => bail!("bad grid '{spec}'; expected all or uniform:<J>"),
    }
}

/// `auto` or a positive integer.
pub fn parse_k(spec: &str) -> Result<Option<usize>> {
    if spec == "auto" {
        return Ok(None);
    }
    match spec.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(Some(k)),
        _ => bail!("bad K '{spec}'; expected auto or a positive integer"),
    }
}

/// `LO:HI:M` -> M log-spaced bandwidths from LO to HI.
pub fn parse_h_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("bad bandwidth range '{spec}'; expected lo:hi:count");
    }
    let lo: f64 = parts[0].parse()?;
    let hi: f64 = parts[1].parse()?;
    let m: usize = parts[2].parse()?;
    if !(lo > 0.0) || !(hi >= lo) || m < 1 {
        bail!("bad bandwidth range '{spec}'; need 0 < lo <= hi and count >= 1");
    }
    if m == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)).collect())
}

/// Comma-separated example ids, each in 2..=5.
pub fn parse_examples(spec: &str) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let id: u8 = part.trim().parse().map_err(|_| {
            anyhow::anyhow!("bad example id '{part}'; expected integers in 2..=5")
        })?;
        agmm::Example::from_id(id)?;
        out.push(id);
    }
    if out.is_empty() {
        bail!("empty example list");
    }
    Ok(out)
}

/// Comma-separated method names.
pub fn parse_methods(spec: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let m = match part.trim() {
            "em" => Method::Em,
            "npem" => Method::Npem,
            "gibbs" => Method::Gibbs,
            "smoothing" => Method::Smoothing,
            other => bail!("unknown method '{other}'"),
        };
        out.push(m);
    }
    if out.is_empty() {
        bail!("empty method list");
    }
    Ok(out)
}
