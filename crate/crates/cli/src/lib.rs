//! Command-line front end: dataset generation, fitting, evaluation and the
//! synthetic benchmark.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

pub mod args;
pub mod benchmark;
pub mod evaluate;
pub mod fit;
pub mod generate;
pub mod model_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::{Format, KernelArg, Method};

#[derive(Parser)]
#[command(name = "agmm", version, about = "Circular regression via angular Gaussian mixtures")]
pub struct Cli {
    /// Master seed; every randomized step derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output path (a file; for `benchmark`, a directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Primary output format where both are supported.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset plus its ground-truth sidecar.
    Generate(GenerateArgs),
    /// Fit a model to a dataset CSV.
    Fit(FitArgs),
    /// Score a fitted model against a ground-truth sidecar.
    Evaluate(EvaluateArgs),
    /// Run seeded replications of the synthetic experiments.
    Benchmark(BenchmarkArgs),
}

#[derive(clap::Args)]
pub struct GenerateArgs {
    /// Synthetic example id.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
    pub example: u8,
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// Dataset CSV (header x1,...,xp,theta).
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_enum)]
    pub method: Method,

    /// Basis for the latent mean, `poly:<degree>`.
    #[arg(long, default_value = "poly:3")]
    pub basis: String,

    /// Component count: auto (BIC sweep) or a fixed integer.
    #[arg(long = "K", alias = "k", default_value = "auto")]
    pub k: String,

    /// Largest K probed when K = auto.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,

    /// Fixed kernel bandwidth (npem, smoothing). Skips cross validation.
    #[arg(long)]
    pub h: Option<f64>,

    /// Bandwidth search range `lo:hi:count`, log-spaced.
    #[arg(long, default_value = "0.01:2:12")]
    pub h_range: String,

    /// Grid for the local constants: `all` | `uniform:<J>` (npem).
    #[arg(long, default_value = "all")]
    pub grid: String,

    /// Kernel shape; defaults to gaussian for npem, triangular for smoothing.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,

    /// Cross-validation folds.
    #[arg(long, alias = "cv-folds", default_value_t = 5)]
    pub folds: usize,

    /// Gibbs sweeps.
    #[arg(long, default_value_t = 30_000)]
    pub iters: usize,

    /// Gibbs burn-in sweeps.
    #[arg(long, default_value_t = 10_000)]
    pub burnin: usize,

    /// Independent Gibbs chains, merged at summary time.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,

    /// EM stopping tolerance; defaults to 1e-8 (em) or 1e-3 (npem).
    #[arg(long)]
    pub tol: Option<f64>,

    /// EM iteration cap; defaults to 500 (em) or 200 (npem).
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Clustering radius for initialization (standardized units).
    #[arg(long, default_value_t = 0.3)]
    pub init_eps: f64,

    /// Minimum neighborhood size for a clustering core point.
    #[arg(long, default_value_t = 4)]
    pub init_minpts: usize,

    /// Resolve exact sin/cos cancellation to angle 0 (smoothing).
    #[arg(long)]
    pub allow_degenerate: bool,

    /// Inverse-gamma shape for the sigma^2 prior (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub prior_alpha: f64,

    /// Inverse-gamma rate for the sigma^2 prior (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub prior_lambda: f64,

    /// Inverse-gamma shape for the sigma_0^2 hyperprior (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub prior_alpha0: f64,

    /// Inverse-gamma rate for the sigma_0^2 hyperprior (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub prior_lambda0: f64,

    /// Dirichlet concentration, replicated across components (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub prior_gamma: f64,
}

#[derive(clap::Args)]
pub struct EvaluateArgs {
    /// Fitted model JSON from `fit`.
    #[arg(long)]
    pub model: PathBuf,

    /// Ground-truth sidecar JSON from `generate`.
    #[arg(long)]
    pub truth: PathBuf,

    /// Number of seeded test locations.
    #[arg(long, default_value_t = 200)]
    pub locations: usize,
}

#[derive(clap::Args)]
pub struct BenchmarkArgs {
    /// Comma-separated example ids.
    #[arg(long, default_value = "2,3,4,5")]
    pub examples: String,

    /// Comma-separated methods.
    #[arg(long, default_value = "em,npem,gibbs,smoothing")]
    pub methods: String,

    /// Seeded replications per (example, method) cell.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,

    /// Basis for the parametric fits, `poly:<degree>`.
    #[arg(long, default_value = "poly:3")]
    pub basis: String,

    /// Largest K probed by the BIC sweeps.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,

    /// Fixed bandwidth for the nonparametric EM.
    #[arg(long, default_value_t = 0.01)]
    pub npem_h: f64,

    /// Bandwidth search range for the smoothing baseline, `lo:hi:count`.
    #[arg(long, default_value = "0.01:2:12")]
    pub h_range: String,

    /// Cross-validation folds for the smoothing baseline.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    /// Gibbs sweeps per replication.
    #[arg(long, default_value_t = 30_000)]
    pub iters: usize,

    /// Gibbs burn-in sweeps.
    #[arg(long, default_value_t = 10_000)]
    pub burnin: usize,

    /// Test locations per replication.
    #[arg(long, default_value_t = 200)]
    pub locations: usize,
}

fn require_out(out: &Option<PathBuf>, command: &str) -> Result<PathBuf, ExitCode> {
    match out {
        Some(p) => Ok(p.clone()),
        None => {
            eprintln!("error: `agmm {command}` requires --out");
            Err(ExitCode::from(2))
        }
    }
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Generate(args) => match require_out(&cli.out, "generate") {
            Ok(out) => generate::run(args, cli.seed, &out),
            Err(code) => return code,
        },
        Command::Fit(args) => match require_out(&cli.out, "fit") {
            Ok(out) => fit::run(args, cli.seed, &out),
            Err(code) => return code,
        },
        Command::Evaluate(args) => evaluate::run(args, cli.seed, cli.out.as_deref(), cli.format),
        Command::Benchmark(args) => match require_out(&cli.out, "benchmark") {
            Ok(out) => benchmark::run(args, cli.seed, &out),
            Err(code) => return code,
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
