//! The `evaluate` subcommand: held-out circular error against a known truth.

use std::path::Path;

use agmm::{mean_circular_error, rng::derive_seed, truth_grid, Angle, Example, GroundTruth};
use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::Format;
use crate::model_file::{read_model, read_truth, write_atomic, ModelFile};
use crate::EvaluateArgs;

pub const EVAL_STREAM: u64 = 0xE7A1;

#[derive(Debug, Serialize)]
pub struct Metrics {
    pub example: u8,
    pub method: String,
    pub locations: usize,
    pub seed: u64,
    pub mce: f64,
    pub variance_mse: Option<f64>,
}

/// MCE (and variance MSE where defined) of a fitted model over seeded
/// test locations.
pub fn metrics_for(
    model: &ModelFile,
    truth: &GroundTruth,
    locations: usize,
    grid_seed: u64,
) -> Result<(f64, Option<f64>)> {
    let grid = truth_grid(truth, locations, grid_seed)?;
    let truths: Vec<Angle> = grid.iter().map(|(_, a)| *a).collect();
    let mut preds = Vec::with_capacity(grid.len());
    for (x, _) in &grid {
        preds.push(model.predict(&[*x]).with_context(|| format!("predicting at x = {x}"))?);
    }
    let mce = mean_circular_error(&truths, &preds)?;
    let variance_mse = match model.variance_at(&[grid[0].0]) {
        None => None,
        Some(_) => {
            let mut total = 0.0;
            for (x, _) in &grid {
                let v = model
                    .variance_at(&[*x])
                    .expect("variance-producing method")
                    .with_context(|| format!("variance at x = {x}"))?;
                total += (v - truth.sigma2) * (v - truth.sigma2);
            }
            Some(total / grid.len() as f64)
        }
    };
    Ok((mce, variance_mse))
}

fn metrics_csv(m: &Metrics) -> String {
    let var = m.variance_mse.map_or("NA".to_string(), |v| v.to_string());
    format!(
        "example,method,locations,seed,mce,variance_mse\n{},{},{},{},{},{}\n",
        m.example, m.method, m.locations, m.seed, m.mce, var
    )
}

pub fn run(args: &EvaluateArgs, seed: u64, out: Option<&Path>, format: Format) -> Result<()> {
    let model = read_model(&args.model)?;
    let truth_meta = read_truth(&args.truth)?;
    let truth = GroundTruth::new(Example::from_id(truth_meta.example)?);
    let grid_seed = derive_seed(seed, EVAL_STREAM);
    let (mce, variance_mse) = metrics_for(&model, &truth, args.locations, grid_seed)?;
    let metrics = Metrics {
        example: truth_meta.example,
        method: model.method_name().to_string(),
        locations: args.locations,
        seed,
        mce,
        variance_mse,
    };
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&metrics)? + "\n",
        Format::Csv => metrics_csv(&metrics),
    };
    match out {
        Some(path) => write_atomic(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}
