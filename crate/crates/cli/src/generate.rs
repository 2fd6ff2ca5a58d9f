//! The `generate` subcommand: synthetic data plus a ground-truth sidecar.

use std::path::Path;

use agmm::{gen_example, Example};
use anyhow::Result;

use crate::model_file::{sibling, write_atomic, TruthFile};
use crate::GenerateArgs;

pub fn run(args: &GenerateArgs, seed: u64, out: &Path) -> Result<()> {
    let example = Example::from_id(args.example)?;
    let (data, truth) = gen_example(example, seed)?;
    write_atomic(out, &data.to_csv())?;
    let meta = TruthFile { example: args.example, seed, sigma2_truth: truth.sigma2 };
    write_atomic(&sibling(out, "truth.json"), &serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
