//! The `benchmark` subcommand: seeded replications of the synthetic
//! experiments, reported as mean ± SD per (example, method) cell.

use std::path::Path;

use agmm::{
    fit_local_em, gibbs_sample, initial_local_model, posterior_summary, rng::derive_seed,
    select_k, smooth_cv, smooth_fit, Dataset, EmOptions, Example, GridSpec, GroundTruth,
    InitOptions, Kernel, Priors, TuneOptions,
};
use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{KernelArg, Method};
use crate::evaluate::metrics_for;
use crate::model_file::{write_atomic, ModelFile};
use crate::BenchmarkArgs;

#[derive(Debug, Serialize)]
struct BenchmarkRow {
    example: u8,
    method: &'static str,
    reps: usize,
    completed: usize,
    mce_mean: Option<f64>,
    mce_sd: Option<f64>,
    variance_mse_mean: Option<f64>,
    variance_mse_sd: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BenchmarkReport {
    seed: u64,
    reps: usize,
    examples: Vec<u8>,
    methods: Vec<&'static str>,
    rows: Vec<BenchmarkRow>,
}

struct RepOutcome {
    mce: f64,
    variance_mse: Option<f64>,
    // kept only for replication 0, to draw the plot files
    model: Option<ModelFile>,
}

fn fit_one(
    method: Method,
    data: &Dataset,
    args: &BenchmarkArgs,
    basis_degree: usize,
    fit_seed: u64,
) -> Result<ModelFile> {
    let basis = agmm::Basis::polynomial(data.dim(), basis_degree);
    let init_opts = InitOptions::default();
    let k_range: Vec<usize> = (1..=args.k_max).collect();
    match method {
        Method::Em => {
            let (best_k, cands) =
                select_k(data, &basis, &k_range, &EmOptions::default(), &init_opts)?;
            let model = cands
                .into_iter()
                .find(|c| c.k == best_k)
                .and_then(|c| c.outcome.ok())
                .map(|(m, _)| m)
                .ok_or_else(|| anyhow!("select_k returned no model"))?;
            Ok(ModelFile::Em(model))
        }
        Method::Npem => {
            let opts = TuneOptions::default();
            let (k, h) = agmm::tune(data, &k_range, &[args.npem_h], &opts)?;
            let kernel = Kernel::new(opts.shape, h)?;
            let grid = GridSpec::AllObservations.build(data)?;
            let init = initial_local_model(data, k, &kernel, &grid, &init_opts)?;
            let (model, _) = fit_local_em(data, init, &kernel, &opts.em)?;
            Ok(ModelFile::Npem(model))
        }
        Method::Gibbs => {
            let (k, _) = select_k(data, &basis, &k_range, &EmOptions::default(), &init_opts)?;
            let trace =
                gibbs_sample(data, &basis, k, &Priors::unit(k), args.iters, args.burnin, fit_seed)?;
            let summary = posterior_summary(&trace)?;
            Ok(ModelFile::Gibbs(summary.mean_model(basis)?))
        }
        Method::Smoothing => {
            let hs = crate::args::parse_h_range(&args.h_range)?;
            let h = smooth_cv(data, &hs, args.folds, Kernel::triangular)?;
            let smoother = smooth_fit(data, KernelArg::Triangular.kernel(h)?)?;
            Ok(ModelFile::Smoothing(smoother))
        }
    }
}

pub fn run(args: &BenchmarkArgs, seed: u64, out_dir: &Path) -> Result<()> {
    let examples = crate::args::parse_examples(&args.examples)?;
    let methods = crate::args::parse_methods(&args.methods)?;
    let basis_degree = args
        .basis
        .strip_prefix("poly:")
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| anyhow!("bad basis '{}'; expected poly:<degree>", args.basis))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("AGMM_THREADS") {
        let n: usize = v.parse().context("AGMM_THREADS must be a positive integer")?;
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().context("building thread pool")?;

    // One task per (example, method, rep); data and evaluation grids are
    // derived from (example, rep) only, so every method sees the same
    // replication and adding methods or reps never perturbs other cells.
    let mut tasks = Vec::new();
    for (ei, &example) in examples.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            for rep in 0..args.reps {
                tasks.push((ei, mi, rep, example, method));
            }
        }
    }
    let outcomes: Vec<(usize, usize, usize, Result<RepOutcome>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ei, mi, rep, example_id, method)| {
                let outcome = (|| -> Result<RepOutcome> {
                    let example = Example::from_id(example_id)?;
                    let ex_seed = derive_seed(seed, 1000 + example_id as u64);
                    let data_seed = derive_seed(ex_seed, rep as u64 * 4);
                    let eval_seed = derive_seed(ex_seed, rep as u64 * 4 + 1);
                    let fit_seed = derive_seed(ex_seed, rep as u64 * 4 + 2 + mi as u64 * 977);
                    let (data, truth) = gen_example_checked(example, data_seed)?;
                    let model = fit_one(method, &data, args, basis_degree, fit_seed)?;
                    let (mce, variance_mse) =
                        metrics_for(&model, &truth, args.locations, eval_seed)?;
                    Ok(RepOutcome {
                        mce,
                        variance_mse,
                        model: (rep == 0).then_some(model),
                    })
                })();
                (ei, mi, rep, outcome)
            })
            .collect()
    });

    // Regroup deterministically by (example, method, rep).
    let mut cells: Vec<Vec<Option<RepOutcome>>> =
        (0..examples.len() * methods.len()).map(|_| Vec::new()).collect();
    for c in cells.iter_mut() {
        c.resize_with(args.reps, || None);
    }
    let mut failures = Vec::new();
    for (ei, mi, rep, outcome) in outcomes {
        match outcome {
            Ok(o) => cells[ei * methods.len() + mi][rep] = Some(o),
            Err(e) => failures.push(format!(
                "example {} method {} rep {rep}: {e}",
                examples[ei],
                methods[mi].name()
            )),
        }
    }
    for f in &failures {
        eprintln!("warning: {f} (recorded as NA)");
    }

    let mut rows = Vec::new();
    for (ei, &example) in examples.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            let cell = &cells[ei * methods.len() + mi];
            let mces: Vec<f64> = cell.iter().flatten().map(|o| o.mce).collect();
            let vars: Vec<f64> = cell.iter().flatten().filter_map(|o| o.variance_mse).collect();
            rows.push(BenchmarkRow {
                example,
                method: method.name(),
                reps: args.reps,
                completed: mces.len(),
                mce_mean: mean(&mces),
                mce_sd: sd(&mces),
                variance_mse_mean: mean(&vars),
                variance_mse_sd: sd(&vars),
            });
        }
    }

    let report = BenchmarkReport {
        seed,
        reps: args.reps,
        examples: examples.clone(),
        methods: methods.iter().map(|m| m.name()).collect(),
        rows,
    };
    write_atomic(&out_dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    write_atomic(&out_dir.join("report.csv"), &report_csv(&report))?;

    // Plot data: evenly spaced x, the truth, and each method's rep-0 fit.
    for (ei, &example) in examples.iter().enumerate() {
        let truth = GroundTruth::new(Example::from_id(example)?);
        let mut out = String::from("x,truth");
        for m in &methods {
            out.push_str(&format!(",{}", m.name()));
        }
        out.push('\n');
        let points = 201;
        for j in 0..points {
            let x = -1.0 + 2.0 * j as f64 / (points - 1) as f64;
            out.push_str(&format!("{x},{}", truth.mean_at(x).radians()));
            for (mi, _) in methods.iter().enumerate() {
                let cell = &cells[ei * methods.len() + mi];
                let pred = cell[0]
                    .as_ref()
                    .and_then(|o| o.model.as_ref())
                    .and_then(|m| m.predict(&[x]).ok());
                match pred {
                    Some(a) => out.push_str(&format!(",{}", a.radians())),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        write_atomic(&out_dir.join(format!("plot_example{example}.csv")), &out)?;
    }
    Ok(())
}

fn gen_example_checked(example: Example, seed: u64) -> Result<(Dataset, GroundTruth)> {
    Ok(agmm::gen_example(example, seed)?)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sd(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    Some((v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn report_csv(report: &BenchmarkReport) -> String {
    let na = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
    let mut out = String::from(
        "example,method,reps,completed,mce_mean,mce_sd,variance_mse_mean,variance_mse_sd\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.example,
            r.method,
            r.reps,
            r.completed,
            na(r.mce_mean),
            na(r.mce_sd),
            na(r.variance_mse_mean),
            na(r.variance_mse_sd),
        ));
    }
    out
}
