//! The `fit` subcommand: parametric EM, local EM, Gibbs, or smoothing.

use std::path::Path;

use agmm::{
    fit_em, fit_local_em, gibbs_sample, initial_local_model, initial_model, posterior_summary,
    rng::derive_seed, select_k, smooth_cv, smooth_fit, Dataset, EmOptions, GibbsTrace,
    InitOptions, Kernel, PosteriorSummary, Priors, TuneOptions,
};
use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use crate::args::{self, KernelArg, Method};
use crate::model_file::{sibling, write_atomic, ModelFile};
use crate::FitArgs;

#[derive(Serialize)]
struct KCandidateJson {
    k: usize,
    bic: Option<f64>,
    converged: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct FitReportFile {
    method: &'static str,
    selected_k: Option<usize>,
    selected_h: Option<f64>,
    report: Option<agmm::FitReport>,
    candidates: Option<Vec<KCandidateJson>>,
    gibbs: Option<GibbsReportJson>,
    wrapped_thetas: usize,
}

#[derive(Serialize)]
struct GibbsReportJson {
    iters: usize,
    burnin: usize,
    chains: usize,
    summary: PosteriorSummary,
}

pub fn run(args: &FitArgs, seed: u64, out: &Path) -> Result<()> {
    let load = Dataset::read_csv(&args.data)?;
    let data = load.dataset;
    if load.wrapped_count > 0 {
        eprintln!("warning: {} theta values were wrapped into [-pi, pi)", load.wrapped_count);
    }
    let basis = args::parse_basis(&args.basis, data.dim())?;
    let requested_k = args::parse_k(&args.k)?;
    let init_opts = InitOptions { eps: args.init_eps, min_pts: args.init_minpts };
    let k_range: Vec<usize> = (1..=args.k_max).collect();

    let (model, report) = match args.method {
        Method::Em => {
            let em_opts = EmOptions {
                tol: args.tol.unwrap_or(1e-8),
                max_iter: args.max_iter.unwrap_or(500),
            };
            match requested_k {
                Some(k) => {
                    let init = initial_model(&data, k, &basis, &init_opts)?;
                    let (model, report) = fit_em(&data, init, &em_opts)?;
                    (
                        ModelFile::Em(model),
                        FitReportFile {
                            method: "em",
                            selected_k: Some(k),
                            selected_h: None,
                            report: Some(report),
                            candidates: None,
                            gibbs: None,
                            wrapped_thetas: load.wrapped_count,
                        },
                    )
                }
                None => {
                    let (best_k, cands) =
                        select_k(&data, &basis, &k_range, &em_opts, &init_opts)?;
                    let mut model = None;
                    let mut report = None;
                    let mut out_cands = Vec::new();
                    for c in cands {
                        match c.outcome {
                            Ok((m, r)) => {
                                out_cands.push(KCandidateJson {
                                    k: c.k,
                                    bic: Some(r.bic),
                                    converged: Some(r.converged),
                                    error: None,
                                });
                                if c.k == best_k {
                                    model = Some(m);
                                    report = Some(r);
                                }
                            }
                            Err(e) => out_cands.push(KCandidateJson {
                                k: c.k,
                                bic: None,
                                converged: None,
                                error: Some(e.to_string()),
                            }),
                        }
                    }
                    (
                        ModelFile::Em(model.expect("best K has a model")),
                        FitReportFile {
                            method: "em",
                            selected_k: Some(best_k),
                            selected_h: None,
                            report,
                            candidates: Some(out_cands),
                            gibbs: None,
                            wrapped_thetas: load.wrapped_count,
                        },
                    )
                }
            }
        }
        Method::Npem => {
            let em_opts = EmOptions {
                tol: args.tol.unwrap_or_else(|| EmOptions::local().tol),
                max_iter: args.max_iter.unwrap_or_else(|| EmOptions::local().max_iter),
            };
            let shape = args.kernel.unwrap_or(KernelArg::Gaussian).shape();
            let grid_spec = args::parse_grid(&args.grid)?;
            let tune_opts = TuneOptions {
                folds: args.folds,
                grid: grid_spec.clone(),
                shape,
                em: em_opts.clone(),
                init: init_opts.clone(),
            };
            let h_range = match args.h {
                Some(h) => vec![h],
                None => args::parse_h_range(&args.h_range)?,
            };
            let tune_ks = match requested_k {
                Some(k) => vec![k],
                None => k_range.clone(),
            };
            let (k, h) = agmm::tune(&data, &tune_ks, &h_range, &tune_opts)?;
            let kernel = Kernel::new(shape, h)?;
            let grid = grid_spec.build(&data)?;
            let init = initial_local_model(&data, k, &kernel, &grid, &init_opts)?;
            let (model, report) = fit_local_em(&data, init, &kernel, &em_opts)?;
            (
                ModelFile::Npem(model),
                FitReportFile {
                    method: "npem",
                    selected_k: Some(k),
                    selected_h: Some(h),
                    report: Some(report),
                    candidates: None,
                    gibbs: None,
                    wrapped_thetas: load.wrapped_count,
                },
            )
        }
        Method::Gibbs => {
            let k = match requested_k {
                Some(k) => k,
                None => {
                    let em_opts = EmOptions::default();
                    select_k(&data, &basis, &k_range, &em_opts, &init_opts)?.0
                }
            };
            let mut priors = Priors::unit(k);
            priors.alpha = args.prior_alpha;
            priors.lambda = args.prior_lambda;
            priors.alpha0 = args.prior_alpha0;
            priors.lambda0 = args.prior_lambda0;
            priors.gamma = vec![args.prior_gamma; k];
            if args.iters <= args.burnin {
                return Err(anyhow!("--iters must exceed --burnin"));
            }
            let mut traces = Vec::with_capacity(args.chains);
            for chain in 0..args.chains {
                let chain_seed = derive_seed(seed, 0x6000 + chain as u64);
                traces.push(gibbs_sample(
                    &data,
                    &basis,
                    k,
                    &priors,
                    args.iters,
                    args.burnin,
                    chain_seed,
                )?);
            }
            write_trace_csv(&sibling(out, "trace.csv"), &traces)?;
            // Chains merge only at summary time.
            let merged = GibbsTrace {
                draws: traces.iter().flat_map(|t| t.retained().to_vec()).collect(),
                burn_in: 0,
            };
            let summary = posterior_summary(&merged)?;
            let model = summary.mean_model(basis.clone())?;
            (
                ModelFile::Gibbs(model),
                FitReportFile {
                    method: "gibbs",
                    selected_k: Some(k),
                    selected_h: None,
                    report: None,
                    candidates: None,
                    gibbs: Some(GibbsReportJson {
                        iters: args.iters,
                        burnin: args.burnin,
                        chains: args.chains,
                        summary,
                    }),
                    wrapped_thetas: load.wrapped_count,
                },
            )
        }
        Method::Smoothing => {
            let shape = args.kernel.unwrap_or(KernelArg::Triangular);
            let h = match args.h {
                Some(h) => h,
                None => {
                    let hs = args::parse_h_range(&args.h_range)?;
                    smooth_cv(&data, &hs, args.folds, |h| shape.kernel(h))?
                }
            };
            let smoother = smooth_fit(&data, shape.kernel(h)?)?
                .with_degenerate_as_zero(args.allow_degenerate);
            (
                ModelFile::Smoothing(smoother),
                FitReportFile {
                    method: "smoothing",
                    selected_k: None,
                    selected_h: Some(h),
                    report: None,
                    candidates: None,
                    gibbs: None,
                    wrapped_thetas: load.wrapped_count,
                },
            )
        }
    };

    write_atomic(out, &serde_json::to_string_pretty(&model)?)?;
    write_atomic(&sibling(out, "report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

/// One row per retained draw; z assignments are omitted (one column per
/// observation does not belong in a flat CSV).
fn write_trace_csv(path: &Path, traces: &[GibbsTrace]) -> Result<()> {
    let first = traces.first().context("at least one chain")?;
    let retained = first.retained();
    let q = retained.first().map_or(0, |d| d.beta.len());
    let k = retained.first().map_or(0, |d| d.r.len());
    let mut out = String::from("chain,draw");
    for j in 0..q {
        out.push_str(&format!(",beta{j}"));
    }
    out.push_str(",sigma2");
    for j in 1..=k {
        out.push_str(&format!(",r{j}"));
    }
    out.push_str(",sigma0_2\n");
    for (c, trace) in traces.iter().enumerate() {
        for (t, d) in trace.retained().iter().enumerate() {
            out.push_str(&format!("{c},{t}"));
            for b in &d.beta {
                out.push_str(&format!(",{b}"));
            }
            out.push_str(&format!(",{}", d.sigma2));
            for r in &d.r {
                out.push_str(&format!(",{r}"));
            }
            out.push_str(&format!(",{}\n", d.sigma0_2));
        }
    }
    write_atomic(path, &out)
}
