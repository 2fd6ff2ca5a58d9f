//! End-to-end checks of the `agmm` binary: exit codes, file outputs,
//! determinism, and serialization round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn agmm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_agmm"))
}

fn run(args: &[&str]) -> Output {
    agmm().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "agmm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("agmm-cli-test-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_csv_and_truth_sidecar() {
    let dir = workdir("generate");
    let csv = dir.join("ex2.csv");
    run_ok(&["generate", "--example", "2", "--seed", "1", "--out", path_str(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 81, "header plus 80 rows");
    assert_eq!(lines[0], "x1,theta");
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ex2.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["example"], 2);
    assert_eq!(truth["seed"], 1);
    assert!(truth["sigma2_truth"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    let missing_out = run(&["generate", "--example", "2"]);
    assert_eq!(missing_out.status.code(), Some(2));

    let bad_example = run(&["generate", "--example", "9", "--out", "/tmp/never.csv"]);
    assert_eq!(bad_example.status.code(), Some(2));

    let unknown_flag = run(&["generate", "--example", "2", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = workdir("runtime-errors");
    let out = run(&[
        "evaluate",
        "--model",
        path_str(&dir.join("missing.json")),
        "--truth",
        path_str(&dir.join("missing.truth.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_em_auto_reports_bic_per_k() {
    let dir = workdir("fit-em");
    let csv = dir.join("ex3.csv");
    run_ok(&["generate", "--example", "3", "--seed", "2", "--out", path_str(&csv)]);
    let model = dir.join("em.json");
    run_ok(&[
        "fit",
        "--data",
        path_str(&csv),
        "--method",
        "em",
        "--basis",
        "poly:1",
        "--K",
        "auto",
        "--out",
        path_str(&model),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("em.report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "em");
    let selected = report["selected_k"].as_u64().unwrap();
    assert!(selected >= 1);
    let candidates = report["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 5, "one candidate per K in 1..=5");
    for c in candidates {
        assert!(c["bic"].is_number() || c["error"].is_string());
    }
}

#[test]
fn evaluate_is_deterministic_and_round_trips() {
    let dir = workdir("evaluate");
    let csv = dir.join("ex5.csv");
    run_ok(&["generate", "--example", "5", "--seed", "3", "--out", path_str(&csv)]);
    let model_path = dir.join("model.json");
    run_ok(&[
        "fit",
        "--data",
        path_str(&csv),
        "--method",
        "em",
        "--out",
        path_str(&model_path),
        "--seed",
        "3",
    ]);
    let a = run_ok(&[
        "evaluate",
        "--model",
        path_str(&model_path),
        "--truth",
        path_str(&dir.join("ex5.truth.json")),
        "--seed",
        "9",
    ]);
    let b = run_ok(&[
        "evaluate",
        "--model",
        path_str(&model_path),
        "--truth",
        path_str(&dir.join("ex5.truth.json")),
        "--seed",
        "9",
    ]);
    assert_eq!(a.stdout, b.stdout, "same seed, same bytes");

    // The serialized model must evaluate exactly like the in-memory one.
    let metrics: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let file_mce = metrics["mce"].as_f64().unwrap();
    let model: agmm_cli::model_file::ModelFile =
        serde_json::from_str(&fs::read_to_string(&model_path).unwrap()).unwrap();
    let truth = agmm::GroundTruth::new(agmm::Example::from_id(5).unwrap());
    let grid_seed = agmm::rng::derive_seed(9, agmm_cli::evaluate::EVAL_STREAM);
    let (mem_mce, mem_var) =
        agmm_cli::evaluate::metrics_for(&model, &truth, 200, grid_seed).unwrap();
    assert!((file_mce - mem_mce).abs() < 1e-12);
    let file_var = metrics["variance_mse"].as_f64().unwrap();
    assert!((file_var - mem_var.unwrap()).abs() < 1e-12);
}

#[test]
fn evaluate_csv_format() {
    let dir = workdir("evaluate-csv");
    let csv = dir.join("ex3.csv");
    run_ok(&["generate", "--example", "3", "--seed", "4", "--out", path_str(&csv)]);
    let model = dir.join("sm.json");
    run_ok(&[
        "fit",
        "--data",
        path_str(&csv),
        "--method",
        "smoothing",
        "--out",
        path_str(&model),
    ]);
    let out = run_ok(&[
        "evaluate",
        "--model",
        path_str(&model),
        "--truth",
        path_str(&dir.join("ex3.truth.json")),
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "example,method,locations,seed,mce,variance_mse");
    let row = lines.next().unwrap();
    assert!(row.starts_with("3,smoothing,200,0,"));
    assert!(row.ends_with(",NA"), "smoothing has no variance estimate: {row}");
}

#[test]
fn gibbs_traces_are_bit_identical_under_fixed_seed() {
    let dir = workdir("gibbs");
    let csv = dir.join("ex3.csv");
    run_ok(&["generate", "--example", "3", "--seed", "5", "--out", path_str(&csv)]);
    for name in ["a", "b"] {
        run_ok(&[
            "fit",
            "--data",
            path_str(&csv),
            "--method",
            "gibbs",
            "--K",
            "2",
            "--iters",
            "400",
            "--burnin",
            "100",
            "--seed",
            "11",
            "--out",
            path_str(&dir.join(format!("{name}.json"))),
        ]);
    }
    let a = fs::read(dir.join("a.trace.csv")).unwrap();
    let b = fs::read(dir.join("b.trace.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(fs::read(dir.join("a.json")).unwrap(), fs::read(dir.join("b.json")).unwrap());
}

#[test]
fn npem_fit_fixed_bandwidth_configuration() {
    let dir = workdir("npem");
    let csv = dir.join("ex5.csv");
    run_ok(&["generate", "--example", "5", "--seed", "6", "--out", path_str(&csv)]);
    let model = dir.join("np.json");
    run_ok(&[
        "fit",
        "--data",
        path_str(&csv),
        "--method",
        "npem",
        "--h",
        "0.01",
        "--grid",
        "all",
        "--out",
        path_str(&model),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("np.report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "npem");
    assert_eq!(report["selected_h"], 0.01);
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(parsed["method"], "npem");
    assert!(parsed["model"]["grid"].as_array().unwrap().len() > 100);
}

#[test]
fn benchmark_four_examples_two_methods_gives_eight_rows() {
    let dir = workdir("benchmark-8");
    run_ok(&[
        "benchmark",
        "--examples",
        "2,3,4,5",
        "--methods",
        "em,smoothing",
        "--reps",
        "1",
        "--seed",
        "2",
        "--out",
        path_str(&dir),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn gibbs_chains_merge_into_one_trace() {
    let dir = workdir("gibbs-chains");
    let csv = dir.join("ex3.csv");
    run_ok(&["generate", "--example", "3", "--seed", "8", "--out", path_str(&csv)]);
    run_ok(&[
        "fit",
        "--data",
        path_str(&csv),
        "--method",
        "gibbs",
        "--K",
        "2",
        "--iters",
        "300",
        "--burnin",
        "100",
        "--chains",
        "2",
        "--seed",
        "12",
        "--out",
        path_str(&dir.join("gb.json")),
    ]);
    let trace = fs::read_to_string(dir.join("gb.trace.csv")).unwrap();
    // header + 2 chains x 200 retained draws
    assert_eq!(trace.lines().count(), 1 + 2 * 200);
    assert!(trace.lines().nth(1).unwrap().starts_with("0,0,"));
    assert!(trace.lines().nth(201).unwrap().starts_with("1,0,"));
}

#[test]
fn benchmark_emits_stable_tables_and_plot_data() {
    let dir = workdir("benchmark");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out, threads) in [(&out_a, "1"), (&out_b, "4")] {
        // Outputs must not depend on the worker count.
        let run = agmm()
            .env("AGMM_THREADS", threads)
            .args([
                "benchmark",
                "--examples",
                "3,5",
                "--methods",
                "em,smoothing",
                "--reps",
                "2",
                "--seed",
                "7",
                "--out",
                path_str(out),
            ])
            .output()
            .expect("binary runs");
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let csv = fs::read_to_string(out_a.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5, "header plus one row per (example, method)");
    assert_eq!(
        lines[0],
        "example,method,reps,completed,mce_mean,mce_sd,variance_mse_mean,variance_mse_sd"
    );
    assert!(lines[1].starts_with("3,em,2,2,"));
    assert!(lines[2].starts_with("3,smoothing,2,2,"));
    // Bit-stable across runs with the same flags.
    assert_eq!(
        fs::read(out_a.join("report.json")).unwrap(),
        fs::read(out_b.join("report.json")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("report.csv")).unwrap(),
        fs::read(out_b.join("report.csv")).unwrap()
    );
    for ex in [3, 5] {
        let plot = fs::read_to_string(out_a.join(format!("plot_example{ex}.csv"))).unwrap();
        let mut plot_lines = plot.lines();
        assert_eq!(plot_lines.next().unwrap(), "x,truth,em,smoothing");
        assert_eq!(plot_lines.count(), 201);
    }
}
