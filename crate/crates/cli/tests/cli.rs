use std::path::{Path, PathBuf};
use std::process::Command;

use stackbench::io::load_csv;
use stackbench::simgen::{generate, SimCondition};
use stackbench::SeededRng;
use stackbench_cli::{dispatch, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, SEED_ENV};

fn run(args: &[&str]) -> i32 {
    dispatch(std::iter::once("stackbench").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, condition: &str, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let code = run(&["simulate", "--condition", condition, "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", s(&out)]);
    assert_eq!(code, EXIT_OK);
    out
}

#[test]
fn simulate_matches_in_memory_generation() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "d.csv", "mixed-high-mis", 1000, 42);
    let loaded = load_csv(&out, "y").unwrap();
    assert_eq!(loaded.n_rows(), 1000);
    let cond = SimCondition::from_id("mixed-high-mis").unwrap();
    assert_eq!(loaded, generate(&cond, 1000, &mut SeededRng::new(42)).unwrap());

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["condition"], "mixed-high-mis");
}

#[test]
fn fit_then_predict_gives_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "mixed-high-mis", 1000, 42);
    let model = dir.path().join("m.json");
    let preds = dir.path().join("p.csv");
    assert_eq!(
        run(&["fit", "--algo", "knn-superlearner", "--data", s(&data), "--label", "y", "--seed", "1", "--model-out", s(&model)]),
        EXIT_OK
    );
    assert_eq!(run(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&preds)]), EXIT_OK);
    let text = std::fs::read_to_string(&preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p"));
    let values: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 1000);
    assert!(values.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "nonlinear-high", 300, 7);
    let again = simulate(dir.path(), "d2.csv", "nonlinear-high", 300, 7);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let model = dir.path().join(format!("m{k}.json"));
        let preds = dir.path().join(format!("p{k}.csv"));
        let threads = if k == 0 { "1" } else { "3" };
        let fit = ["fit", "--algo", "fast-superlearner", "--data", s(&data), "--seed", "5", "--model-out", s(&model), "--threads", threads];
        assert_eq!(run(&fit), EXIT_OK);
        assert_eq!(run(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&preds)]), EXIT_OK);
        outputs.push((std::fs::read(&model).unwrap(), std::fs::read(&preds).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn spec_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "linear-low", 200, 1);
    let spec = dir.path().join("knn1.json");
    std::fs::write(&spec, r#"{"kind":"learner","spec":{"family":"knn","k":1,"backend":"kdtree"}}"#).unwrap();
    let model = dir.path().join("m.json");
    let preds = dir.path().join("p.csv");
    assert_eq!(run(&["fit", "--algo", s(&spec), "--data", s(&data), "--model-out", s(&model)]), EXIT_OK);
    assert_eq!(run(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&preds)]), EXIT_OK);
    // 1-NN reproduces its own training labels
    let labels = load_csv(&data, "y").unwrap();
    let text = std::fs::read_to_string(&preds).unwrap();
    let got: Vec<u8> = text.lines().skip(1).map(|l| l.parse::<f64>().unwrap() as u8).collect();
    assert_eq!(got, labels.labels());

    std::fs::write(&spec, r#"{"kind":"learner","spec":{"family":"knn","k":0,"backend":"kdtree"}}"#).unwrap();
    assert_ne!(run(&["fit", "--algo", s(&spec), "--data", s(&data), "--model-out", s(&model)]), EXIT_OK);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("x.json");
    assert_eq!(run(&["simulate", "--condition", "linear-low", "--n", "10", "--bogus"]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["simulate", "--condition", "quadratic-low", "--n", "10", "--out", s(&out)]), EXIT_USAGE);
    assert_eq!(run(&["fit", "--algo", "knn5", "--data", s(&missing), "--model-out", s(&out)]), EXIT_USAGE);
    assert_eq!(run(&["fit", "--algo", "no-such-thing", "--data", s(&missing), "--model-out", s(&out)]), EXIT_USAGE);
    let nowhere = dir.path().join("no/such/dir/out.csv");
    assert_eq!(run(&["simulate", "--condition", "linear-low", "--n", "10", "--out", s(&nowhere)]), EXIT_USAGE);
    assert_eq!(run(&["--version"]), EXIT_OK);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,x2,y\n0.1,0.2,1\n0.3,0.4,2\n").unwrap();
    let model = dir.path().join("m.json");
    assert_eq!(run(&["fit", "--algo", "knn5", "--data", s(&bad), "--model-out", s(&model)]), EXIT_FAILURE);
    assert!(!model.exists());
    std::fs::write(&bad, "x1,x2,label\n0.1,0.2,1\n").unwrap();
    assert_eq!(run(&["fit", "--algo", "knn5", "--data", s(&bad), "--model-out", s(&model)]), EXIT_FAILURE);

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{}").unwrap();
    assert_eq!(run(&["predict", "--model", s(&junk), "--data", s(&bad), "--out", s(&dir.path().join("p.csv"))]), EXIT_FAILURE);
}

#[test]
fn bench_and_report_on_a_tiny_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = serde_json::json!({
        "conditions": [{"relationship": "linear", "noise": "low", "misclassification_rate": null}],
        "sizes": [120],
        "replications": 2,
        "algorithms": [{"name": "knn5", "preset": "knn5"}, {"name": "mirror", "preset": "dnn-mirror"}],
        "master_seed": 3,
        "record_timing": false
    });
    let config = dir.path().join("plan.json");
    std::fs::write(&config, plan.to_string()).unwrap();
    let results: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("r{k}.csv"))).collect();
    assert_eq!(run(&["bench", "--config", s(&config), "--out", s(&results[0]), "--threads", "1"]), EXIT_OK);
    assert_eq!(run(&["bench", "--config", s(&config), "--out", s(&results[1]), "--threads", "4"]), EXIT_OK);
    let bytes = std::fs::read(&results[0]).unwrap();
    assert_eq!(bytes, std::fs::read(&results[1]).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 1 + 4);

    let summary = dir.path().join("summary.csv");
    let plot = dir.path().join("plot.svg");
    assert_eq!(run(&["report", "--results", s(&results[0]), "--summary-out", s(&summary), "--plot-out", s(&plot)]), EXIT_OK);
    assert_eq!(std::fs::read_to_string(&summary).unwrap().lines().count(), 1 + 2);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("<svg"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stackbench"))
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let via_env = dir.path().join("env.csv");
    let status = binary()
        .args(["simulate", "--condition", "linear-high", "--n", "50", "--out", s(&via_env)])
        .env(SEED_ENV, "9")
        .status()
        .unwrap();
    assert!(status.success());
    let via_flag = simulate(dir.path(), "flag.csv", "linear-high", 50, 9);
    assert_eq!(std::fs::read(&via_env).unwrap(), std::fs::read(&via_flag).unwrap());

    let bad = binary()
        .args(["simulate", "--condition", "linear-high", "--n", "50", "--out", s(&via_env)])
        .env(SEED_ENV, "nope")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(EXIT_USAGE));
}

#[test]
fn binary_reports_usage_and_versions() {
    let out = binary().args(["simulate", "--wat"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = binary().arg("--version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("model format v1") && text.contains("plan format v1"), "{text}");
}
