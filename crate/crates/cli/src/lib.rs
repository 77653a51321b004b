//! `stackbench` subcommands. Exit codes: 0 success, 1 usage error, 2 data
//! or fit error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stackbench::bench::{self, BenchPlan};
use stackbench::io::{self, write_atomic};
use stackbench::model::{fit_algorithm, AlgorithmSpec, ModelDocument, MODEL_VERSION, PRESET_NAMES};
use stackbench::simgen::{self, SimCondition, GENERATOR_VERSION};
use stackbench::SeededRng;

pub const SEED_ENV: &str = "STACKBENCH_SEED";
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (model format v{MODEL_VERSION}, plan format v{}, generator v{GENERATOR_VERSION})",
        env!("CARGO_PKG_VERSION"),
        bench::PLAN_VERSION
    )
});

#[derive(Debug, Parser)]
#[command(name = "stackbench", version = VERSION.as_str(), about = "Superlearner and deep-cascade ensembles on simulated benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one simulated dataset as CSV, plus a `.meta.json` sidecar.
    Simulate(SimulateArgs),
    /// Fit a preset or a spec document on a CSV dataset.
    Fit(FitArgs),
    /// Score a CSV with a saved model; writes one probability per row.
    Predict(PredictArgs),
    /// Run a benchmark plan and write the results CSV.
    Bench(BenchArgs),
    /// Summarize a results CSV and draw accuracy-vs-n panels.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Condition id, e.g. `linear-low` or `mixed-high-mis`.
    #[arg(long)]
    condition: String,
    #[arg(long)]
    n: usize,
    /// Falls back to $STACKBENCH_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = io::DEFAULT_LABEL)]
    label: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Preset name or path to an algorithm spec (JSON).
    #[arg(long)]
    algo: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = io::DEFAULT_LABEL)]
    label: String,
    /// Falls back to $STACKBENCH_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV holding (at least) the model's feature columns.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Plan document (JSON), or `full` / `desk` for the built-in plans.
    #[arg(long)]
    config: String,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; overrides the plan. Default: logical cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the plan's master seed (also via $STACKBENCH_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    summary_out: PathBuf,
    #[arg(long)]
    plot_out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<stackbench::Error> for Failure {
    fn from(e: stackbench::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => run_bench(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn input_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file '{}' does not exist", path.display())))
    }
}

fn output_file(path: &Path) -> Outcome {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if path.is_dir() {
        return Err(Failure::Usage(format!("output '{}' is a directory", path.display())));
    }
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("output directory '{}' does not exist", dir.display())))
    }
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--threads must be positive".into())),
        Some(t) => {
            let pool = stackbench_pool(t)?;
            Ok(pool.install(f))
        }
    }
}

fn stackbench_pool(threads: usize) -> Result<stackbench::ThreadPool, Failure> {
    stackbench::thread_pool(threads).map_err(Failure::from)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn simulate(a: SimulateArgs) -> Outcome {
    output_file(&a.out)?;
    let seed = resolve_seed(a.seed)?;
    let condition = SimCondition::from_id(&a.condition).map_err(|e| Failure::Usage(e.to_string()))?;
    let sim = simgen::generate_with(&condition, &Default::default(), a.n, &mut SeededRng::new(seed))?;
    io::write_dataset_csv(&a.out, &sim.data, &a.label)?;
    let meta = json!({
        "generator_version": GENERATOR_VERSION,
        "condition": condition.id(),
        "relationship": condition.relationship.name(),
        "noise": condition.noise.name(),
        "misclassification_rate": condition.misclassification_rate,
        "n": a.n,
        "seed": seed,
        "label": a.label,
        "flipped_count": sim.flipped.len(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Data(e.to_string()))?;
    write_atomic(&sidecar_path(&a.out), text.as_bytes())?;
    Ok(())
}

fn resolve_algorithm(algo: &str) -> Result<AlgorithmSpec, Failure> {
    if PRESET_NAMES.contains(&algo) {
        return Ok(AlgorithmSpec::preset(algo)?);
    }
    let path = Path::new(algo);
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "--algo '{algo}' is neither a preset ({}) nor a spec file",
            PRESET_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let spec: AlgorithmSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn fit(a: FitArgs) -> Outcome {
    input_file(&a.data)?;
    output_file(&a.model_out)?;
    let spec = resolve_algorithm(&a.algo)?;
    let seed = resolve_seed(a.seed)?;
    let data = io::load_csv(&a.data, &a.label)?;
    let (model, _) = with_threads(a.threads, || fit_algorithm(&spec, &data, &SeededRng::new(seed)))??;
    ModelDocument::new(seed, data.feature_names().to_vec(), spec, model).save(&a.model_out)?;
    Ok(())
}

fn predict(a: PredictArgs) -> Outcome {
    input_file(&a.model)?;
    input_file(&a.data)?;
    output_file(&a.out)?;
    let doc = ModelDocument::load(&a.model)?;
    let features = io::load_features_csv(&a.data, &doc.feature_names)?;
    let probs = doc.model.predict(&features)?;
    write_atomic(&a.out, &io::probabilities_csv(&probs))?;
    Ok(())
}

fn run_bench(a: BenchArgs) -> Outcome {
    output_file(&a.out)?;
    let mut plan = match a.config.as_str() {
        "full" => BenchPlan::full(0),
        "desk" => BenchPlan::desk(0),
        path => {
            input_file(Path::new(path))?;
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{path}: {e}")))?;
            BenchPlan::from_json(&text)?
        }
    };
    if a.seed.is_some() || std::env::var_os(SEED_ENV).is_some() {
        plan.master_seed = resolve_seed(a.seed)?;
    }
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        plan.thread_count = Some(t);
    }
    let total = plan.conditions.len() * plan.sizes.len() * plan.replications;
    let done = std::sync::atomic::AtomicUsize::new(0);
    let rows = bench::run_with(&plan, &|cell| {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        if let Some(r) = cell.first() {
            eprintln!("[{k}/{total}] {} n={} rep={}", r.condition.id(), r.n, r.replication);
        }
    })?;
    bench::write_results_csv(&a.out, &rows)?;
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    input_file(&a.results)?;
    output_file(&a.summary_out)?;
    output_file(&a.plot_out)?;
    let rows = bench::read_results_csv(&a.results)?;
    let summary = bench::summarize(&rows)?;
    bench::write_summary_csv(&a.summary_out, &summary)?;
    bench::emit_plot(&summary, &a.plot_out)?;
    Ok(())
}
