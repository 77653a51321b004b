//! Executing a plan and the results CSV.

use std::path::Path;

use rayon::prelude::*;

use super::plan::BenchPlan;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::{MetricReport, DEFAULT_THRESHOLD};
use crate::model::fit_algorithm;
use crate::rng::{derive_seed, stable_hash, SeededRng};
use crate::simgen::{generate, NoiseLevel, Relationship, SimCondition};
use crate::split::split;

pub const RESULTS_HEADER: [&str; 14] = [
    "condition",
    "relationship",
    "noise",
    "misclassification_rate",
    "n",
    "replication",
    "algorithm",
    "cell_seed",
    "accuracy",
    "auc",
    "fnr",
    "fpr",
    "fit_seconds",
    "error",
];

pub const SKIPPED: &str = "skipped";

const DATA_KEY: u64 = 1;
const SPLIT_KEY: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub condition: SimCondition,
    pub n: usize,
    pub replication: usize,
    pub algorithm: String,
    pub cell_seed: u64,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fit_seconds: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(condition: SimCondition, n: usize, replication: usize, algorithm: &str, cell_seed: u64, error: String) -> Self {
        ResultRow {
            condition,
            n,
            replication,
            algorithm: algorithm.to_string(),
            cell_seed,
            accuracy: None,
            auc: None,
            fnr: None,
            fpr: None,
            fit_seconds: None,
            error: Some(error),
        }
    }
}

pub fn cell_seed(master: u64, condition_index: usize, n: usize, replication: usize) -> u64 {
    derive_seed(master, &[condition_index as u64, n as u64, replication as u64])
}

/// Seed for one algorithm inside a cell; depends on the algorithm's name only.
pub fn algorithm_seed(cell_seed: u64, name: &str) -> u64 {
    derive_seed(cell_seed, &[stable_hash(name.as_bytes())])
}

pub fn run(plan: &BenchPlan) -> Result<Vec<ResultRow>> {
    run_with(plan, &|_| {})
}

/// Runs every cell; `on_cell` sees each finished cell's rows as they
/// complete (in scheduling order). The returned rows are in canonical order.
pub fn run_with(plan: &BenchPlan, on_cell: &(dyn Fn(&[ResultRow]) + Sync)) -> Result<Vec<ResultRow>> {
    plan.validate()?;
    let algorithms = plan.algorithms.iter().map(|a| a.resolve()).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for ci in 0..plan.conditions.len() {
        for &n in &plan.sizes {
            for rep in 0..plan.replications {
                cells.push((ci, n, rep));
            }
        }
    }
    let pool = crate::thread_pool(plan.thread_count.unwrap_or_else(rayon::current_num_threads))?;
    let per_cell: Vec<Vec<ResultRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(ci, n, rep)| {
                let rows = run_cell(plan, &algorithms, ci, n, rep);
                on_cell(&rows);
                rows
            })
            .collect()
    });
    Ok(per_cell.into_iter().flatten().collect())
}

fn run_cell(plan: &BenchPlan, algorithms: &[crate::model::AlgorithmSpec], ci: usize, n: usize, rep: usize) -> Vec<ResultRow> {
    let condition = plan.conditions[ci];
    let seed = cell_seed(plan.master_seed, ci, n, rep);
    let prepared = generate(&condition, n, &mut SeededRng::new(derive_seed(seed, &[DATA_KEY]))).and_then(|data| {
        let s = split(n, plan.train_fraction, &mut SeededRng::new(derive_seed(seed, &[SPLIT_KEY])))?;
        Ok((data.subset(&s.train_indices), data.subset(&s.test_indices)))
    });
    plan.algorithms
        .iter()
        .zip(algorithms)
        .map(|(entry, spec)| {
            let fail = |msg: String| ResultRow::failed(condition, n, rep, &entry.name, seed, msg);
            if !entry.runs_at(n) {
                return fail(SKIPPED.to_string());
            }
            let (train, test) = match &prepared {
                Ok(p) => p,
                Err(e) => return fail(e.to_string()),
            };
            let rng = SeededRng::new(algorithm_seed(seed, &entry.name));
            let outcome = fit_algorithm(spec, train, &rng).and_then(|(model, secs)| {
                let probs = model.predict(test.features())?;
                MetricReport::score(&probs, test.labels(), DEFAULT_THRESHOLD, secs)
            });
            match outcome {
                Ok(m) => ResultRow {
                    condition,
                    n,
                    replication: rep,
                    algorithm: entry.name.clone(),
                    cell_seed: seed,
                    accuracy: Some(m.accuracy),
                    auc: finite(m.auc),
                    fnr: finite(m.fnr),
                    fpr: finite(m.fpr),
                    fit_seconds: plan.record_timing.then_some(m.fit_seconds),
                    error: None,
                },
                Err(e) => fail(e.to_string()),
            }
        })
        .collect()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Document(e.to_string());
    w.write_record(RESULTS_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.condition.id(),
            r.condition.relationship.name().to_string(),
            r.condition.noise.name().to_string(),
            opt(r.condition.misclassification_rate),
            r.n.to_string(),
            r.replication.to_string(),
            r.algorithm.clone(),
            r.cell_seed.to_string(),
            opt(r.accuracy),
            opt(r.auc),
            opt(r.fnr),
            opt(r.fpr),
            opt(r.fit_seconds),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Document(e.to_string()))
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_atomic(path, &results_csv(rows)?)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_results_csv(file)
}

pub fn parse_results_csv<R: std::io::Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let load = |row: usize, column: &str, reason: String| Error::Load { row, column: column.to_string(), reason };
    let header = rdr.headers().map_err(|e| load(1, "", e.to_string()))?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(load(1, "", "not a results file (unexpected header)".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| load(line, "", e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<Option<f64>> {
            let s = field(j);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| load(line, RESULTS_HEADER[j], format!("'{s}' is not a number")))
        };
        let int = |j: usize| -> Result<u64> {
            field(j).parse().map_err(|_| load(line, RESULTS_HEADER[j], format!("'{}' is not an integer", field(j))))
        };
        let relationship = match field(1) {
            "linear" => Relationship::Linear,
            "nonlinear" => Relationship::Nonlinear,
            "mixed" => Relationship::Mixed,
            other => return Err(load(line, "relationship", format!("unknown relationship '{other}'"))),
        };
        let noise = match field(2) {
            "low" => NoiseLevel::Low,
            "high" => NoiseLevel::High,
            other => return Err(load(line, "noise", format!("unknown noise level '{other}'"))),
        };
        let error = field(13);
        rows.push(ResultRow {
            condition: SimCondition { relationship, noise, misclassification_rate: num(3)? },
            n: int(4)? as usize,
            replication: int(5)? as usize,
            algorithm: field(6).to_string(),
            cell_seed: int(7)?,
            accuracy: num(8)?,
            auc: num(9)?,
            fnr: num(10)?,
            fpr: num(11)?,
            fit_seconds: num(12)?,
            error: (!error.is_empty()).then(|| error.to_string()),
        });
    }
    Ok(rows)
}
