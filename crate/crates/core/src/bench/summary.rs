//! Aggregation over replications.

use std::path::Path;

use super::run::ResultRow;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::simgen::SimCondition;

pub const METRICS: [&str; 5] = ["accuracy", "auc", "fnr", "fpr", "fit_seconds"];

/// Mean and sample standard deviation; `sd` is NaN for a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Moments {
        let k = values.len() as f64;
        if values.is_empty() {
            return Moments { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / k;
        let sd = if values.len() < 2 {
            f64::NAN
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)).sqrt()
        };
        Moments { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub condition: SimCondition,
    pub n: usize,
    pub algorithm: String,
    /// Replications with metrics.
    pub count: usize,
    /// Replications that carry an error tag (skips included).
    pub errors: usize,
    /// In `METRICS` order.
    pub metrics: [Moments; 5],
}

impl SummaryRow {
    pub fn accuracy(&self) -> Moments {
        self.metrics[0]
    }
}

/// Groups by (condition, n, algorithm) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::invalid("nothing to summarize"));
    }
    let mut groups: Vec<(SimCondition, usize, String, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.condition && g.1 == r.n && g.2 == r.algorithm) {
            Some(g) => g.3.push(r),
            None => groups.push((r.condition, r.n, r.algorithm.clone(), vec![r])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(condition, n, algorithm, members)| {
            let ok: Vec<&ResultRow> = members.iter().copied().filter(|r| r.error.is_none()).collect();
            let pick = |f: fn(&ResultRow) -> Option<f64>| -> Moments {
                Moments::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                condition,
                n,
                algorithm,
                count: ok.len(),
                errors: members.len() - ok.len(),
                metrics: [
                    pick(|r| r.accuracy),
                    pick(|r| r.auc),
                    pick(|r| r.fnr),
                    pick(|r| r.fpr),
                    pick(|r| r.fit_seconds),
                ],
            }
        })
        .collect())
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

pub fn summary_csv(summary: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Document(e.to_string());
    let mut header: Vec<String> =
        ["condition", "relationship", "noise", "misclassification_rate", "n", "algorithm", "count", "errors"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_sd"));
    }
    w.write_record(&header).map_err(err)?;
    for s in summary {
        let mut rec = vec![
            s.condition.id(),
            s.condition.relationship.name().to_string(),
            s.condition.noise.name().to_string(),
            s.condition.misclassification_rate.map(|r| r.to_string()).unwrap_or_default(),
            s.n.to_string(),
            s.algorithm.clone(),
            s.count.to_string(),
            s.errors.to_string(),
        ];
        for m in &s.metrics {
            rec.push(cell(m.mean));
            rec.push(cell(m.sd));
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Document(e.to_string()))
}

pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    write_atomic(path, &summary_csv(summary)?)
}
