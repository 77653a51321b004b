//! Accuracy, rank AUC and confusion rates at a decision threshold.

use serde::{Deserialize, Serialize};

use crate::data::Probabilities;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub auc: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub fit_seconds: f64,
}

impl MetricReport {
    /// Scores predictions against labels; AUC and rates are NaN when the
    /// labels hold a single class.
    pub fn score(probs: &Probabilities, labels: &[u8], threshold: f64, fit_seconds: f64) -> Result<Self> {
        let accuracy = accuracy(probs, labels, threshold)?;
        let auc = auc(probs, labels).unwrap_or(f64::NAN);
        let (fnr, fpr) = confusion_rates(probs, labels, threshold).unwrap_or((f64::NAN, f64::NAN));
        Ok(MetricReport { accuracy, auc, fnr, fpr, fit_seconds })
    }
}

fn check_lengths(probs: &Probabilities, labels: &[u8]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn accuracy(probs: &Probabilities, labels: &[u8], threshold: f64) -> Result<f64> {
    check_lengths(probs, labels)?;
    if labels.is_empty() {
        return Err(Error::invalid("accuracy of an empty prediction set"));
    }
    let hits = probs
        .values()
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| u8::from(p >= threshold) == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mann-Whitney AUC: P(score of a random positive > score of a random negative),
/// ties counted as one half. Computed from mid-ranks in O(n log n).
pub fn auc(probs: &Probabilities, labels: &[u8]) -> Result<f64> {
    check_lengths(probs, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let p = probs.values();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && p[order[j + 1]] == p[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block i..=j shares the mid-rank
        let mid_rank = (i + j + 2) as f64 / 2.0;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += mid_rank * pos_in_block as f64;
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    let u = pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

/// `(FNR, FPR)` = `(FN/(FN+TP), FP/(FP+TN))`.
pub fn confusion_rates(probs: &Probabilities, labels: &[u8], threshold: f64) -> Result<(f64, f64)> {
    check_lengths(probs, labels)?;
    let (mut tp, mut fn_, mut fp, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.values().iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => tp += 1,
            (false, true) => fn_ += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fn_ == 0 {
        return Err(Error::UndefinedMetric("FNR needs at least one positive".into()));
    }
    if fp + tn == 0 {
        return Err(Error::UndefinedMetric("FPR needs at least one negative".into()));
    }
    Ok((fn_ as f64 / (fn_ + tp) as f64, fp as f64 / (fp + tn) as f64))
}
