//! Random ferns: each fern applies `depth` random threshold tests whose
//! joint outcome indexes a table of add-one-smoothed class posteriors. The
//! ensemble sums per-class log-posteriors over ferns (semi-naive Bayes) and
//! normalizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fern {
    /// `(feature index, threshold)`; the first test is the most significant bit.
    pub tests: Vec<(usize, f64)>,
    /// `[ln P(y=0 | bin), ln P(y=1 | bin)]` per bin.
    pub log_posterior: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FernsModel {
    pub ferns: Vec<Fern>,
}

/// D-bit code of `point`: bit `d` (counted from the most significant end) is
/// set iff `point[feature_d] > threshold_d`.
pub fn fern_bin_index(point: &[f64], tests: &[(usize, f64)]) -> Result<usize> {
    if tests.is_empty() {
        return Err(Error::invalid("fern needs at least one test"));
    }
    let mut code = 0;
    for &(f, t) in tests {
        let v = point
            .get(f)
            .ok_or_else(|| Error::invalid(format!("fern feature {f} out of range for {} columns", point.len())))?;
        code = (code << 1) | usize::from(*v > t);
    }
    Ok(code)
}

/// `(pos + 1) / (pos + neg + 2)`.
pub fn smoothed_posterior(pos: u64, neg: u64) -> f64 {
    (pos as f64 + 1.0) / ((pos + neg) as f64 + 2.0)
}

pub fn fit(data: &Dataset, n_ferns: usize, depth: usize, rng: &SeededRng) -> FernsModel {
    let x = data.features();
    let p = x.cols();
    let ranges: Vec<(f64, f64)> = (0..p)
        .map(|j| {
            let col = x.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    let ferns = (0..n_ferns)
        .into_par_iter()
        .map(|f| {
            let mut r = rng.child(&[f as u64]);
            let tests: Vec<(usize, f64)> = (0..depth)
                .map(|_| {
                    let feature = r.below(p);
                    let (lo, hi) = ranges[feature];
                    (feature, lo + r.unit() * (hi - lo))
                })
                .collect();
            let mut counts = vec![[0u64; 2]; 1 << depth];
            for (row, &y) in x.row_iter().zip(data.labels()) {
                let bin = fern_bin_index(row, &tests).expect("tests drawn from valid features");
                counts[bin][usize::from(y)] += 1;
            }
            let log_posterior = counts
                .iter()
                .map(|&[neg, pos]| [smoothed_posterior(neg, pos).ln(), smoothed_posterior(pos, neg).ln()])
                .collect();
            Fern { tests, log_posterior }
        })
        .collect();
    FernsModel { ferns }
}

impl FernsModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let (mut s0, mut s1) = (0.0, 0.0);
        for fern in &self.ferns {
            let lp = fern.log_posterior[fern_bin_index(row, &fern.tests)?];
            s0 += lp[0];
            s1 += lp[1];
        }
        Ok(1.0 / (1.0 + (s0 - s1).exp()))
    }
}
