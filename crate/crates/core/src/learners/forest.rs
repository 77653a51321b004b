//! Breiman random forest on 0/1 labels: per-tree row subsampling, `mtry`
//! features per node, Gini splits, leaf class proportions averaged over trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, Binner, TreeNodes, TreeParams};
use crate::data::Dataset;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNodes>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: usize,
    pub bootstrap_fraction: f64,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

pub fn fit(data: &Dataset, params: ForestParams, rng: &SeededRng) -> ForestModel {
    let binner = Binner::fit(data.features());
    let codes = binner.transform(data.features());
    let y = data.targets();
    let n = data.n_rows();
    let sample = ((params.bootstrap_fraction * n as f64).round() as usize).clamp(1, n);
    let tree_params = TreeParams { max_depth: params.max_depth, min_leaf: params.min_leaf, mtry: params.mtry };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut tree_rng = rng.child(&[t as u64]);
            let mut rows: Vec<u32> = tree_rng.subsample(n, sample).into_iter().map(|i| i as u32).collect();
            tree::grow(&codes, &binner, &y, &mut rows, tree_params, &mut tree_rng)
        })
        .collect();
    ForestModel { trees }
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        total / self.trees.len() as f64
    }
}
