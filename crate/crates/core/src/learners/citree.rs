//! Conditional inference trees, simplified: at each node every feature is
//! tested for association with the label by a permutation test on the
//! absolute Pearson correlation, p-values are Bonferroni-adjusted, and the
//! node splits only when the smallest adjusted p-value is at most `alpha`.
//! The winning feature is cut where the standardized two-sample mean
//! difference of the labels is largest.

use serde::{Deserialize, Serialize};

use super::tree::TreeNodes;
use crate::data::{Dataset, Matrix};
use crate::rng::SeededRng;

/// Smallest child allowed by a cut.
pub const MIN_BUCKET: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTreeModel {
    pub nodes: TreeNodes,
}

#[derive(Debug, Clone, Copy)]
pub struct CiTreeParams {
    pub alpha: f64,
    pub n_permutations: usize,
    pub min_node: usize,
}

/// Outcome of the association tests at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTest {
    pub raw_p: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub best_feature: usize,
}

fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|x| x * x).sum();
    (c, ss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_constant(ss: f64, n: usize) -> bool {
    ss <= 1e-24 * n as f64
}

/// Monte-Carlo permutation p-value `(1 + #{|r_perm| >= |r_obs|}) / (1 + B)` for
/// the absolute Pearson correlation of `x` and `y`. Constant inputs give 1.
pub fn permutation_pvalue(x: &[f64], y: &[f64], n_permutations: usize, rng: &mut SeededRng) -> f64 {
    let (xc, sxx) = centered(x);
    let (_, syy) = centered(y);
    if is_constant(sxx, x.len()) || is_constant(syy, y.len()) {
        return 1.0;
    }
    let observed = dot(&xc, y).abs();
    let tol = 1e-12 * observed.max(1e-300);
    let mut perm = y.to_vec();
    let mut hits = 0usize;
    for _ in 0..n_permutations {
        rng.shuffle(&mut perm);
        if dot(&xc, &perm).abs() >= observed - tol {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (1 + n_permutations) as f64
}

/// Runs the per-feature permutation tests on `rows`, sharing one set of
/// label permutations across features.
pub fn node_test(x: &Matrix, y: &[f64], rows: &[usize], n_permutations: usize, rng: &mut SeededRng) -> NodeTest {
    let p = x.cols();
    let node_y: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let (_, syy) = centered(&node_y);
    let mut cols: Vec<Option<(Vec<f64>, f64)>> = Vec::with_capacity(p);
    let mut strength = vec![0.0; p];
    for j in 0..p {
        let v: Vec<f64> = rows.iter().map(|&i| x.get(i, j)).collect();
        let (xc, sxx) = centered(&v);
        if is_constant(sxx, v.len()) || is_constant(syy, node_y.len()) {
            cols.push(None);
        } else {
            let obs = dot(&xc, &node_y).abs();
            strength[j] = obs / (sxx * syy).sqrt();
            cols.push(Some((xc, obs)));
        }
    }
    let mut hits = vec![0usize; p];
    if cols.iter().any(Option::is_some) {
        let mut perm = node_y.clone();
        for _ in 0..n_permutations {
            rng.shuffle(&mut perm);
            for (j, c) in cols.iter().enumerate() {
                if let Some((xc, obs)) = c {
                    if dot(xc, &perm).abs() >= obs - 1e-12 * obs.max(1e-300) {
                        hits[j] += 1;
                    }
                }
            }
        }
    }
    let raw_p: Vec<f64> = (0..p)
        .map(|j| match cols[j] {
            Some(_) => (1 + hits[j]) as f64 / (1 + n_permutations) as f64,
            None => 1.0,
        })
        .collect();
    let adjusted_p: Vec<f64> = raw_p.iter().map(|&q| (q * p as f64).min(1.0)).collect();
    let best_feature = (0..p)
        .min_by(|&a, &b| {
            adjusted_p[a]
                .total_cmp(&adjusted_p[b])
                .then(strength[b].total_cmp(&strength[a]))
                .then(a.cmp(&b))
        })
        .unwrap_or(0);
    NodeTest { raw_p, adjusted_p, best_feature }
}

/// Cut on `feature` maximizing `n_L n_R / n * (mean_L - mean_R)^2`, with both
/// children holding at least [`MIN_BUCKET`] rows.
pub fn best_cut(x: &Matrix, y: &[f64], rows: &[usize], feature: usize) -> Option<f64> {
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&i| (x.get(i, feature), y[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut left_sum = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n.saturating_sub(1) {
        left_sum += pairs[i].1;
        let nl = i + 1;
        let nr = n - nl;
        if nl < MIN_BUCKET || nr < MIN_BUCKET || pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let diff = left_sum / nl as f64 - (total - left_sum) / nr as f64;
        let stat = (nl * nr) as f64 / n as f64 * diff * diff;
        if best.is_none_or(|(s, _)| stat > s) {
            let (a, b) = (pairs[i].0, pairs[i + 1].0);
            let mid = a + (b - a) / 2.0;
            best = Some((stat, if mid < b { mid } else { a }));
        }
    }
    best.map(|(_, cut)| cut)
}

/// The split decision for one node: `None` means the node becomes a leaf.
pub fn citree_split(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: CiTreeParams,
    rng: &mut SeededRng,
) -> Option<(usize, f64)> {
    if rows.len() < params.min_node.max(2) {
        return None;
    }
    let first = y[rows[0]];
    if rows.iter().all(|&i| y[i] == first) {
        return None;
    }
    let test = node_test(x, y, rows, params.n_permutations, rng);
    if test.adjusted_p[test.best_feature] > params.alpha {
        return None;
    }
    best_cut(x, y, rows, test.best_feature).map(|cut| (test.best_feature, cut))
}

pub fn fit(data: &Dataset, params: CiTreeParams, rng: &mut SeededRng) -> CiTreeModel {
    let y = data.targets();
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut nodes = TreeNodes::default();
    grow(data.features(), &y, rows, params, rng, &mut nodes);
    CiTreeModel { nodes }
}

fn grow(x: &Matrix, y: &[f64], rows: Vec<usize>, params: CiTreeParams, rng: &mut SeededRng, nodes: &mut TreeNodes) -> usize {
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len().max(1) as f64;
    match citree_split(x, y, &rows, params, rng) {
        None => nodes.push_leaf(mean),
        Some((feature, cut)) => {
            let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, feature) <= cut);
            let node = nodes.push_split(feature, cut, mean);
            let l = grow(x, y, left, params, rng, nodes);
            let r = grow(x, y, right, params, rng, nodes);
            nodes.set_children(node, l, r);
            node
        }
    }
}

impl CiTreeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes.predict_row(row)
    }
}
