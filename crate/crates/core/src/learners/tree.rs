//! Histogram-based binary trees shared by the random forest (Gini on 0/1
//! labels) and gradient boosting (squared error on residuals).
//!
//! For 0/1 targets, weighted Gini impurity of a split is `2 * (S - sum_c s_c^2 / n_c)`,
//! so both criteria reduce to maximizing `sum_c s_c^2 / n_c` over the children.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::rng::SeededRng;

pub const MAX_BINS: usize = 256;

const LEAF: u32 = u32::MAX;

/// Per-feature cut points; `bin(x)` is the number of cuts strictly below `x`,
/// so `x <= cuts[k]` exactly when `bin(x) <= k`.
#[derive(Debug, Clone)]
pub struct Binner {
    cuts: Vec<Vec<f64>>,
}

impl Binner {
    pub fn fit(x: &Matrix) -> Self {
        let cuts = (0..x.cols())
            .map(|j| {
                let mut v = x.column(j);
                v.sort_by(f64::total_cmp);
                let mut distinct = v.clone();
                distinct.dedup();
                if distinct.len() <= MAX_BINS {
                    return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
                }
                let n = v.len();
                let mut cuts = Vec::with_capacity(MAX_BINS - 1);
                for q in 1..MAX_BINS {
                    let lo = v[q * n / MAX_BINS];
                    // first distinct value above the quantile
                    let pos = distinct.partition_point(|&d| d <= lo);
                    if pos < distinct.len() {
                        let c = midpoint(lo, distinct[pos]);
                        if cuts.last().is_none_or(|&last| c > last) {
                            cuts.push(c);
                        }
                    }
                }
                cuts
            })
            .collect();
        Binner { cuts }
    }

    /// Column-major bin codes, `codes[j * n + i]`.
    pub fn transform(&self, x: &Matrix) -> Vec<u8> {
        let n = x.rows();
        let mut codes = vec![0u8; n * x.cols()];
        for (j, cuts) in self.cuts.iter().enumerate() {
            for i in 0..n {
                codes[j * n + i] = cuts.partition_point(|&c| c < x.get(i, j)) as u8;
            }
        }
        codes
    }

    pub fn cut(&self, feature: usize, bin: usize) -> f64 {
        self.cuts[feature][bin]
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against the midpoint rounding up to b
    if m < b {
        m
    } else {
        a
    }
}

/// Flat node storage. Rows go left when `x[feature] <= threshold`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeNodes {
    feature: Vec<u32>,
    threshold: Vec<f64>,
    left: Vec<u32>,
    right: Vec<u32>,
    value: Vec<f64>,
}

impl TreeNodes {
    pub fn push_leaf(&mut self, value: f64) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.feature.len() - 1
    }

    /// Reserves a split node; children are attached with [`TreeNodes::set_children`].
    pub fn push_split(&mut self, feature: usize, threshold: f64, value: f64) -> usize {
        self.feature.push(feature as u32);
        self.threshold.push(threshold);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.feature.len() - 1
    }

    pub fn set_children(&mut self, node: usize, left: usize, right: usize) {
        self.left[node] = left as u32;
        self.right[node] = right as u32;
    }

    pub fn len(&self) -> usize {
        self.feature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature.is_empty()
    }

    pub fn n_leaves(&self) -> usize {
        self.feature.iter().filter(|&&f| f == LEAF).count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.feature.iter().filter(|&&f| f != LEAF).map(|&f| f as usize).max()
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            let f = self.feature[node];
            if f == LEAF {
                return self.value[node];
            }
            node = if row[f as usize] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features drawn per node; `>= p` means all features in natural order
    /// and no randomness is consumed.
    pub mtry: usize,
}

struct Builder<'a> {
    codes: &'a [u8],
    n_total: usize,
    binner: &'a Binner,
    y: &'a [f64],
    params: TreeParams,
    n_features: usize,
    nodes: TreeNodes,
    cnt: Vec<u32>,
    sum: Vec<f64>,
}

struct Split {
    feature: usize,
    bin: usize,
}

/// Grows one tree on `rows` of the binned training matrix.
pub fn grow(
    codes: &[u8],
    binner: &Binner,
    y: &[f64],
    rows: &mut [u32],
    params: TreeParams,
    rng: &mut SeededRng,
) -> TreeNodes {
    let n_features = binner.cuts.len();
    let mut b = Builder {
        codes,
        n_total: y.len(),
        binner,
        y,
        params,
        n_features,
        nodes: TreeNodes::default(),
        cnt: vec![0; MAX_BINS],
        sum: vec![0.0; MAX_BINS],
    };
    b.grow_node(rows, 0, rng);
    b.nodes
}

impl Builder<'_> {
    fn grow_node(&mut self, rows: &mut [u32], depth: usize, rng: &mut SeededRng) -> usize {
        let n = rows.len();
        let (mut s, mut ss) = (0.0, 0.0);
        for &r in rows.iter() {
            let v = self.y[r as usize];
            s += v;
            ss += v * v;
        }
        let mean = if n > 0 { s / n as f64 } else { 0.0 };
        let at_depth = self.params.max_depth.is_some_and(|d| depth >= d);
        let impurity = ss - s * s / n as f64;
        if at_depth || n < 2 * self.params.min_leaf.max(1) || impurity <= 1e-12 * n as f64 {
            return self.nodes.push_leaf(mean);
        }
        let Some(split) = self.best_split(rows, s, rng) else {
            return self.nodes.push_leaf(mean);
        };
        let col = &self.codes[split.feature * self.n_total..(split.feature + 1) * self.n_total];
        let mut lo = 0;
        for i in 0..n {
            if usize::from(col[rows[i] as usize]) <= split.bin {
                rows.swap(lo, i);
                lo += 1;
            }
        }
        let threshold = self.binner.cut(split.feature, split.bin);
        let node = self.nodes.push_split(split.feature, threshold, mean);
        let (left_rows, right_rows) = rows.split_at_mut(lo);
        let left = self.grow_node(left_rows, depth + 1, rng);
        let right = self.grow_node(right_rows, depth + 1, rng);
        self.nodes.set_children(node, left, right);
        node
    }

    fn best_split(&mut self, rows: &[u32], total: f64, rng: &mut SeededRng) -> Option<Split> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let parent_score = total * total / n as f64;
        let mut candidates: Vec<usize> = (0..self.n_features).collect();
        let take = if self.params.mtry >= self.n_features {
            self.n_features
        } else {
            for i in 0..self.params.mtry {
                let j = i + rng.below(self.n_features - i);
                candidates.swap(i, j);
            }
            self.params.mtry
        };
        let mut best: Option<(f64, Split)> = None;
        for &f in &candidates[..take] {
            let n_bins = self.binner.n_bins(f);
            if n_bins < 2 {
                continue;
            }
            let col = &self.codes[f * self.n_total..(f + 1) * self.n_total];
            self.cnt[..n_bins].fill(0);
            self.sum[..n_bins].fill(0.0);
            for &r in rows {
                let b = usize::from(col[r as usize]);
                self.cnt[b] += 1;
                self.sum[b] += self.y[r as usize];
            }
            let (mut nl, mut sl) = (0usize, 0.0);
            for b in 0..n_bins - 1 {
                nl += self.cnt[b] as usize;
                sl += self.sum[b];
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                if self.cnt[b] == 0 {
                    continue;
                }
                let sr = total - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent_score;
                if gain > 1e-12 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                    best = Some((gain, Split { feature: f, bin: b }));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}
