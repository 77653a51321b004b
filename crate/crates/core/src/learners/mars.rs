//! Multivariate adaptive regression splines on the 0/1 label.
//!
//! Forward pass: greedily add the mirrored hinge pair
//! `parent * max(0, x_v - t)`, `parent * max(0, t - x_v)` that most reduces the
//! residual sum of squares. Every observed value of `x_v` is a candidate knot;
//! for a fixed parent and variable all knots are scored in one sorted sweep
//! using running sums, with the candidates orthogonalized against the current
//! basis through its orthonormal factor.
//!
//! Backward pass: drop terms one at a time (smallest RSS increase first) and
//! keep the subset with the lowest generalized cross-validation score
//! `RSS/n / (1 - C/n)^2`, `C = terms + penalty * (terms - 1) / 2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};

/// Minimum number of rows on each side of a knot.
pub const END_SPAN: usize = 3;

/// Forward pass stops when the best pair raises R^2 by less than this.
pub const FORWARD_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub feature: usize,
    pub knot: f64,
    /// `true` for `max(0, x - knot)`, `false` for `max(0, knot - x)`.
    pub positive: bool,
}

impl Hinge {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        hinge(x, self.knot, self.positive)
    }
}

#[inline]
pub fn hinge(x: f64, knot: f64, positive: bool) -> f64 {
    if positive {
        (x - knot).max(0.0)
    } else {
        (knot - x).max(0.0)
    }
}

/// Product of hinges; the empty product is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub hinges: Vec<Hinge>,
}

impl BasisTerm {
    pub fn eval(&self, row: &[f64]) -> f64 {
        self.hinges.iter().map(|h| h.eval(row[h.feature])).product()
    }

    pub fn degree(&self) -> usize {
        self.hinges.len()
    }

    fn uses(&self, feature: usize) -> bool {
        self.hinges.iter().any(|h| h.feature == feature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub terms: Vec<BasisTerm>,
    pub coefficients: Vec<f64>,
    pub gcv: f64,
}

impl MarsModel {
    /// Unclipped linear predictor.
    pub fn raw_row(&self, row: &[f64]) -> f64 {
        self.terms.iter().zip(&self.coefficients).map(|(t, c)| c * t.eval(row)).sum()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.raw_row(row).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MarsParams {
    pub max_terms: usize,
    pub max_degree: usize,
    pub gcv_penalty: f64,
}

pub fn gcv(rss: f64, n: usize, terms: usize, penalty: f64) -> f64 {
    let c = terms as f64 + penalty * (terms as f64 - 1.0) / 2.0;
    let n = n as f64;
    if c >= n {
        return f64::INFINITY;
    }
    let d = 1.0 - c / n;
    rss / n / (d * d)
}

struct Candidate {
    reduction: f64,
    parent: usize,
    feature: usize,
    knot: f64,
    use_pos: bool,
    use_neg: bool,
}

struct Forward<'a> {
    x: &'a Matrix,
    n: usize,
    order: Vec<Vec<usize>>,
    columns: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    residual: Vec<f64>,
    terms: Vec<BasisTerm>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Forward<'_> {
    /// Orthogonalizes `col` against `q` (twice) and appends it; returns false
    /// when the column is numerically inside the current span.
    fn push_column(&mut self, term: BasisTerm, col: Vec<f64>) -> bool {
        let norm0 = dot(&col, &col).sqrt();
        let mut v = col.clone();
        for _ in 0..2 {
            for qj in &self.q {
                let c = dot(qj, &v);
                v.iter_mut().zip(qj).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 == 0.0 || norm <= 1e-8 * norm0 {
            return false;
        }
        v.iter_mut().for_each(|vi| *vi /= norm);
        let c = dot(&v, &self.residual);
        self.residual.iter_mut().zip(&v).for_each(|(r, qi)| *r -= c * qi);
        self.q.push(v);
        self.columns.push(col);
        self.terms.push(term);
        true
    }

    /// Scores every knot of `feature` under `parent` in one ascending sweep.
    fn sweep(&self, parent: usize, feature: usize, best: &mut Option<Candidate>) {
        let m = self.q.len();
        let pcol = &self.columns[parent];
        let rows: Vec<usize> = self.order[feature].iter().copied().filter(|&i| pcol[i] != 0.0).collect();
        if rows.len() < 2 * END_SPAN + 1 {
            return;
        }
        // scalar sums: p*r*x, p*r, p^2 x^2, p^2 x, p^2 ; vector sums: q_j p x, q_j p
        let mut tot = [0.0; 5];
        let mut tot_qx = vec![0.0; m];
        let mut tot_q = vec![0.0; m];
        for &i in &rows {
            let (p, x, r) = (pcol[i], self.x.get(i, feature), self.residual[i]);
            accumulate(&mut tot, &mut tot_qx, &mut tot_q, &self.q, i, p, x, r);
        }
        let mut pre = [0.0; 5];
        let mut pre_qx = vec![0.0; m];
        let mut pre_q = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut k = 0;
        while k < rows.len() {
            let t = self.x.get(rows[k], feature);
            while k < rows.len() && self.x.get(rows[k], feature) == t {
                let i = rows[k];
                accumulate(&mut pre, &mut pre_qx, &mut pre_q, &self.q, i, pcol[i], t, self.residual[i]);
                k += 1;
            }
            let below = k;
            let above = rows.len() - k;
            if below < END_SPAN {
                continue;
            }
            if above < END_SPAN {
                break;
            }
            // a = p * max(0, x - t) over x > t ; b = p * max(0, t - x) over x <= t
            let ar = (tot[0] - pre[0]) - t * (tot[1] - pre[1]);
            let aa = (tot[2] - pre[2]) - 2.0 * t * (tot[3] - pre[3]) + t * t * (tot[4] - pre[4]);
            let br = t * pre[1] - pre[0];
            let bb = t * t * pre[4] - 2.0 * t * pre[3] + pre[2];
            let (mut uu, mut ww, mut uw) = (0.0, 0.0, 0.0);
            for j in 0..m {
                u[j] = (tot_qx[j] - pre_qx[j]) - t * (tot_q[j] - pre_q[j]);
                w[j] = t * pre_q[j] - pre_qx[j];
                uu += u[j] * u[j];
                ww += w[j] * w[j];
                uw += u[j] * w[j];
            }
            let g11 = aa - uu;
            let g22 = bb - ww;
            let g12 = -uw;
            let ok_a = aa > 0.0 && g11 > 1e-9 * aa;
            let ok_b = bb > 0.0 && g22 > 1e-9 * bb;
            let (reduction, use_pos, use_neg) = match (ok_a, ok_b) {
                (true, true) => {
                    let det = g11 * g22 - g12 * g12;
                    if det > 1e-9 * g11 * g22 {
                        ((g22 * ar * ar - 2.0 * g12 * ar * br + g11 * br * br) / det, true, true)
                    } else if ar * ar / g11 >= br * br / g22 {
                        (ar * ar / g11, true, false)
                    } else {
                        (br * br / g22, false, true)
                    }
                }
                (true, false) => (ar * ar / g11, true, false),
                (false, true) => (br * br / g22, false, true),
                (false, false) => continue,
            };
            if best.as_ref().is_none_or(|b| reduction > b.reduction) {
                *best = Some(Candidate { reduction, parent, feature, knot: t, use_pos, use_neg });
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn accumulate(s: &mut [f64; 5], sqx: &mut [f64], sq: &mut [f64], q: &[Vec<f64>], i: usize, p: f64, x: f64, r: f64) {
    s[0] += p * r * x;
    s[1] += p * r;
    s[2] += p * p * x * x;
    s[3] += p * p * x;
    s[4] += p * p;
    for (j, qj) in q.iter().enumerate() {
        let v = qj[i] * p;
        sqx[j] += v * x;
        sq[j] += v;
    }
}

pub fn fit(data: &Dataset, params: MarsParams) -> MarsModel {
    let x = data.features();
    let y = data.targets();
    let n = y.len();
    let p = x.cols();
    let order = (0..p)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut fw = Forward { x, n, order, columns: Vec::new(), q: Vec::new(), residual: y.clone(), terms: Vec::new() };
    fw.push_column(BasisTerm { hinges: Vec::new() }, vec![1.0; n]);
    let tss = dot(&fw.residual, &fw.residual);

    while fw.terms.len() + 2 <= params.max_terms && tss > 0.0 {
        let rss = dot(&fw.residual, &fw.residual);
        if rss <= 1e-12 * tss {
            break;
        }
        let mut best = None;
        for parent in 0..fw.terms.len() {
            if fw.terms[parent].degree() >= params.max_degree {
                continue;
            }
            for feature in 0..p {
                if !fw.terms[parent].uses(feature) {
                    fw.sweep(parent, feature, &mut best);
                }
            }
        }
        let Some(c) = best else { break };
        if c.reduction / tss < FORWARD_THRESHOLD {
            break;
        }
        let parent_term = fw.terms[c.parent].clone();
        let parent_col = fw.columns[c.parent].clone();
        let mut added = false;
        for (positive, wanted) in [(true, c.use_pos), (false, c.use_neg)] {
            if !wanted {
                continue;
            }
            let h = Hinge { feature: c.feature, knot: c.knot, positive };
            let col: Vec<f64> = (0..fw.n).map(|i| parent_col[i] * h.eval(x.get(i, c.feature))).collect();
            let mut hinges = parent_term.hinges.clone();
            hinges.push(h);
            added |= fw.push_column(BasisTerm { hinges }, col);
        }
        if !added {
            break;
        }
    }
    backward(fw.terms, &fw.columns, &y, params.gcv_penalty)
}

/// Least squares on the selected columns via the Gram matrix; returns (coefficients, RSS).
fn solve_subset(gram: &DMatrix<f64>, xty: &DVector<f64>, yty: f64, subset: &[usize]) -> (Vec<f64>, f64) {
    let k = subset.len();
    let g = DMatrix::from_fn(k, k, |a, b| gram[(subset[a], subset[b])]);
    let rhs = DVector::from_fn(k, |a, _| xty[subset[a]]);
    let beta = match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let ridge = 1e-10 * (0..k).map(|a| g[(a, a)]).fold(0.0, f64::max).max(1e-300);
            let reg = &g + DMatrix::identity(k, k) * ridge;
            match reg.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => g.svd(true, true).solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(k)),
            }
        }
    };
    let rss = (yty - beta.dot(&rhs)).max(0.0);
    (beta.iter().copied().collect(), rss)
}

fn backward(terms: Vec<BasisTerm>, columns: &[Vec<f64>], y: &[f64], penalty: f64) -> MarsModel {
    let n = y.len();
    let m = terms.len();
    let gram = DMatrix::from_fn(m, m, |a, b| dot(&columns[a], &columns[b]));
    let xty = DVector::from_fn(m, |a, _| dot(&columns[a], y));
    let yty = dot(y, y);

    let mut current: Vec<usize> = (0..m).collect();
    let (_, rss) = solve_subset(&gram, &xty, yty, &current);
    let mut best_subset = current.clone();
    let mut best_gcv = gcv(rss, n, current.len(), penalty);
    while current.len() > 1 {
        let mut drop: Option<(f64, usize)> = None;
        for pos in 1..current.len() {
            let trial: Vec<usize> = current.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &t)| t).collect();
            let (_, rss) = solve_subset(&gram, &xty, yty, &trial);
            if drop.is_none_or(|(r, _)| rss < r) {
                drop = Some((rss, pos));
            }
        }
        let (rss, pos) = drop.expect("at least one removable term");
        current.remove(pos);
        let score = gcv(rss, n, current.len(), penalty);
        if score < best_gcv {
            best_gcv = score;
            best_subset = current.clone();
        }
    }
    let (coefficients, _) = solve_subset(&gram, &xty, yty, &best_subset);
    MarsModel {
        terms: best_subset.iter().map(|&t| terms[t].clone()).collect(),
        coefficients,
        gcv: best_gcv,
    }
}
