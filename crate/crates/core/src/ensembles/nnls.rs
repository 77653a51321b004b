//! Meta-combination weights for the superlearner.
//!
//! `nnls_solve` minimizes `||y - Z w||^2` over the probability simplex
//! (`w >= 0`, `sum w = 1`) with a primal active-set method in the style of
//! Lawson and Hanson: the passive set grows by the coordinate that most
//! violates the KKT conditions, each passive-set subproblem is an
//! equality-constrained least-squares solve, and infeasible steps are cut
//! back to the boundary.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

/// KKT residual tolerance, relative to `max(1, ||Z^T y||_inf)`.
pub const KKT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaWeights {
    pub weights: Vec<f64>,
}

impl MetaWeights {
    pub fn uniform(len: usize) -> Self {
        MetaWeights { weights: vec![1.0 / len as f64; len] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_j w_j * columns_j` for one row of base predictions.
    pub fn combine(&self, predictions: &[f64]) -> f64 {
        self.weights.iter().zip(predictions).map(|(w, p)| w * p).sum()
    }
}

/// `||y - Z w||^2`.
pub fn residual(z: &Matrix, y: &[f64], w: &[f64]) -> f64 {
    z.row_iter()
        .zip(y)
        .map(|(row, &t)| {
            let fit: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
            (t - fit) * (t - fit)
        })
        .sum()
}

/// Solves `[[G_PP, 1], [1^T, 0]] [v; mu] = [c_P; 1]`.
fn solve_passive(gram: &DMatrix<f64>, c: &DVector<f64>, passive: &[usize]) -> Vec<f64> {
    let k = passive.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    for (r, &i) in passive.iter().enumerate() {
        for (s, &j) in passive.iter().enumerate() {
            a[(r, s)] = gram[(i, j)];
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
        b[r] = c[i];
    }
    b[k] = 1.0;
    let sol = match a.clone().lu().solve(&b) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => a.svd(true, true).solve(&b, 1e-13).unwrap_or_else(|_| {
            let mut even = DVector::from_element(k + 1, 1.0 / k as f64);
            even[k] = 0.0;
            even
        }),
    };
    sol.iter().take(k).copied().collect()
}

/// Simplex-constrained least squares; see the module docs.
pub fn nnls_solve(z: &Matrix, y: &[f64]) -> Result<MetaWeights> {
    let (n, l) = (z.rows(), z.cols());
    if l == 0 || n == 0 {
        return Err(Error::invalid("NNLS needs at least one row and one column"));
    }
    if n != y.len() {
        return Err(Error::invalid(format!("{n} rows in Z but {} targets", y.len())));
    }
    if !z.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("NNLS inputs contain non-finite values"));
    }
    if l == 1 {
        return Ok(MetaWeights { weights: vec![1.0] });
    }
    let mut gram = DMatrix::<f64>::zeros(l, l);
    let mut c = DVector::<f64>::zeros(l);
    for (row, &t) in z.row_iter().zip(y) {
        for i in 0..l {
            c[i] += row[i] * t;
            for j in i..l {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..l {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let tol = KKT_TOLERANCE * c.amax().max(1.0);

    // start from the best corner of the simplex
    let start = (0..l)
        .min_by(|&a, &b| (gram[(a, a)] - 2.0 * c[a]).total_cmp(&(gram[(b, b)] - 2.0 * c[b])))
        .expect("l >= 1");
    let mut w = vec![0.0; l];
    w[start] = 1.0;
    let mut passive = vec![start];

    for _ in 0..(10 * l + 20) {
        let g: Vec<f64> = (0..l).map(|i| (0..l).map(|j| gram[(i, j)] * w[j]).sum::<f64>() - c[i]).collect();
        let level = passive.iter().map(|&i| g[i]).sum::<f64>() / passive.len() as f64;
        let entering = (0..l)
            .filter(|i| !passive.contains(i))
            .min_by(|&a, &b| g[a].total_cmp(&g[b]))
            .filter(|&t| g[t] - level < -tol);
        let Some(t) = entering else { break };
        passive.push(t);
        passive.sort_unstable();

        loop {
            let v = solve_passive(&gram, &c, &passive);
            if v.iter().all(|&x| x > 0.0) {
                for (&i, &x) in passive.iter().zip(&v) {
                    w[i] = x;
                }
                break;
            }
            let pos_t = passive.iter().position(|&i| i == t);
            if let Some(pt) = pos_t {
                if v[pt] <= 0.0 && w[t] == 0.0 {
                    // the entering coordinate cannot move: treat as converged
                    passive.remove(pt);
                    return Ok(normalize(w));
                }
            }
            let mut alpha = 1.0f64;
            for (&i, &x) in passive.iter().zip(&v) {
                if x <= 0.0 {
                    let denom = w[i] - x;
                    if denom > 0.0 {
                        alpha = alpha.min(w[i] / denom);
                    }
                }
            }
            for (&i, &x) in passive.iter().zip(&v) {
                w[i] += alpha * (x - w[i]);
            }
            passive.retain(|&i| {
                let keep = w[i] > 1e-15;
                if !keep {
                    w[i] = 0.0;
                }
                keep
            });
            if passive.is_empty() {
                // cannot happen on the simplex; restore feasibility
                w[start] = 1.0;
                passive.push(start);
                break;
            }
        }
    }
    Ok(normalize(w))
}

fn normalize(mut w: Vec<f64>) -> MetaWeights {
    w.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return MetaWeights::uniform(w.len());
    }
    w.iter_mut().for_each(|x| *x /= total);
    MetaWeights { weights: w }
}
