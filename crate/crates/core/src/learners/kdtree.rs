//! Exact k-nearest-neighbor search over an axis-aligned kd-tree.
//!
//! Neighbors are ordered by `(squared distance, row index)`, so ties resolve
//! to the lowest row index and results match an exhaustive scan exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::data::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Matrix,
    order: Vec<usize>,
    nodes: Vec<KdNode>,
    leaf_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    pub fn build(points: Matrix, leaf_size: usize) -> Self {
        let leaf_size = leaf_size.max(1);
        let mut tree = KdTree { order: (0..points.rows()).collect(), points, nodes: Vec::new(), leaf_size };
        if tree.points.rows() > 0 {
            tree.build_node(0, tree.points.rows());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Row indices stored in each leaf, in tree order.
    pub fn leaves(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                KdNode::Leaf { start, end } => Some(&self.order[start..end]),
                KdNode::Split { .. } => None,
            })
            .collect()
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(KdNode::Leaf { start, end });
        if end - start <= self.leaf_size {
            return id;
        }
        let dim = self.widest_dimension(start, end);
        let mid = start + (end - start) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts.get(a, dim).total_cmp(&pts.get(b, dim)).then(a.cmp(&b))
        });
        let value = self.points.get(self.order[mid], dim);
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = KdNode::Split { dim, value, left, right };
        id
    }

    fn widest_dimension(&self, start: usize, end: usize) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for d in 0..self.points.cols() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.points.get(i, d);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best.1 {
                best = (d, hi - lo);
            }
        }
        best.0
    }

    /// The `k` nearest rows to `point` as `(row index, Euclidean distance)`, ascending.
    pub fn query(&self, point: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!("k = {k} with {} indexed rows", self.len())));
        }
        if point.len() != self.points.cols() {
            return Err(Error::invalid(format!(
                "query has {} coordinates, tree has {}",
                point.len(),
                self.points.cols()
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, point, k, &mut heap);
        Ok(heap.into_sorted_vec().into_iter().map(|c| (c.index, c.d2.sqrt())).collect())
    }

    fn search(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate { d2: squared_distance(q, self.points.row(i)), index: i };
                    if heap.len() < k {
                        heap.push(c);
                    } else if heap.peek().is_some_and(|top| c < *top) {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            KdNode::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // `<=` keeps equal-distance rows reachable for the index tie-break
                if heap.len() < k || heap.peek().is_some_and(|top| diff * diff <= top.d2) {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

/// Exhaustive k-nearest scan with the same ordering as [`KdTree::query`].
pub fn brute_force_query(points: &Matrix, point: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    if k == 0 || k > points.rows() {
        return Err(Error::invalid(format!("k = {k} with {} rows", points.rows())));
    }
    let mut all: Vec<Candidate> = (0..points.rows())
        .map(|i| Candidate { d2: squared_distance(point, points.row(i)), index: i })
        .collect();
    all.select_nth_unstable(k - 1);
    all.truncate(k);
    all.sort_unstable();
    Ok(all.into_iter().map(|c| (c.index, c.d2.sqrt())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let data = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        Matrix::new(n, p, data).unwrap()
    }

    #[test]
    fn every_row_in_exactly_one_leaf() {
        let t = KdTree::build(gaussian(157, 3, 2), 8);
        let mut seen: Vec<usize> = t.leaves().concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..157).collect::<Vec<_>>());
        assert!(t.leaves().iter().all(|l| l.len() <= 8));
    }

    #[test]
    fn self_query_and_exhaustive_k() {
        let pts = gaussian(40, 2, 3);
        let t = KdTree::build(pts.clone(), 4);
        assert_eq!(t.query(pts.row(17), 1).unwrap(), vec![(17, 0.0)]);
        let all = t.query(&[0.0, 0.0], 40).unwrap();
        assert_eq!(all.len(), 40);
        assert!(all.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(t.query(&[0.0, 0.0], 41).is_err());
        assert!(t.query(&[0.0, 0.0], 0).is_err());
    }

    #[test]
    fn hundred_gaussian_points_match_exhaustive_scan() {
        let pts = gaussian(100, 4, 11);
        let t = KdTree::build(pts.clone(), DEFAULT_LEAF_SIZE);
        let queries = gaussian(50, 4, 12);
        for q in queries.row_iter() {
            assert_eq!(t.query(q, 5).unwrap(), brute_force_query(&pts, q, 5).unwrap());
        }
    }

    #[test]
    fn duplicate_points_break_ties_by_index() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0], vec![1.0], vec![5.0]]).unwrap();
        let t = KdTree::build(pts, 1);
        let got: Vec<usize> = t.query(&[1.0], 2).unwrap().into_iter().map(|(i, _)| i).collect();
        assert_eq!(got, vec![0, 2]);
    }
}
