//! KNN regression: the prediction is the mean 0/1 label of the `k` nearest
//! training rows.

use serde::{Deserialize, Serialize};

use super::kdtree::{self, KdTree, DEFAULT_LEAF_SIZE};
use super::KnnBackend;
use crate::data::{Dataset, Matrix};
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KnnDoc {
    k: usize,
    backend: KnnBackend,
    features: Matrix,
    labels: Vec<u8>,
}

/// Stored training set plus its index. The kd-tree is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "KnnDoc", into = "KnnDoc")]
pub struct KnnModel {
    k: usize,
    backend: KnnBackend,
    labels: Vec<u8>,
    tree: KdTree,
}

impl From<KnnDoc> for KnnModel {
    fn from(doc: KnnDoc) -> Self {
        KnnModel { k: doc.k, backend: doc.backend, labels: doc.labels, tree: KdTree::build(doc.features, DEFAULT_LEAF_SIZE) }
    }
}

impl From<KnnModel> for KnnDoc {
    fn from(m: KnnModel) -> Self {
        KnnDoc { k: m.k, backend: m.backend, features: m.tree.points().clone(), labels: m.labels }
    }
}

impl PartialEq for KnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.backend == other.backend
            && self.labels == other.labels
            && self.tree.points() == other.tree.points()
    }
}

pub fn fit(data: &Dataset, k: usize, backend: KnnBackend) -> KnnModel {
    KnnModel::from(KnnDoc {
        k,
        backend,
        features: data.features().clone(),
        labels: data.labels().to_vec(),
    })
}

impl KnnModel {
    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    pub fn neighbors(&self, row: &[f64]) -> Result<Vec<(usize, f64)>> {
        match self.backend {
            KnnBackend::Kdtree => self.tree.query(row, self.k),
            KnnBackend::Brute => kdtree::brute_force_query(self.tree.points(), row, self.k),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let nn = self.neighbors(row)?;
        let pos: usize = nn.iter().map(|&(i, _)| usize::from(self.labels[i])).sum();
        Ok(pos as f64 / nn.len() as f64)
    }
}
