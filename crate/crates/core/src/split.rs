use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Disjoint train/test row indices covering `0..n`, each list ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train_fraction: f64,
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} not in (0,1)")));
    }
    Ok(())
}

fn finish(mut train: Vec<usize>, mut test: Vec<usize>, train_fraction: f64) -> TrainTestSplit {
    train.sort_unstable();
    test.sort_unstable();
    TrainTestSplit { train_indices: train, test_indices: test, train_fraction }
}

/// Uniformly random split with `round(train_fraction * n)` training rows.
pub fn split(n: usize, train_fraction: f64, rng: &mut SeededRng) -> Result<TrainTestSplit> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    check_fraction(train_fraction)?;
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "fraction {train_fraction} of {n} rows leaves an empty partition"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let test = perm.split_off(n_train);
    Ok(finish(perm, test, train_fraction))
}

/// Per-class split: each class contributes `round(train_fraction * n_class)` training rows.
pub fn stratified_split(labels: &[u8], train_fraction: f64, rng: &mut SeededRng) -> Result<TrainTestSplit> {
    check_fraction(train_fraction)?;
    let (mut zeros, mut ones): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i] == 0);
    if zeros.is_empty() || ones.is_empty() {
        return Err(Error::invalid("stratified split needs both classes"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [&mut zeros, &mut ones] {
        rng.shuffle(class);
        let k = (train_fraction * class.len() as f64).round() as usize;
        train.extend_from_slice(&class[..k]);
        test.extend_from_slice(&class[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("stratified split leaves an empty partition"));
    }
    Ok(finish(train, test, train_fraction))
}

/// Stratified V-fold assignment: returns the fold id of every row.
///
/// Rows of each class are shuffled and dealt round-robin, continuing the
/// deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], folds: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if folds < 2 || folds > labels.len() {
        return Err(Error::invalid(format!("{folds} folds for {} rows", labels.len())));
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut rows);
        for i in rows {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}
