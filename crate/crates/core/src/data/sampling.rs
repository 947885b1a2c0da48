use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BinaryDataset;
use crate::error::{Error, Result};

/// Randomly duplicates rows of every non-majority class until all classes
/// have the majority count. Original rows come first, in their original
/// order; duplicates are appended class by class.
pub fn oversample_minority(ds: &BinaryDataset, seed: u64) -> Result<BinaryDataset> {
    let counts = ds.class_counts();
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidData(format!(
            "class `{}` has no samples",
            ds.class_names()[k]
        )));
    }
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..ds.n_samples()).collect();
    for (k, &count) in counts.iter().enumerate() {
        if count == target {
            continue;
        }
        let members: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.label(i) == k).collect();
        rows.extend((0..target - count).map(|_| members[rng.gen_range(0..members.len())]));
    }
    Ok(ds.select_rows(&rows))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split over class labels.
///
/// Each class's indices are shuffled under `seed` and dealt round-robin to
/// the folds; the dealing position carries over from one class to the next
/// so total fold sizes stay balanced. Per-class test counts across folds
/// differ by at most one.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        if c >= n_classes {
            return Err(Error::InvalidData(format!("class index {c} out of range")));
        }
        by_class[c].push(i);
    }
    if let Some(c) = by_class.iter().position(|m| m.len() < k) {
        return Err(Error::InvalidData(format!(
            "class {c} has {} samples, fewer than {k} folds",
            by_class[c].len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

impl BinaryDataset {
    pub fn stratified_folds(&self, k: usize, seed: u64) -> Result<Vec<Fold>> {
        stratified_folds(self.labels(), self.n_classes(), k, seed)
    }
}
