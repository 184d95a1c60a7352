use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::diff::random::substream;
use crate::error::{Error, Result};

pub const DEFAULT_VAL_PER_CLASS: usize = 50;

/// Disjoint train / validation / test index sets over target nodes, each
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSet {
    /// Checks disjointness, range and that the union covers `0..n`.
    pub fn new(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for (name, set) in [("train", &train), ("val", &val), ("test", &test)] {
            for &v in set {
                if v >= n {
                    return Err(Error::Dataset(format!("{name} split: node {v} out of range {n}")));
                }
                if seen[v] {
                    return Err(Error::Dataset(format!("{name} split: node {v} appears in more than one split")));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Dataset(format!("node {v} is in no split")));
        }
        let sorted = |mut s: Vec<usize>| {
            s.sort_unstable();
            s
        };
        Ok(SplitSet { train: sorted(train), val: sorted(val), test: sorted(test) })
    }

    /// Validation and test nodes together, sorted.
    pub fn unlabeled(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.val.iter().chain(&self.test).copied().collect();
        u.sort_unstable();
        u
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Stratified sampling without replacement: `n_train` and `n_val` nodes of
/// every class, the rest to test. `labels[v]` is `None` for unlabeled
/// target nodes, which always go to test.
pub fn make_splits(
    labels: &[Option<usize>],
    num_classes: usize,
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<SplitSet> {
    let mut by_class = vec![Vec::new(); num_classes];
    for (v, y) in labels.iter().enumerate() {
        if let Some(y) = *y {
            if y >= num_classes {
                return Err(Error::Dataset(format!("node {v}: label {y} outside {num_classes} classes")));
            }
            by_class[y].push(v);
        }
    }
    let mut rng = substream(seed, "splits");
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < n_train + n_val {
            return Err(Error::Dataset(format!(
                "class {c} has {} labeled nodes, need {} for {n_train} train + {n_val} validation",
                members.len(),
                n_train + n_val
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..n_train]);
        val.extend_from_slice(&members[n_train..n_train + n_val]);
        test.extend_from_slice(&members[n_train + n_val..]);
    }
    test.extend(labels.iter().enumerate().filter(|(_, y)| y.is_none()).map(|(v, _)| v));
    SplitSet::new(train, val, test, labels.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_population_leaves_empty_test() {
        let labels: Vec<_> = (0..10).map(|v| Some(v % 2)).collect();
        let s = make_splits(&labels, 2, 2, 3, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (4, 6, 0));
    }

    #[test]
    fn insufficient_class() {
        let labels = vec![Some(0), Some(0), Some(1)];
        assert!(make_splits(&labels, 2, 1, 1, 0).is_err());
    }

    #[test]
    fn rejects_overlap() {
        assert!(SplitSet::new(vec![0], vec![0], vec![1], 2).is_err());
        assert!(SplitSet::new(vec![0], vec![], vec![], 2).is_err());
    }
}
