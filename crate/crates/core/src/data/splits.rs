use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::NodeTask;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::rng_from;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled k-fold partition of `0..n`. Fold sizes differ by at most one,
/// larger folds first.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k == 0 || k > n {
        return Err(Error::TooManyFolds { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test: Vec<usize> = idx[start..start + size].to_vec();
        let train: Vec<usize> = idx[..start].iter().chain(&idx[start + size..]).copied().collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

/// Samples `per_class_train` training and `per_class_test` test nodes from
/// every class without replacement; the rest stay unlabeled.
pub fn node_split<T: Scalar>(
    graph: Graph<T>,
    node_labels: Vec<usize>,
    per_class_train: usize,
    per_class_test: usize,
    seed: u64,
) -> Result<NodeTask<T>> {
    let n = graph.num_nodes();
    if node_labels.len() != n {
        return Err(Error::dims(format!("{} node labels for {n} nodes", node_labels.len())));
    }
    let num_classes = node_labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in node_labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = rng_from(seed);
    let mut train_mask = vec![false; n];
    let mut test_mask = vec![false; n];
    let needed = per_class_train + per_class_test;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < needed {
            return Err(Error::ClassTooSmall { class, available: members.len(), needed });
        }
        members.shuffle(&mut rng);
        for &i in &members[..per_class_train] {
            train_mask[i] = true;
        }
        for &i in &members[per_class_train..needed] {
            test_mask[i] = true;
        }
    }
    Ok(NodeTask { graph, node_labels, num_classes, train_mask, test_mask })
}
