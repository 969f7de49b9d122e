//! Datasets: TU benchmark files, generic JSON graphs, splits and synthetic
//! generators.

mod splits;
mod synthetic;
mod tu;

pub use splits::{kfold_splits, node_split, Fold};
pub use synthetic::{
    cycle_graph, erdos_renyi, gen_synthetic, path_graph, path_proteinlike, random_gnm, sbm_node_task,
    star_graph, Synthetic, SyntheticSpec,
};
pub use tu::{load_tu, write_tu};

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphRecord};
use crate::scalar::Scalar;

/// Labeled graphs for graph classification.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset<T> {
    pub name: String,
    pub graphs: Vec<Graph<T>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<T: Scalar> GraphDataset<T> {
    pub fn new(name: &str, graphs: Vec<Graph<T>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::dims(format!("{} labels for {} graphs", labels.len(), graphs.len())));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(Self { name: name.to_string(), graphs, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_width)
    }
}

/// One graph with per-node labels and disjoint train/test masks.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTask<T> {
    pub graph: Graph<T>,
    pub node_labels: Vec<usize>,
    pub num_classes: usize,
    pub train_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

impl<T: Scalar> NodeTask<T> {
    pub fn train_nodes(&self) -> Vec<usize> {
        (0..self.train_mask.len()).filter(|&i| self.train_mask[i]).collect()
    }

    pub fn test_nodes(&self) -> Vec<usize> {
        (0..self.test_mask.len()).filter(|&i| self.test_mask[i]).collect()
    }

    /// Reads a graph-core JSON file with `node_labels` and draws the
    /// per-class split.
    pub fn from_json(path: &Path, per_class_train: usize, per_class_test: usize, seed: u64) -> Result<Self> {
        let rec = GraphRecord::read(path)?;
        let labels = rec
            .node_labels
            .clone()
            .ok_or_else(|| Error::InvalidParams("node task JSON needs node_labels".into()))?;
        let graph = rec.to_graph::<T>()?;
        node_split(graph, labels, per_class_train, per_class_test, seed)
    }
}
