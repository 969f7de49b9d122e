use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Disjoint union of graphs, treated as one unconnected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedGraph<T> {
    pub graph: Graph<T>,
    /// Graph ordinal of every node; contiguous and non-decreasing.
    pub graph_id: Vec<usize>,
    pub num_graphs: usize,
}

impl<T: Scalar> BatchedGraph<T> {
    pub fn node_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_graphs];
        for &g in &self.graph_id {
            counts[g] += 1;
        }
        counts
    }
}

/// Stacks graphs into one, offsetting node indices of graph `k` by the node
/// count of graphs `0..k`.
pub fn batch<T: Scalar>(graphs: &[&Graph<T>]) -> Result<BatchedGraph<T>> {
    let first = graphs.first().ok_or(Error::EmptyBatch)?;
    let width = first.feature_width();
    let edge_width = first.edge_feature_width();
    let mut edges = Vec::new();
    let mut graph_id = Vec::new();
    let mut node_parts = Vec::with_capacity(graphs.len());
    let mut edge_parts = Vec::new();
    let mut offset = 0;
    for (k, g) in graphs.iter().enumerate() {
        if g.feature_width() != width || g.edge_feature_width() != edge_width {
            return Err(Error::dims(format!(
                "graph {k} has feature widths ({}, {:?}), expected ({width}, {edge_width:?})",
                g.feature_width(),
                g.edge_feature_width()
            )));
        }
        edges.extend(g.edges().iter().map(|&(s, d)| (s + offset, d + offset)));
        graph_id.extend(std::iter::repeat_n(k, g.num_nodes()));
        node_parts.push(g.node_features());
        if let Some(ef) = g.edge_features() {
            edge_parts.push(ef);
        }
        offset += g.num_nodes();
    }
    let node_features = if node_parts.iter().all(|p| p.rows() == 0) {
        Matrix::zeros(0, width)
    } else {
        Matrix::vcat(&node_parts)?
    };
    let edge_features = match edge_width {
        Some(w) if edges.is_empty() => Some(Matrix::zeros(0, w)),
        Some(_) => Some(Matrix::vcat(&edge_parts)?),
        None => None,
    };
    let graph = Graph::build(offset, &edges, node_features, edge_features)?;
    Ok(BatchedGraph { graph, graph_id, num_graphs: graphs.len() })
}
