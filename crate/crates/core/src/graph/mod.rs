//! Sparse directed graphs with dense per-node features.
//!
//! Edges are explicit directed pairs kept in canonical `(src, dst)` order.
//! Every downstream tie-break (score sorting, pooled node ordering) is defined
//! in terms of that order. An incoming-edge index (CSR keyed by destination) is
//! built once at construction.

mod batch;
mod dot;
mod json;

use std::sync::Arc;

pub use batch::{batch, BatchedGraph};
pub use dot::{to_dot, DotStyle};
pub use json::GraphRecord;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Edge structure of a graph, shared between graphs that only differ in features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    in_offsets: Vec<usize>,
    in_edge_ids: Vec<usize>,
}

impl Topology {
    /// `edges` must already be validated and sorted.
    fn from_sorted(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut in_offsets = vec![0usize; num_nodes + 1];
        for &(_, d) in &edges {
            in_offsets[d + 1] += 1;
        }
        for j in 0..num_nodes {
            in_offsets[j + 1] += in_offsets[j];
        }
        let mut cursor = in_offsets.clone();
        let mut in_edge_ids = vec![0usize; edges.len()];
        for (e, &(_, d)) in edges.iter().enumerate() {
            in_edge_ids[cursor[d]] = e;
            cursor[d] += 1;
        }
        Self { num_nodes, edges, in_offsets, in_edge_ids }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Ids of edges ending at `j`, ascending (i.e. in canonical order).
    #[inline]
    pub fn in_edges(&self, j: usize) -> &[usize] {
        &self.in_edge_ids[self.in_offsets[j]..self.in_offsets[j + 1]]
    }

    /// Canonical index of edge `(src, dst)`, if present.
    pub fn edge_index(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges.binary_search(&(src, dst)).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    topology: Arc<Topology>,
    node_features: Matrix<T>,
    edge_features: Option<Matrix<T>>,
}

impl<T: Scalar> Graph<T> {
    /// Validates and canonicalizes a graph.
    ///
    /// Edges are sorted by `(src, dst)`; edge feature rows follow their edge.
    pub fn build(
        num_nodes: usize,
        edges: &[(usize, usize)],
        node_features: Matrix<T>,
        edge_features: Option<Matrix<T>>,
    ) -> Result<Self> {
        if node_features.rows() != num_nodes {
            return Err(Error::dims(format!(
                "{} feature rows for {num_nodes} nodes",
                node_features.rows()
            )));
        }
        if let Some(ef) = &edge_features {
            if ef.rows() != edges.len() {
                return Err(Error::dims(format!(
                    "{} edge feature rows for {} edges",
                    ef.rows(),
                    edges.len()
                )));
            }
        }
        for &(s, d) in edges {
            for index in [s, d] {
                if index >= num_nodes {
                    return Err(Error::IndexOutOfRange { index, num_nodes });
                }
            }
            if s == d {
                return Err(Error::SelfLoop(s));
            }
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_unstable_by_key(|&e| edges[e]);
        for w in order.windows(2) {
            if edges[w[0]] == edges[w[1]] {
                let (s, d) = edges[w[0]];
                return Err(Error::DuplicateEdge(s, d));
            }
        }
        let sorted: Vec<(usize, usize)> = order.iter().map(|&e| edges[e]).collect();
        let edge_features = edge_features.map(|ef| ef.gather_rows(&order));
        Ok(Self {
            topology: Arc::new(Topology::from_sorted(num_nodes, sorted)),
            node_features,
            edge_features,
        })
    }

    /// Wraps an edge list that is already sorted, unique and in range.
    pub(crate) fn from_canonical(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_features: Matrix<T>,
        edge_features: Option<Matrix<T>>,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(node_features.rows(), num_nodes);
        Self {
            topology: Arc::new(Topology::from_sorted(num_nodes, edges)),
            node_features,
            edge_features,
        }
    }

    /// Same structure, different node features.
    pub fn with_node_features(&self, node_features: Matrix<T>) -> Result<Self> {
        if node_features.rows() != self.num_nodes() {
            return Err(Error::dims(format!(
                "{} feature rows for {} nodes",
                node_features.rows(),
                self.num_nodes()
            )));
        }
        Ok(Self {
            topology: Arc::clone(&self.topology),
            node_features,
            edge_features: self.edge_features.clone(),
        })
    }

    pub fn without_edge_features(&self) -> Self {
        Self {
            topology: Arc::clone(&self.topology),
            node_features: self.node_features.clone(),
            edge_features: None,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn num_nodes(&self) -> usize {
        self.topology.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.topology.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.topology.edges
    }

    pub fn node_features(&self) -> &Matrix<T> {
        &self.node_features
    }

    pub fn edge_features(&self) -> Option<&Matrix<T>> {
        self.edge_features.as_ref()
    }

    pub fn feature_width(&self) -> usize {
        self.node_features.cols()
    }

    pub fn edge_feature_width(&self) -> Option<usize> {
        self.edge_features.as_ref().map(Matrix::cols)
    }

    pub fn in_edges(&self, j: usize) -> &[usize] {
        self.topology.in_edges(j)
    }

    /// Sources of all edges ending at `j`, in canonical edge order.
    pub fn in_neighbors(&self, j: usize) -> Result<Vec<usize>> {
        if j >= self.num_nodes() {
            return Err(Error::IndexOutOfRange { index: j, num_nodes: self.num_nodes() });
        }
        Ok(self.in_edges(j).iter().map(|&e| self.topology.edges[e].0).collect())
    }

    /// Adds every missing reverse edge. Reverse edges copy the forward edge's features.
    pub fn symmetrize(&self) -> Self {
        let topo = &self.topology;
        let missing: Vec<usize> = (0..topo.edges.len())
            .filter(|&e| {
                let (s, d) = topo.edges[e];
                topo.edge_index(d, s).is_none()
            })
            .collect();
        if missing.is_empty() {
            return self.clone();
        }
        let mut edges = topo.edges.clone();
        edges.extend(missing.iter().map(|&e| (topo.edges[e].1, topo.edges[e].0)));
        let edge_features = self.edge_features.as_ref().map(|ef| {
            let extra = ef.gather_rows(&missing);
            Matrix::vcat(&[ef, &extra]).expect("same width")
        });
        Self::build(self.num_nodes(), &edges, self.node_features.clone(), edge_features)
            .expect("reverse of a valid edge set is valid")
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().iter().all(|&(s, d)| self.topology.edge_index(d, s).is_some())
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        Graph {
            topology: Arc::clone(&self.topology),
            node_features: self.node_features.cast(),
            edge_features: self.edge_features.as_ref().map(Matrix::cast),
        }
    }
}
