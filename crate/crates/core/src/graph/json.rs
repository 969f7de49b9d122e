use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// On-disk JSON form of a single graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub num_nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub node_features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<usize>>,
}

fn to_matrix<T: Scalar>(rows: &[Vec<f64>], what: &str) -> Result<Matrix<T>> {
    let cols = rows.first().map_or(0, Vec::len);
    let rows: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
    Matrix::from_rows(&rows, cols).map_err(|e| Error::dims(format!("{what}: {e}")))
}

fn to_rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|v| v.acc()).collect()).collect()
}

impl GraphRecord {
    pub fn from_graph<T: Scalar>(graph: &Graph<T>) -> Self {
        Self {
            num_nodes: graph.num_nodes(),
            edges: graph.edges().iter().map(|&(s, d)| [s, d]).collect(),
            node_features: to_rows(graph.node_features()),
            edge_features: graph.edge_features().map(to_rows),
            label: None,
            node_labels: None,
        }
    }

    pub fn to_graph<T: Scalar>(&self) -> Result<Graph<T>> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let nf = to_matrix(&self.node_features, "node_features")?;
        let ef = match &self.edge_features {
            Some(rows) => Some(to_matrix(rows, "edge_features")?),
            None => None,
        };
        if let Some(labels) = &self.node_labels {
            if labels.len() != self.num_nodes {
                return Err(Error::dims(format!(
                    "{} node labels for {} nodes",
                    labels.len(),
                    self.num_nodes
                )));
            }
        }
        Graph::build(self.num_nodes, &edges, nf, ef)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_format() {
        let text = r#"{"num_nodes": 3, "edges": [[1,0],[0,1],[1,2]],
            "node_features": [[1.0],[2.0],[3.0]], "label": 1, "node_labels": [0,0,1]}"#;
        let rec: GraphRecord = serde_json::from_str(text).unwrap();
        let g: Graph<f64> = rec.to_graph().unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0), (1, 2)]);
        assert_eq!(rec.label, Some(1));
        let back = GraphRecord::from_graph(&g);
        assert_eq!(back.to_graph::<f64>().unwrap(), g);
    }

    #[test]
    fn rejects_ragged_features() {
        let rec = GraphRecord {
            num_nodes: 2,
            edges: vec![],
            node_features: vec![vec![1.0], vec![1.0, 2.0]],
            edge_features: None,
            label: None,
            node_labels: None,
        };
        assert!(rec.to_graph::<f32>().is_err());
    }
}
