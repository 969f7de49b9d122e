use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{edgepool_forward, ForwardOptions, PoolInfo, PoolParams};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphRecord};
use crate::scalar::Scalar;

/// One entry of the exported pooling hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyLevel {
    pub cluster_of: Vec<usize>,
    pub matching: Vec<[usize; 2]>,
    pub node_score: Vec<f64>,
    pub graph: GraphRecord,
}

impl HierarchyLevel {
    pub fn new<T: Scalar>(info: &PoolInfo<T>, pooled: &Graph<T>) -> Self {
        Self {
            cluster_of: info.cluster_of.clone(),
            matching: info.matching.iter().map(|&(s, d)| [s, d]).collect(),
            node_score: info.node_score.iter().map(|s| s.acc()).collect(),
            graph: GraphRecord::from_graph(pooled),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParamsRecord {
    pub weight: Vec<f64>,
    pub bias: f64,
}

/// Score parameters read from disk: one set shared by every level, or one per level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoolParamsFile {
    Shared(ScoreParamsRecord),
    PerLevel(Vec<ScoreParamsRecord>),
}

impl PoolParamsFile {
    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn for_level<T: Scalar>(
        &self,
        level: usize,
        node_width: usize,
        edge_width: Option<usize>,
    ) -> Result<PoolParams<T>> {
        let rec = match self {
            PoolParamsFile::Shared(r) => r,
            PoolParamsFile::PerLevel(v) => v.get(level).ok_or_else(|| {
                Error::InvalidParams(format!("no score parameters for level {level}"))
            })?,
        };
        PoolParams::new(
            node_width,
            edge_width,
            rec.weight.iter().map(|&w| T::lit(w)).collect(),
            T::lit(rec.bias),
        )
    }
}

/// Pools `graph` repeatedly, level `k` using `params(k)`.
/// Returns `(pooled graph, info)` per level.
pub fn pool_hierarchy<T: Scalar>(
    graph: &Graph<T>,
    levels: usize,
    mut params: impl FnMut(usize) -> Result<PoolParams<T>>,
    opts: &ForwardOptions,
) -> Result<Vec<(Graph<T>, PoolInfo<T>)>> {
    let mut out = Vec::with_capacity(levels);
    let mut current = graph.clone();
    for level in 0..levels {
        let p = params(level)?;
        let step = edgepool_forward(&current, &p, opts)?;
        current = step.pooled.clone();
        out.push((step.pooled, step.info));
    }
    Ok(out)
}
