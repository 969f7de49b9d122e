//! Edge-contraction pooling.
//!
//! One pooling step scores every directed edge with a linear map of the
//! concatenated endpoint features, normalizes the scores with a softmax over
//! the incoming edges of each destination (shifted by 0.5 so scores centre on
//! 1), greedily contracts the highest-scoring edges whose endpoints are both
//! still unmatched, and merges each contracted pair into one node whose
//! features are gated by the edge score.
//!
//! Selection is a single global sort followed by a linear sweep. Ties are
//! broken by canonical edge index.

mod backward;
mod hierarchy;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use backward::{edgepool_backward, PoolGrads};
pub use hierarchy::{pool_hierarchy, HierarchyLevel, PoolParamsFile};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rng::{rng_from, Rng};
use crate::scalar::Scalar;

/// Linear scoring parameters: `r = W · (n_src ‖ n_dst [‖ f_e]) + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolParams<T> {
    pub weight: Vec<T>,
    pub bias: T,
    node_width: usize,
    edge_width: Option<usize>,
}

impl<T: Scalar> PoolParams<T> {
    pub fn new(
        node_width: usize,
        edge_width: Option<usize>,
        weight: Vec<T>,
        bias: T,
    ) -> Result<Self> {
        let expected = 2 * node_width + edge_width.unwrap_or(0);
        if weight.len() != expected {
            return Err(Error::dims(format!(
                "score weight has {} entries, expected {expected}",
                weight.len()
            )));
        }
        Ok(Self { weight, bias, node_width, edge_width })
    }

    pub fn zeros(node_width: usize, edge_width: Option<usize>) -> Self {
        let n = 2 * node_width + edge_width.unwrap_or(0);
        Self { weight: vec![T::zero(); n], bias: T::zero(), node_width, edge_width }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn random(node_width: usize, edge_width: Option<usize>, rng: &mut Rng) -> Self {
        let n = 2 * node_width + edge_width.unwrap_or(0);
        let limit = (6.0 / (n as f64 + 1.0)).sqrt();
        let weight = (0..n).map(|_| T::lit(rng.random_range(-limit..=limit))).collect();
        Self { weight, bias: T::zero(), node_width, edge_width }
    }

    pub fn node_width(&self) -> usize {
        self.node_width
    }

    pub fn edge_width(&self) -> Option<usize> {
        self.edge_width
    }

    pub(crate) fn src_part(&self) -> &[T] {
        &self.weight[..self.node_width]
    }

    pub(crate) fn dst_part(&self) -> &[T] {
        &self.weight[self.node_width..2 * self.node_width]
    }

    pub(crate) fn edge_part(&self) -> &[T] {
        &self.weight[2 * self.node_width..]
    }

    pub fn cast<U: Scalar>(&self) -> PoolParams<U> {
        PoolParams {
            weight: self.weight.iter().map(|w| U::lit(w.acc())).collect(),
            bias: U::lit(self.bias.acc()),
            node_width: self.node_width,
            edge_width: self.edge_width,
        }
    }
}

/// Per-edge scores of one pooling step.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeScores<T> {
    pub raw: Vec<T>,
    /// `0.5 + softmax` over the non-dropped incoming edges of the destination;
    /// exactly zero for dropped edges.
    pub normalized: Vec<T>,
    pub dropped: Vec<bool>,
}

/// How a contracted pair's features are combined before gating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Combiner {
    /// `n_src + n_dst`
    #[default]
    Sum,
    /// `a·n_src + b·n_dst + c·f_ij + d·f_ji`; needs edge features as wide as
    /// node features. A missing reverse edge contributes zero.
    Weighted { src: f64, dst: f64, edge: f64, reverse_edge: f64 },
}

/// One coarsening level.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolInfo<T> {
    /// Contracted edges as `(src, dst)`, in selection order.
    pub matching: Vec<(usize, usize)>,
    /// Canonical ids of the contracted edges, parallel to `matching`.
    pub matched_edges: Vec<usize>,
    /// Original node → pooled node.
    pub cluster_of: Vec<usize>,
    /// Gating score per original node; 1 for unmatched nodes.
    pub node_score: Vec<T>,
    pub pooled_num_nodes: usize,
    pub combiner: Combiner,
}

impl<T: Scalar> PoolInfo<T> {
    /// A level that contracts nothing.
    pub fn identity(num_nodes: usize) -> Self {
        Self {
            matching: Vec::new(),
            matched_edges: Vec::new(),
            cluster_of: (0..num_nodes).collect(),
            node_score: vec![T::one(); num_nodes],
            pooled_num_nodes: num_nodes,
            combiner: Combiner::Sum,
        }
    }

    /// Original nodes grouped by pooled node.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.pooled_num_nodes];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Maps a node → group assignment (e.g. graph ids) onto pooled nodes.
    pub fn map_assignment(&self, assignment: &[usize]) -> Vec<usize> {
        let mut out = vec![0; self.pooled_num_nodes];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c] = assignment[i];
        }
        out
    }
}

fn check_widths<T: Scalar>(graph: &Graph<T>, params: &PoolParams<T>) -> Result<()> {
    if graph.feature_width() != params.node_width {
        return Err(Error::dims(format!(
            "graph feature width {} but score params expect {}",
            graph.feature_width(),
            params.node_width
        )));
    }
    if graph.edge_feature_width() != params.edge_width {
        return Err(Error::dims(format!(
            "graph edge feature width {:?} but score params expect {:?}",
            graph.edge_feature_width(),
            params.edge_width
        )));
    }
    Ok(())
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.acc() * y.acc()).sum()
}

/// Raw linear score of every edge, in canonical edge order.
pub fn raw_scores<T: Scalar>(graph: &Graph<T>, params: &PoolParams<T>) -> Result<Vec<T>> {
    check_widths(graph, params)?;
    let x = graph.node_features();
    let n = graph.num_nodes();
    let as_src: Vec<f64> = (0..n).map(|i| dot(params.src_part(), x.row(i))).collect();
    let as_dst: Vec<f64> = (0..n).map(|i| dot(params.dst_part(), x.row(i))).collect();
    let bias = params.bias.acc();
    Ok(graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(s, d))| {
            let mut r = as_src[s] + as_dst[d] + bias;
            if let Some(ef) = graph.edge_features() {
                r += dot(params.edge_part(), ef.row(e));
            }
            T::lit(r)
        })
        .collect())
}

/// `0.5 + softmax` of raw scores over the non-dropped edges entering each node.
pub fn normalize_scores<T: Scalar>(graph: &Graph<T>, raw: &[T], dropped: &[bool]) -> Vec<T> {
    let mut out = vec![T::zero(); graph.num_edges()];
    for j in 0..graph.num_nodes() {
        let live = || graph.in_edges(j).iter().copied().filter(|&e| !dropped[e]);
        let Some(max) = live().map(|e| raw[e].acc()).reduce(f64::max) else {
            continue;
        };
        let denom: f64 = live().map(|e| (raw[e].acc() - max).exp()).sum();
        for e in live() {
            out[e] = T::lit(0.5 + (raw[e].acc() - max).exp() / denom);
        }
    }
    out
}

/// Marks each edge as dropped with probability `p`, independently and
/// reproducibly for a given seed.
pub fn apply_score_dropout(num_edges: usize, p: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(vec![false; num_edges]);
    }
    let mut rng = rng_from(seed);
    Ok((0..num_edges).map(|_| rng.random::<f64>() < p).collect())
}

impl<T: Scalar> EdgeScores<T> {
    pub fn compute(graph: &Graph<T>, raw: Vec<T>, dropped: Vec<bool>) -> Self {
        let normalized = normalize_scores(graph, &raw, &dropped);
        Self { raw, normalized, dropped }
    }
}

/// Greedy contraction order: non-dropped edges by descending normalized score
/// (ties by edge id); an edge is taken iff both endpoints are still free.
/// Returns edge ids in the order they were taken.
pub fn select_contractions<T: Scalar>(graph: &Graph<T>, scores: &EdgeScores<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.num_edges()).filter(|&e| !scores.dropped[e]).collect();
    order.sort_by(|&a, &b| {
        scores.normalized[b]
            .partial_cmp(&scores.normalized[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut matched = vec![false; graph.num_nodes()];
    let mut taken = Vec::with_capacity(graph.num_nodes() / 2);
    for e in order {
        let (s, d) = graph.edges()[e];
        if !matched[s] && !matched[d] {
            matched[s] = true;
            matched[d] = true;
            taken.push(e);
        }
    }
    taken
}

/// Merged feature row before gating, written into `out`.
pub(crate) fn combine_into<T: Scalar>(
    graph: &Graph<T>,
    combiner: Combiner,
    edge: usize,
    out: &mut [T],
) {
    let (s, d) = graph.edges()[edge];
    let x = graph.node_features();
    match combiner {
        Combiner::Sum => {
            for ((o, &a), &b) in out.iter_mut().zip(x.row(s)).zip(x.row(d)) {
                *o = a + b;
            }
        }
        Combiner::Weighted { src, dst, edge: we, reverse_edge } => {
            let (src, dst, we, wr) = (T::lit(src), T::lit(dst), T::lit(we), T::lit(reverse_edge));
            for ((o, &a), &b) in out.iter_mut().zip(x.row(s)).zip(x.row(d)) {
                *o = src * a + dst * b;
            }
            if let Some(ef) = graph.edge_features() {
                for (o, &f) in out.iter_mut().zip(ef.row(edge)) {
                    *o += we * f;
                }
                if let Some(rev) = graph.topology().edge_index(d, s) {
                    for (o, &f) in out.iter_mut().zip(ef.row(rev)) {
                        *o += wr * f;
                    }
                }
            }
        }
    }
}

/// Contracts the given edges.
///
/// Pooled node order: merged nodes in matching order, then unmatched nodes in
/// original order. Pooled edges are the image of the original edges with
/// self-loops removed and parallel edges merged (edge features summed).
pub fn contract<T: Scalar>(
    graph: &Graph<T>,
    matching: &[usize],
    scores: &EdgeScores<T>,
    combiner: Combiner,
) -> Result<(Graph<T>, PoolInfo<T>)> {
    let n = graph.num_nodes();
    let f = graph.feature_width();
    if let Combiner::Weighted { .. } = combiner {
        if graph.edge_feature_width().is_some_and(|g| g != f) {
            return Err(Error::dims(
                "weighted combiner needs edge features as wide as node features",
            ));
        }
    }
    const FREE: usize = usize::MAX;
    let mut cluster_of = vec![FREE; n];
    let mut node_score = vec![T::one(); n];
    let mut pairs = Vec::with_capacity(matching.len());
    for (k, &e) in matching.iter().enumerate() {
        let &(s, d) = graph.edges().get(e).ok_or_else(|| {
            Error::InvalidParams(format!("edge id {e} out of range"))
        })?;
        for v in [s, d] {
            if cluster_of[v] != FREE {
                return Err(Error::InvalidMatching(v));
            }
            cluster_of[v] = k;
        }
        let score = scores.normalized[e];
        if score <= T::zero() {
            return Err(Error::NonPositiveScore { node: d, score: score.acc() });
        }
        node_score[s] = score;
        node_score[d] = score;
        pairs.push((s, d));
    }
    let mut next = matching.len();
    for c in cluster_of.iter_mut() {
        if *c == FREE {
            *c = next;
            next += 1;
        }
    }
    let pooled_n = next;

    let x = graph.node_features();
    let mut features = Matrix::zeros(pooled_n, f);
    for (k, &e) in matching.iter().enumerate() {
        let (_, d) = graph.edges()[e];
        let row = features.row_mut(k);
        combine_into(graph, combiner, e, row);
        let s = node_score[d];
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    for i in 0..n {
        if cluster_of[i] >= matching.len() {
            features.row_mut(cluster_of[i]).copy_from_slice(x.row(i));
        }
    }

    let mut mapped: Vec<((usize, usize), usize)> = graph
        .edges()
        .iter()
        .enumerate()
        .filter_map(|(e, &(s, d))| {
            let (cs, cd) = (cluster_of[s], cluster_of[d]);
            (cs != cd).then_some(((cs, cd), e))
        })
        .collect();
    mapped.sort_unstable();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(mapped.len());
    let mut edge_rows: Vec<Vec<usize>> = Vec::new();
    for &(pair, e) in &mapped {
        if edges.last() == Some(&pair) {
            edge_rows.last_mut().unwrap().push(e);
        } else {
            edges.push(pair);
            edge_rows.push(vec![e]);
        }
    }
    let edge_features = graph.edge_features().map(|ef| {
        let mut out = Matrix::zeros(edges.len(), ef.cols());
        for (k, rows) in edge_rows.iter().enumerate() {
            let o = out.row_mut(k);
            for &e in rows {
                for (ov, &v) in o.iter_mut().zip(ef.row(e)) {
                    *ov += v;
                }
            }
        }
        out
    });
    let pooled = Graph::from_canonical(pooled_n, edges, features, edge_features);
    let info = PoolInfo {
        matching: pairs,
        matched_edges: matching.to_vec(),
        cluster_of,
        node_score,
        pooled_num_nodes: pooled_n,
        combiner,
    };
    Ok((pooled, info))
}

/// Runtime switches for one pooling step.
#[derive(Clone, Copy, Debug, Default)]
pub struct ForwardOptions {
    pub training: bool,
    /// Edge-score dropout probability, only applied when `training`.
    pub dropout_p: f64,
    pub seed: u64,
    pub combiner: Combiner,
}

#[derive(Clone, Debug)]
pub struct PoolOutput<T> {
    pub pooled: Graph<T>,
    pub info: PoolInfo<T>,
    pub scores: EdgeScores<T>,
}

/// Full pooling step: score, (drop), normalize, select, contract.
///
/// Dropped edges are left out of both the softmax denominator and selection.
pub fn edgepool_forward<T: Scalar>(
    graph: &Graph<T>,
    params: &PoolParams<T>,
    opts: &ForwardOptions,
) -> Result<PoolOutput<T>> {
    let raw = raw_scores(graph, params)?;
    let dropped = if opts.training {
        apply_score_dropout(graph.num_edges(), opts.dropout_p, opts.seed)?
    } else {
        vec![false; graph.num_edges()]
    };
    let scores = EdgeScores::compute(graph, raw, dropped);
    let matching = select_contractions(graph, &scores);
    let (pooled, info) = contract(graph, &matching, &scores, opts.combiner)?;
    Ok(PoolOutput { pooled, info, scores })
}

#[cfg(test)]
mod tests;
