use super::{combine_into, Combiner, EdgeScores, PoolInfo, PoolParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct PoolGrads<T> {
    pub node_features: Matrix<T>,
    pub weight: Vec<T>,
    pub bias: T,
}

/// Reverse pass of one pooling step with the matching held fixed.
///
/// `upstream` is the gradient w.r.t. the pooled node features. `score_grad`
/// optionally carries an extra gradient w.r.t. `info.node_score` (per
/// original node), as produced by unpooling, which divides by the score.
pub fn edgepool_backward<T: Scalar>(
    graph: &Graph<T>,
    params: &PoolParams<T>,
    info: &PoolInfo<T>,
    scores: &EdgeScores<T>,
    upstream: &Matrix<T>,
    score_grad: Option<&[T]>,
) -> Result<PoolGrads<T>> {
    let n = graph.num_nodes();
    let f = graph.feature_width();
    let m = graph.num_edges();
    if info.cluster_of.len() != n || scores.normalized.len() != m || scores.dropped.len() != m {
        return Err(Error::dims("pooling artifacts do not belong to this graph"));
    }
    if upstream.shape() != (info.pooled_num_nodes, f) {
        return Err(Error::dims(format!(
            "upstream gradient {:?}, expected ({}, {f})",
            upstream.shape(),
            info.pooled_num_nodes
        )));
    }
    if score_grad.is_some_and(|g| g.len() != n) {
        return Err(Error::dims("score gradient length differs from node count"));
    }

    let mut gx = Matrix::zeros(n, f);
    // unmatched nodes are copies
    for i in 0..n {
        if info.cluster_of[i] >= info.matched_edges.len() {
            gx.row_mut(i).copy_from_slice(upstream.row(info.cluster_of[i]));
        }
    }

    let (ws, wd) = match info.combiner {
        Combiner::Sum => (T::one(), T::one()),
        Combiner::Weighted { src, dst, .. } => (T::lit(src), T::lit(dst)),
    };
    let mut merged = vec![T::zero(); f];
    // (edge id, d loss / d normalized score)
    let mut score_adj: Vec<(usize, f64)> = Vec::with_capacity(info.matched_edges.len());
    for (k, &e) in info.matched_edges.iter().enumerate() {
        let (s, d) = graph.edges()[e];
        let sc = scores.normalized[e];
        let g = upstream.row(k);
        for (t, &gv) in g.iter().enumerate() {
            gx[(s, t)] += sc * ws * gv;
            gx[(d, t)] += sc * wd * gv;
        }
        combine_into(graph, info.combiner, e, &mut merged);
        let mut ds: f64 = merged.iter().zip(g).map(|(a, b)| a.acc() * b.acc()).sum();
        if let Some(sg) = score_grad {
            ds += sg[s].acc() + sg[d].acc();
        }
        score_adj.push((e, ds));
    }

    // Softmax Jacobian. A matching has at most one contracted edge per
    // destination, so Σ_k p_k ds_k collapses to that edge's term.
    let mut raw_adj: Vec<(usize, f64)> = Vec::new();
    for &(e, ds) in &score_adj {
        if ds == 0.0 {
            continue;
        }
        let (_, j) = graph.edges()[e];
        let pe = scores.normalized[e].acc() - 0.5;
        let weighted = pe * ds;
        for &k in graph.in_edges(j) {
            if scores.dropped[k] {
                continue;
            }
            let pk = scores.normalized[k].acc() - 0.5;
            let own = if k == e { ds } else { 0.0 };
            raw_adj.push((k, pk * (own - weighted)));
        }
    }

    let mut gw = vec![0.0f64; params.weight.len()];
    let mut gb = 0.0f64;
    let x = graph.node_features();
    for &(e, dr) in &raw_adj {
        let (s, d) = graph.edges()[e];
        gb += dr;
        for t in 0..f {
            gw[t] += dr * x[(s, t)].acc();
            gw[f + t] += dr * x[(d, t)].acc();
            gx[(s, t)] += T::lit(dr * params.src_part()[t].acc());
            gx[(d, t)] += T::lit(dr * params.dst_part()[t].acc());
        }
        if let Some(ef) = graph.edge_features() {
            for (t, &v) in ef.row(e).iter().enumerate() {
                gw[2 * f + t] += dr * v.acc();
            }
        }
    }

    Ok(PoolGrads {
        node_features: gx,
        weight: gw.into_iter().map(T::lit).collect(),
        bias: T::lit(gb),
    })
}
