//! Random instances and independent invariant checkers for pooling.
//! Shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use edgepool::data::{cycle_graph, erdos_renyi, path_graph, star_graph};
use edgepool::rng::{rng_from, Rng};
use edgepool::{
    edgepool_forward, EdgeScores, ForwardOptions, Graph, Graph64, Matrix64, PoolInfo, PoolOutput,
    PoolParams, PoolParams64,
};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    ErdosRenyi,
    Cycle,
    Star,
    Path,
}

pub const KINDS: [Kind; 4] = [Kind::ErdosRenyi, Kind::Cycle, Kind::Star, Kind::Path];

pub fn random_graph(kind: Kind, n: usize, width: usize, rng: &mut Rng) -> Graph64 {
    let n = n.max(2);
    match kind {
        // mean degree around 4, capped for tiny graphs
        Kind::ErdosRenyi => erdos_renyi(n, (4.0 / n as f64).min(0.6), width, rng),
        Kind::Cycle => cycle_graph(n.max(3), width, rng),
        Kind::Star => star_graph(n - 1, width, rng),
        Kind::Path => path_graph(n, width, rng),
    }
    .unwrap()
}

pub struct Instance {
    pub graph: Graph64,
    pub params: PoolParams64,
    pub opts: ForwardOptions,
}

impl Instance {
    pub fn new(kind: Kind, n: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let width = rng.random_range(1..5);
        let graph = random_graph(kind, n, width, &mut rng);
        let params = PoolParams::random(width, None, &mut rng);
        // a third of the instances run in training mode with score dropout
        let training = rng.random_range(0..3) == 0;
        let opts = ForwardOptions { training, dropout_p: 0.2, seed, ..Default::default() };
        Self { graph, params, opts }
    }

    pub fn forward(&self) -> PoolOutput<f64> {
        edgepool_forward(&self.graph, &self.params, &self.opts).unwrap()
    }
}

/// Σ over live incoming edges of (s − 0.5) is 1 wherever there is one;
/// dropped edges score 0; live scores lie in (0.5, 1.5].
pub fn check_scores(graph: &Graph64, scores: &EdgeScores<f64>) -> Result<(), String> {
    let n = graph.num_nodes();
    let mut sum = vec![0.0; n];
    let mut live = vec![0usize; n];
    for (e, &(_, d)) in graph.edges().iter().enumerate() {
        let s = scores.normalized[e];
        if scores.dropped[e] {
            if s != 0.0 {
                return Err(format!("dropped edge {e} has score {s}"));
            }
            continue;
        }
        if !(s > 0.5 && s <= 1.5) {
            return Err(format!("edge {e} score {s} outside (0.5, 1.5]"));
        }
        sum[d] += s - 0.5;
        live[d] += 1;
    }
    for j in 0..n {
        if live[j] > 0 && (sum[j] - 1.0).abs() > 1e-6 {
            return Err(format!("node {j}: incoming softmax sums to {}", sum[j]));
        }
    }
    Ok(())
}

/// Matching is a valid, maximal matching over live edges and the pooled
/// graph has `n − |M|` nodes.
pub fn check_matching(graph: &Graph64, scores: &EdgeScores<f64>, info: &PoolInfo<f64>, pooled: &Graph64) -> Result<(), String> {
    let n = graph.num_nodes();
    let mut used = vec![false; n];
    for &e in &info.matched_edges {
        if scores.dropped[e] {
            return Err(format!("dropped edge {e} was contracted"));
        }
        let (s, d) = graph.edges()[e];
        if used[s] || used[d] {
            return Err(format!("edge {e} reuses a matched node"));
        }
        used[s] = true;
        used[d] = true;
    }
    for (e, &(s, d)) in graph.edges().iter().enumerate() {
        if !scores.dropped[e] && !used[s] && !used[d] {
            return Err(format!("live edge {e} joins two unmatched nodes"));
        }
    }
    let expected = n - info.matched_edges.len();
    if pooled.num_nodes() != expected || info.pooled_num_nodes != expected {
        return Err(format!("pooled {} nodes, expected {expected}", pooled.num_nodes()));
    }
    Ok(())
}

/// Perturbing node `u` leaves every score that cannot read `u` bit-identical:
/// the score of an edge into `j` reads only `j` and the in-neighbors of `j`.
pub fn check_locality(inst: &Instance, rng: &mut Rng) -> Result<(), String> {
    let g = &inst.graph;
    let n = g.num_nodes();
    let u = rng.random_range(0..n);
    let mut x = g.node_features().clone();
    for v in x.row_mut(u) {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    let perturbed = g.with_node_features(x).unwrap();
    let before = inst.forward().scores;
    let after = edgepool_forward(&perturbed, &inst.params, &inst.opts).unwrap().scores;
    for (e, &(_, j)) in g.edges().iter().enumerate() {
        let reads_u = j == u || g.in_edges(j).iter().any(|&k| g.edges()[k].0 == u);
        if !reads_u && before.normalized[e].to_bits() != after.normalized[e].to_bits() {
            return Err(format!("edge {e} into {j} changed after perturbing node {u}"));
        }
    }
    Ok(())
}

/// Relabels node `i` as `perm[i]`.
pub fn permute(graph: &Graph64, perm: &[usize]) -> Graph64 {
    let n = graph.num_nodes();
    let x = graph.node_features();
    let mut y = Matrix64::zeros(n, x.cols());
    for i in 0..n {
        y.row_mut(perm[i]).copy_from_slice(x.row(i));
    }
    let edges: Vec<_> = graph.edges().iter().map(|&(s, d)| (perm[s], perm[d])).collect();
    Graph::build(n, &edges, y, None).unwrap()
}

fn has_ties(v: &[f64]) -> bool {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9)
}

/// Pooling commutes with node relabeling on tie-free inference instances.
/// Returns `Ok(false)` when the instance has tied scores and was skipped.
pub fn check_permutation(graph: &Graph64, params: &PoolParams64, rng: &mut Rng) -> Result<bool, String> {
    let opts = ForwardOptions::default();
    let a = edgepool_forward(graph, params, &opts).unwrap();
    if has_ties(&a.scores.normalized) {
        return Ok(false);
    }
    let n = graph.num_nodes();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let pg = permute(graph, &perm);
    let b = edgepool_forward(&pg, params, &opts).unwrap();
    if a.info.pooled_num_nodes != b.info.pooled_num_nodes {
        return Err("pooled sizes differ".into());
    }
    // clusters as sorted member lists in the permuted labeling
    let clusters = |info: &PoolInfo<f64>, relabel: &dyn Fn(usize) -> usize| {
        let mut m: Vec<Vec<usize>> = info
            .members()
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(relabel).collect();
                c.sort_unstable();
                c
            })
            .collect();
        m.sort();
        m
    };
    if clusters(&a.info, &|i| perm[i]) != clusters(&b.info, &|i| i) {
        return Err("clusters differ under relabeling".into());
    }
    let (xa, xb) = (a.pooled.node_features(), b.pooled.node_features());
    for i in 0..n {
        let (ca, cb) = (a.info.cluster_of[i], b.info.cluster_of[perm[i]]);
        for (u, v) in xa.row(ca).iter().zip(xb.row(cb)) {
            if (u - v).abs() > 1e-9 * (1.0 + u.abs()) {
                return Err(format!("pooled features differ at node {i}"));
            }
        }
        if (a.info.node_score[i] - b.info.node_score[perm[i]]).abs() > 1e-12 {
            return Err(format!("gating score differs at node {i}"));
        }
    }
    Ok(true)
}

/// Repeated full scans for the best free live edge; lowest edge id on ties.
pub fn naive_select(graph: &Graph64, scores: &EdgeScores<f64>) -> Vec<usize> {
    let mut matched = vec![false; graph.num_nodes()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for (e, &(s, d)) in graph.edges().iter().enumerate() {
            if scores.dropped[e] || matched[s] || matched[d] {
                continue;
            }
            if best.is_none_or(|b| scores.normalized[e] > scores.normalized[b]) {
                best = Some(e);
            }
        }
        let Some(e) = best else { break };
        let (s, d) = graph.edges()[e];
        matched[s] = true;
        matched[d] = true;
        out.push(e);
    }
    out
}

/// Unpooling contracted features gives `n_i + n_j` on both merged endpoints
/// and the input features on unmatched nodes.
pub fn check_roundtrip(graph: &Graph64, out: &PoolOutput<f64>, unpooled: &Matrix64, tol: f64) -> Result<(), String> {
    let x = graph.node_features();
    let mut partner: Vec<Option<usize>> = vec![None; graph.num_nodes()];
    for &(a, b) in &out.info.matching {
        partner[a] = Some(b);
        partner[b] = Some(a);
    }
    for i in 0..graph.num_nodes() {
        for t in 0..x.cols() {
            let want = match partner[i] {
                Some(p) => x[(i, t)] + x[(p, t)],
                None => x[(i, t)],
            };
            if (unpooled[(i, t)] - want).abs() > tol {
                return Err(format!("node {i} col {t}: {} vs {want}", unpooled[(i, t)]));
            }
        }
    }
    Ok(())
}
