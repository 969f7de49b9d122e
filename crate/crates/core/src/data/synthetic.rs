//! Seeded synthetic graphs and tasks.

use std::collections::HashSet;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{node_split, GraphDataset, NodeTask};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for, rng_from, Rng};
use crate::scalar::Scalar;

fn gaussian<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

fn undirected<T: Scalar>(n: usize, pairs: &[(usize, usize)], feats: Matrix<T>) -> Result<Graph<T>> {
    let edges: Vec<(usize, usize)> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    Graph::build(n, &edges, feats, None)
}

/// G(n, p) with standard-normal node features, both edge directions present.
pub fn erdos_renyi<T: Scalar>(n: usize, p: f64, width: usize, rng: &mut Rng) -> Result<Graph<T>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("edge probability {p}")));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    undirected(n, &pairs, gaussian(n, width, rng))
}

/// G(n, m): `m` distinct undirected edges drawn uniformly; linear time in `m`.
pub fn random_gnm<T: Scalar>(n: usize, m: usize, width: usize, rng: &mut Rng) -> Result<Graph<T>> {
    if n < 2 || m > n * (n - 1) / 2 {
        return Err(Error::InvalidParams(format!("{m} edges on {n} nodes")));
    }
    let mut seen = HashSet::with_capacity(m);
    let mut pairs = Vec::with_capacity(m);
    while pairs.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push(key);
        }
    }
    undirected(n, &pairs, gaussian(n, width, rng))
}

pub fn cycle_graph<T: Scalar>(n: usize, width: usize, rng: &mut Rng) -> Result<Graph<T>> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("cycle needs 3 nodes, got {n}")));
    }
    let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    undirected(n, &pairs, gaussian(n, width, rng))
}

pub fn path_graph<T: Scalar>(n: usize, width: usize, rng: &mut Rng) -> Result<Graph<T>> {
    let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    undirected(n, &pairs, gaussian(n, width, rng))
}

/// Node 0 joined to `leaves` leaf nodes.
pub fn star_graph<T: Scalar>(leaves: usize, width: usize, rng: &mut Rng) -> Result<Graph<T>> {
    let pairs: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    undirected(leaves + 1, &pairs, gaussian(leaves + 1, width, rng))
}

/// Two-class set of chain-like graphs with short-range contacts, loosely
/// shaped like protein contact graphs. Nodes carry a one-hot of three
/// residue types; class 1 has a higher share of type 2 and denser contacts.
pub fn path_proteinlike<T: Scalar>(num_graphs: usize, seed: u64) -> Result<GraphDataset<T>> {
    let mut rng = rng_for(seed, "path_proteinlike");
    let mut graphs = Vec::with_capacity(num_graphs);
    let mut labels = Vec::with_capacity(num_graphs);
    for _ in 0..num_graphs {
        let label = rng.random_range(0..2usize);
        let n = rng.random_range(12..40usize);
        let (type2, contact) = if label == 1 { (0.45, 0.30) } else { (0.25, 0.18) };
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        for i in 0..n {
            for j in i + 2..(i + 5).min(n) {
                if rng.random::<f64>() < contact {
                    pairs.push((i, j));
                }
            }
        }
        let mut feats = Matrix::zeros(n, 3);
        for i in 0..n {
            let u: f64 = rng.random();
            let t = if u < type2 { 2 } else if u < type2 + (1.0 - type2) / 2.0 { 1 } else { 0 };
            feats[(i, t)] = T::one();
        }
        graphs.push(undirected(n, &pairs, feats)?);
        labels.push(label);
    }
    GraphDataset::new("path_proteinlike", graphs, labels, 2)
}

/// Stochastic block model node task. Node labels are the blocks; features are
/// a per-block centroid plus `noise`-scaled Gaussian noise. The split draws
/// `train_per_class` / `test_per_class` nodes per block.
#[allow(clippy::too_many_arguments)]
pub fn sbm_node_task<T: Scalar>(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    width: usize,
    noise: f64,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<NodeTask<T>> {
    if blocks == 0 || !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || noise < 0.0 {
        return Err(Error::InvalidParams("sbm: need blocks ≥ 1, probabilities in [0,1], noise ≥ 0".into()));
    }
    let mut rng = rng_for(seed, "sbm_structure");
    let n = blocks * block_size;
    let block_of = |i: usize| i / block_size;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block_of(i) == block_of(j) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    let mut frng = rng_for(seed, "sbm_features");
    let centroids: Matrix<f64> = gaussian(blocks, width, &mut frng);
    let feats = Matrix::from_fn(n, width, |i, t| {
        let z: f64 = frng.sample(StandardNormal);
        T::lit(centroids[(block_of(i), t)] + noise * z)
    });
    let graph = undirected(n, &pairs, feats)?;
    let labels = (0..n).map(block_of).collect();
    node_split(graph, labels, train_per_class, test_per_class, derive_seed(seed, "sbm_split"))
}

/// Declarative generator request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticSpec {
    ErdosRenyi { n: usize, p: f64, width: usize },
    SbmNodeTask {
        blocks: usize,
        block_size: usize,
        p_in: f64,
        p_out: f64,
        width: usize,
        noise: f64,
    },
    PathProteinlike { num_graphs: usize },
    Cycle { n: usize, width: usize },
    Star { leaves: usize, width: usize },
}

#[derive(Clone, Debug)]
pub enum Synthetic<T> {
    Graph(Graph<T>),
    Dataset(GraphDataset<T>),
    Task(NodeTask<T>),
}

pub fn gen_synthetic<T: Scalar>(spec: &SyntheticSpec, seed: u64) -> Result<Synthetic<T>> {
    let mut rng = rng_from(seed);
    Ok(match *spec {
        SyntheticSpec::ErdosRenyi { n, p, width } => Synthetic::Graph(erdos_renyi(n, p, width, &mut rng)?),
        SyntheticSpec::SbmNodeTask { blocks, block_size, p_in, p_out, width, noise } => Synthetic::Task(
            sbm_node_task(blocks, block_size, p_in, p_out, width, noise, 20, 30, seed)?,
        ),
        SyntheticSpec::PathProteinlike { num_graphs } => Synthetic::Dataset(path_proteinlike(num_graphs, seed)?),
        SyntheticSpec::Cycle { n, width } => Synthetic::Graph(cycle_graph(n, width, &mut rng)?),
        SyntheticSpec::Star { leaves, width } => Synthetic::Graph(star_graph(leaves, width, &mut rng)?),
    })
}
