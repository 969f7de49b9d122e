//! Graph classifier: three conv blocks, each followed by edge pooling, with a
//! global mean readout after every block; the three readouts are concatenated
//! and fed to two dense layers.

use super::block::{BlockCache, ConvBlock, PoolLayer};
use super::layers::{
    dense, dense_backward, dropout_mask, hadamard, mean_pool_by, mean_pool_by_backward, relu,
    relu_backward,
};
use super::params::{ParamId, ParamStore};
use super::{ModelConfig, Pass, Pooling};
use crate::error::Result;
use crate::graph::{BatchedGraph, Graph};
use crate::matrix::Matrix;
use crate::pool::{ForwardOptions, PoolOutput};
use crate::rng::{derive_seed, rng_for, Rng};
use crate::scalar::Scalar;

pub const NUM_BLOCKS: usize = 3;

#[derive(Clone, Debug)]
pub struct GraphClassifier {
    pub config: ModelConfig,
    blocks: Vec<ConvBlock>,
    pools: Vec<PoolLayer>,
    fc1: (ParamId, ParamId),
    fc2: (ParamId, ParamId),
}

struct Level<T> {
    /// Graph the block ran on.
    graph: Graph<T>,
    block: BlockCache<T>,
    /// Block output attached to `graph`, the input of pooling.
    pooled_from: Option<(Graph<T>, PoolOutput<T>)>,
    /// Group of every node after this level.
    assignment: Vec<usize>,
}

pub struct GraphForward<T> {
    pub logits: Matrix<T>,
    /// Nodes entering each block, then the count after the last level.
    pub node_counts: Vec<usize>,
    levels: Vec<Level<T>>,
    num_graphs: usize,
    readout_widths: Vec<usize>,
    head_in: Matrix<T>,
    hidden: Matrix<T>,
    mask: Matrix<T>,
    dropped_hidden: Matrix<T>,
}

impl<T> GraphForward<T> {
    /// Contracted edge ids of every pooling level, in selection order.
    pub fn matchings(&self) -> Vec<Vec<usize>> {
        self.levels
            .iter()
            .filter_map(|l| l.pooled_from.as_ref().map(|(_, out)| out.info.matched_edges.clone()))
            .collect()
    }
}

impl GraphClassifier {
    pub fn new<T: Scalar>(config: ModelConfig, store: &mut ParamStore<T>, rng: &mut Rng) -> Result<Self> {
        let c = config.channels;
        let mut blocks = Vec::new();
        let mut pools = Vec::new();
        for k in 0..NUM_BLOCKS {
            let in_w = if k == 0 { config.in_width } else { c };
            blocks.push(ConvBlock::new(store, &format!("conv{}", k + 1), in_w, c, config.conv, rng)?);
            if config.pooling == Pooling::Edgepool {
                pools.push(PoolLayer::new(store, &format!("pool{}", k + 1), c, rng)?);
            }
        }
        let fc1 = (
            store.add_glorot("fc1.weight", NUM_BLOCKS * c, c, rng)?,
            store.add("fc1.bias", Matrix::zeros(1, c))?,
        );
        let fc2 = (
            store.add_glorot("fc2.weight", c, config.num_classes, rng)?,
            store.add("fc2.bias", Matrix::zeros(1, config.num_classes))?,
        );
        Ok(Self { config, blocks, pools, fc1, fc2 })
    }

    pub fn forward<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        batch: &BatchedGraph<T>,
        pass: Pass,
    ) -> Result<GraphForward<T>> {
        let mut graph = batch.graph.clone();
        let mut x = batch.graph.node_features().clone();
        let mut assignment = batch.graph_id.clone();
        let mut levels = Vec::with_capacity(NUM_BLOCKS);
        let mut readouts = Vec::with_capacity(NUM_BLOCKS);
        let mut node_counts = vec![graph.num_nodes()];
        for (k, block) in self.blocks.iter().enumerate() {
            let (a, cache) = block.forward(store, &graph, &x)?;
            let level_graph = graph.clone();
            let (next_graph, next_x, pooled_from) = match self.pools.get(k) {
                Some(pool) => {
                    let attached = graph.with_node_features(a)?;
                    let opts = ForwardOptions {
                        training: pass.training,
                        dropout_p: self.config.edge_score_dropout_p,
                        seed: derive_seed(pass.seed, &format!("pool{}", k + 1)),
                        ..Default::default()
                    };
                    let out = pool.forward(store, &attached, &opts)?;
                    assignment = out.info.map_assignment(&assignment);
                    let feats = out.pooled.node_features().clone();
                    (out.pooled.clone(), feats, Some((attached, out)))
                }
                None => (graph.clone(), a, None),
            };
            readouts.push(mean_pool_by(&assignment, batch.num_graphs, &next_x)?);
            levels.push(Level {
                graph: level_graph,
                block: cache,
                pooled_from,
                assignment: assignment.clone(),
            });
            graph = next_graph;
            x = next_x;
            node_counts.push(graph.num_nodes());
        }
        let refs: Vec<&Matrix<T>> = readouts.iter().collect();
        let head_in = Matrix::hcat(&refs)?;
        let hidden = relu(&dense(&head_in, store.value(self.fc1.0), store.value(self.fc1.1))?);
        let mask = if pass.training {
            dropout_mask(hidden.rows(), hidden.cols(), self.config.dropout_p, &mut rng_for(pass.seed, "fc_dropout"))?
        } else {
            Matrix::filled(hidden.rows(), hidden.cols(), T::one())
        };
        let dropped_hidden = hadamard(&hidden, &mask);
        let logits = dense(&dropped_hidden, store.value(self.fc2.0), store.value(self.fc2.1))?;
        Ok(GraphForward {
            logits,
            node_counts,
            levels,
            num_graphs: batch.num_graphs,
            readout_widths: readouts.iter().map(Matrix::cols).collect(),
            head_in,
            hidden,
            mask,
            dropped_hidden,
        })
    }

    /// Accumulates the gradient of the loss into `store` given `d loss / d logits`.
    pub fn backward<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        fwd: &GraphForward<T>,
        grad_logits: &Matrix<T>,
    ) -> Result<()> {
        let g2 = dense_backward(&fwd.dropped_hidden, store.value(self.fc2.0), grad_logits)?;
        store.accumulate(self.fc2.0, &g2.w)?;
        store.accumulate(self.fc2.1, &g2.b)?;
        let g_hidden = relu_backward(&fwd.hidden, &hadamard(&g2.x, &fwd.mask));
        let g1 = dense_backward(&fwd.head_in, store.value(self.fc1.0), &g_hidden)?;
        store.accumulate(self.fc1.0, &g1.w)?;
        store.accumulate(self.fc1.1, &g1.b)?;
        let g_readouts = g1.x.hsplit(&fwd.readout_widths)?;

        // gradient w.r.t. the features entering block k + 1
        let mut g_next: Option<Matrix<T>> = None;
        for k in (0..NUM_BLOCKS).rev() {
            let level = &fwd.levels[k];
            let mut g_x = mean_pool_by_backward(&level.assignment, fwd.num_graphs, &g_readouts[k]);
            if let Some(g) = g_next.take() {
                g_x.add_assign(&g)?;
            }
            let g_a = match (&level.pooled_from, self.pools.get(k)) {
                (Some((attached, out)), Some(pool)) => pool.backward(store, attached, out, &g_x, None)?,
                _ => g_x,
            };
            g_next = Some(self.blocks[k].backward(store, &level.graph, &level.block, &g_a)?);
        }
        Ok(())
    }
}
