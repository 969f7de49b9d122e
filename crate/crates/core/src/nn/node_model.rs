//! Node classifier: seven conv blocks, pooling after blocks 2 and 4,
//! unpooling after blocks 5 and 7. Each unpooled activation is concatenated
//! with the activation taken just before the matching pooling step, and a
//! two-layer head classifies every node.

use super::block::{BlockCache, ConvBlock, PoolLayer};
use super::layers::{dense, dense_backward, dropout_mask, hadamard, relu, relu_backward};
use super::params::{ParamId, ParamStore};
use super::{ModelConfig, Pass, Pooling};
use crate::error::Result;
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::pool::{ForwardOptions, PoolOutput};
use crate::rng::{derive_seed, rng_for, Rng};
use crate::scalar::Scalar;
use crate::unpool::{unpool_backward, unpool_once, unpool_score_grad};

pub const NUM_CONVS: usize = 7;

#[derive(Clone, Debug)]
pub struct NodeClassifier {
    pub config: ModelConfig,
    convs: Vec<ConvBlock>,
    pools: Vec<PoolLayer>,
    fc1: (ParamId, ParamId),
    fc2: (ParamId, ParamId),
}

struct PoolStep<T> {
    attached: Graph<T>,
    out: PoolOutput<T>,
}

pub struct NodeForward<T> {
    pub logits: Matrix<T>,
    /// Input of the classification head: unpooled features ‖ first shortcut.
    pub head_input: Matrix<T>,
    /// Node counts at the three resolutions.
    pub node_counts: [usize; 3],
    graphs: [Graph<T>; 3],
    caches: Vec<BlockCache<T>>,
    pools: [Option<PoolStep<T>>; 2],
    /// Outputs of blocks 5 and 7 (before unpooling).
    x5: Matrix<T>,
    x7: Matrix<T>,
    hidden: Matrix<T>,
    mask: Matrix<T>,
    dropped_hidden: Matrix<T>,
}

impl<T> NodeForward<T> {
    /// Contracted edge ids of both pooling levels, empty without pooling.
    pub fn matchings(&self) -> Vec<Vec<usize>> {
        self.pools.iter().flatten().map(|s| s.out.info.matched_edges.clone()).collect()
    }
}

impl NodeClassifier {
    pub fn new<T: Scalar>(config: ModelConfig, store: &mut ParamStore<T>, rng: &mut Rng) -> Result<Self> {
        let c = config.channels;
        let mut convs = Vec::with_capacity(NUM_CONVS);
        for k in 0..NUM_CONVS {
            let in_w = match k {
                0 => config.in_width,
                5 => 2 * c,
                _ => c,
            };
            convs.push(ConvBlock::new(store, &format!("conv{}", k + 1), in_w, c, config.conv, rng)?);
        }
        let mut pools = Vec::new();
        if config.pooling == Pooling::Edgepool {
            for k in 0..2 {
                pools.push(PoolLayer::new(store, &format!("pool{}", k + 1), c, rng)?);
            }
        }
        let fc1 = (
            store.add_glorot("fc1.weight", 2 * c, c, rng)?,
            store.add("fc1.bias", Matrix::zeros(1, c))?,
        );
        let fc2 = (
            store.add_glorot("fc2.weight", c, config.num_classes, rng)?,
            store.add("fc2.bias", Matrix::zeros(1, config.num_classes))?,
        );
        Ok(Self { config, convs, pools, fc1, fc2 })
    }

    fn pool<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        k: usize,
        graph: &Graph<T>,
        x: Matrix<T>,
        pass: Pass,
    ) -> Result<(Graph<T>, Matrix<T>, Option<PoolStep<T>>)> {
        let Some(layer) = self.pools.get(k) else {
            return Ok((graph.clone(), x, None));
        };
        let attached = graph.with_node_features(x)?;
        let opts = ForwardOptions {
            training: pass.training,
            dropout_p: self.config.edge_score_dropout_p,
            seed: derive_seed(pass.seed, &format!("pool{}", k + 1)),
            ..Default::default()
        };
        let out = layer.forward(store, &attached, &opts)?;
        let pooled = out.pooled.clone();
        let feats = pooled.node_features().clone();
        Ok((pooled, feats, Some(PoolStep { attached, out })))
    }

    pub fn forward<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        graph: &Graph<T>,
        pass: Pass,
    ) -> Result<NodeForward<T>> {
        let mut caches = Vec::with_capacity(NUM_CONVS);
        let mut run = |k: usize, g: &Graph<T>, x: &Matrix<T>| -> Result<Matrix<T>> {
            let (y, cache) = self.convs[k].forward(store, g, x)?;
            caches.push(cache);
            Ok(y)
        };
        let g0 = graph.clone();
        let x1 = run(0, &g0, graph.node_features())?;
        let x2 = run(1, &g0, &x1)?;
        let (g1, p1, step1) = self.pool(store, 0, &g0, x2.clone(), pass)?;
        let x3 = run(2, &g1, &p1)?;
        let x4 = run(3, &g1, &x3)?;
        let (g2, p2, step2) = self.pool(store, 1, &g1, x4.clone(), pass)?;
        let x5 = run(4, &g2, &p2)?;
        let u2 = match &step2 {
            Some(s) => unpool_once(&x5, &s.out.info)?,
            None => x5.clone(),
        };
        let c2 = Matrix::hcat(&[&u2, &x4])?;
        let x6 = run(5, &g1, &c2)?;
        let x7 = run(6, &g1, &x6)?;
        let u1 = match &step1 {
            Some(s) => unpool_once(&x7, &s.out.info)?,
            None => x7.clone(),
        };
        let head_input = Matrix::hcat(&[&u1, &x2])?;
        let hidden = relu(&dense(&head_input, store.value(self.fc1.0), store.value(self.fc1.1))?);
        let mask = if pass.training {
            dropout_mask(hidden.rows(), hidden.cols(), self.config.dropout_p, &mut rng_for(pass.seed, "fc_dropout"))?
        } else {
            Matrix::filled(hidden.rows(), hidden.cols(), T::one())
        };
        let dropped_hidden = hadamard(&hidden, &mask);
        let logits = dense(&dropped_hidden, store.value(self.fc2.0), store.value(self.fc2.1))?;
        Ok(NodeForward {
            logits,
            head_input,
            node_counts: [g0.num_nodes(), g1.num_nodes(), g2.num_nodes()],
            graphs: [g0, g1, g2],
            caches,
            pools: [step1, step2],
            x5,
            x7,
            hidden,
            mask,
            dropped_hidden,
        })
    }

    pub fn backward<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        fwd: &NodeForward<T>,
        grad_logits: &Matrix<T>,
    ) -> Result<()> {
        let c = self.config.channels;
        let g2 = dense_backward(&fwd.dropped_hidden, store.value(self.fc2.0), grad_logits)?;
        store.accumulate(self.fc2.0, &g2.w)?;
        store.accumulate(self.fc2.1, &g2.b)?;
        let g_hidden = relu_backward(&fwd.hidden, &hadamard(&g2.x, &fwd.mask));
        let g1 = dense_backward(&fwd.head_input, store.value(self.fc1.0), &g_hidden)?;
        store.accumulate(self.fc1.0, &g1.w)?;
        store.accumulate(self.fc1.1, &g1.b)?;

        let [g_u1, g_x2_short]: [Matrix<T>; 2] =
            g1.x.hsplit(&[c, c])?.try_into().expect("two parts");
        let (g_x7, sg1) = unpool_grads(&fwd.x7, &g_u1, fwd.pools[0].as_ref())?;
        let [g0, gr1, gr2] = &fwd.graphs;
        let caches = &fwd.caches;
        let g_x6 = self.convs[6].backward(store, gr1, &caches[6], &g_x7)?;
        let g_c2 = self.convs[5].backward(store, gr1, &caches[5], &g_x6)?;
        let [g_u2, g_x4_short]: [Matrix<T>; 2] =
            g_c2.hsplit(&[c, c])?.try_into().expect("two parts");
        let (g_x5, sg2) = unpool_grads(&fwd.x5, &g_u2, fwd.pools[1].as_ref())?;
        let g_p2 = self.convs[4].backward(store, gr2, &caches[4], &g_x5)?;
        let mut g_x4 = self.pool_backward(store, 1, fwd.pools[1].as_ref(), &g_p2, sg2.as_deref())?;
        g_x4.add_assign(&g_x4_short)?;
        let g_x3 = self.convs[3].backward(store, gr1, &caches[3], &g_x4)?;
        let g_p1 = self.convs[2].backward(store, gr1, &caches[2], &g_x3)?;
        let mut g_x2 = self.pool_backward(store, 0, fwd.pools[0].as_ref(), &g_p1, sg1.as_deref())?;
        g_x2.add_assign(&g_x2_short)?;
        let g_x1 = self.convs[1].backward(store, g0, &caches[1], &g_x2)?;
        self.convs[0].backward(store, g0, &caches[0], &g_x1)?;
        Ok(())
    }

    fn pool_backward<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        k: usize,
        step: Option<&PoolStep<T>>,
        upstream: &Matrix<T>,
        score_grad: Option<&[T]>,
    ) -> Result<Matrix<T>> {
        match (step, self.pools.get(k)) {
            (Some(s), Some(layer)) => layer.backward(store, &s.attached, &s.out, upstream, score_grad),
            _ => Ok(upstream.clone()),
        }
    }
}

/// Gradients of unpooling w.r.t. the pooled features and the gating scores.
fn unpool_grads<T: Scalar>(
    pooled: &Matrix<T>,
    upstream: &Matrix<T>,
    step: Option<&PoolStep<T>>,
) -> Result<(Matrix<T>, Option<Vec<T>>)> {
    match step {
        Some(s) => Ok((
            unpool_backward(upstream, &s.out.info)?,
            Some(unpool_score_grad(pooled, upstream, &s.out.info)?),
        )),
        None => Ok((upstream.clone(), None)),
    }
}
