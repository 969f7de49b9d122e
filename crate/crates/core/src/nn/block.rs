use super::layers::{
    batch_norm, batch_norm_backward, mean_conv, mean_conv_backward, relu, relu_backward,
    BatchNormCache, BATCH_NORM_EPS,
};
use super::params::{ParamId, ParamStore};
use crate::error::Result;
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::pool::{edgepool_backward, edgepool_forward, ForwardOptions, PoolOutput, PoolParams};
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::ConvKind;

/// conv → batch norm → ReLU
#[derive(Clone, Debug)]
pub(crate) struct ConvBlock {
    w_self: ParamId,
    w_neigh: Option<ParamId>,
    bias: ParamId,
    gamma: ParamId,
    beta: ParamId,
}

pub(crate) struct BlockCache<T> {
    input: Matrix<T>,
    agg: Option<Matrix<T>>,
    bn: BatchNormCache<T>,
    out: Matrix<T>,
}

impl ConvBlock {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        in_width: usize,
        out_width: usize,
        kind: ConvKind,
        rng: &mut Rng,
    ) -> Result<Self> {
        let w_self = store.add_glorot(&format!("{prefix}.w_self"), in_width, out_width, rng)?;
        let w_neigh = match kind {
            ConvKind::Mean => {
                Some(store.add_glorot(&format!("{prefix}.w_neigh"), in_width, out_width, rng)?)
            }
            ConvKind::Mlp => None,
        };
        let bias = store.add(&format!("{prefix}.bias"), Matrix::zeros(1, out_width))?;
        let gamma = store.add(&format!("{prefix}.bn_gamma"), Matrix::filled(1, out_width, T::one()))?;
        let beta = store.add(&format!("{prefix}.bn_beta"), Matrix::zeros(1, out_width))?;
        Ok(Self { w_self, w_neigh, bias, gamma, beta })
    }

    pub fn forward<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        graph: &Graph<T>,
        x: &Matrix<T>,
    ) -> Result<(Matrix<T>, BlockCache<T>)> {
        let (z, agg) = mean_conv(
            graph.topology(),
            x,
            store.value(self.w_self),
            self.w_neigh.map(|id| store.value(id)),
            store.value(self.bias),
        )?;
        let (b, bn) = batch_norm(&z, store.value(self.gamma), store.value(self.beta), BATCH_NORM_EPS)?;
        let out = relu(&b);
        Ok((out.clone(), BlockCache { input: x.clone(), agg, bn, out }))
    }

    /// Accumulates parameter gradients; returns the gradient w.r.t. the block input.
    pub fn backward<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        graph: &Graph<T>,
        cache: &BlockCache<T>,
        g_out: &Matrix<T>,
    ) -> Result<Matrix<T>> {
        let g_b = relu_backward(&cache.out, g_out);
        let bn = batch_norm_backward(&cache.bn, store.value(self.gamma), &g_b);
        store.accumulate(self.gamma, &bn.gamma)?;
        store.accumulate(self.beta, &bn.beta)?;
        let conv = mean_conv_backward(
            graph.topology(),
            &cache.input,
            cache.agg.as_ref(),
            store.value(self.w_self),
            self.w_neigh.map(|id| store.value(id)),
            &bn.x,
        )?;
        store.accumulate(self.w_self, &conv.w_self)?;
        if let (Some(id), Some(g)) = (self.w_neigh, conv.w_neigh.as_ref()) {
            store.accumulate(id, g)?;
        }
        store.accumulate(self.bias, &conv.b)?;
        Ok(conv.x)
    }
}

/// Learned edge-contraction pooling layer.
#[derive(Clone, Debug)]
pub(crate) struct PoolLayer {
    weight: ParamId,
    bias: ParamId,
    width: usize,
}

impl PoolLayer {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        width: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let weight = store.add_glorot(&format!("{prefix}.score_weight"), 1, 2 * width, rng)?;
        let bias = store.add(&format!("{prefix}.score_bias"), Matrix::zeros(1, 1))?;
        Ok(Self { weight, bias, width })
    }

    fn params<T: Scalar>(&self, store: &ParamStore<T>) -> Result<PoolParams<T>> {
        PoolParams::new(
            self.width,
            None,
            store.value(self.weight).as_slice().to_vec(),
            store.value(self.bias)[(0, 0)],
        )
    }

    pub fn forward<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        graph: &Graph<T>,
        opts: &ForwardOptions,
    ) -> Result<PoolOutput<T>> {
        edgepool_forward(graph, &self.params(store)?, opts)
    }

    pub fn backward<T: Scalar>(
        &self,
        store: &mut ParamStore<T>,
        graph: &Graph<T>,
        out: &PoolOutput<T>,
        upstream: &Matrix<T>,
        score_grad: Option<&[T]>,
    ) -> Result<Matrix<T>> {
        let params = self.params(store)?;
        let g = edgepool_backward(graph, &params, &out.info, &out.scores, upstream, score_grad)?;
        store.accumulate(self.weight, &Matrix::from_vec(1, g.weight.len(), g.weight)?)?;
        store.accumulate(self.bias, &Matrix::filled(1, 1, g.bias))?;
        Ok(g.node_features)
    }
}
