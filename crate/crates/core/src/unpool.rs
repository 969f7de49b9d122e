//! Unpooling: every original node receives its pooled node's features divided
//! by its gating score. Levels chain by applying them innermost first.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pool::PoolInfo;
use crate::scalar::Scalar;

fn check<T: Scalar>(rows: usize, info: &PoolInfo<T>) -> Result<()> {
    if rows != info.pooled_num_nodes {
        return Err(Error::dims(format!(
            "{rows} rows at pooled resolution, level has {} pooled nodes",
            info.pooled_num_nodes
        )));
    }
    for (node, s) in info.node_score.iter().enumerate() {
        if *s <= T::zero() {
            return Err(Error::NonPositiveScore { node, score: s.acc() });
        }
    }
    Ok(())
}

/// `out[i] = pooled[cluster_of[i]] / node_score[i]`
pub fn unpool_once<T: Scalar>(pooled: &Matrix<T>, info: &PoolInfo<T>) -> Result<Matrix<T>> {
    check(pooled.rows(), info)?;
    let mut out = Matrix::zeros(info.cluster_of.len(), pooled.cols());
    for (i, &c) in info.cluster_of.iter().enumerate() {
        let s = info.node_score[i];
        for (o, &v) in out.row_mut(i).iter_mut().zip(pooled.row(c)) {
            *o = v / s;
        }
    }
    Ok(out)
}

/// Adjoint of [`unpool_once`] w.r.t. the pooled features:
/// `grad[c] = Σ_{i: cluster_of[i] = c} upstream[i] / node_score[i]`.
pub fn unpool_backward<T: Scalar>(upstream: &Matrix<T>, info: &PoolInfo<T>) -> Result<Matrix<T>> {
    if upstream.rows() != info.cluster_of.len() {
        return Err(Error::dims(format!(
            "{} upstream rows for {} original nodes",
            upstream.rows(),
            info.cluster_of.len()
        )));
    }
    check(info.pooled_num_nodes, info)?;
    let mut out = Matrix::zeros(info.pooled_num_nodes, upstream.cols());
    for (i, &c) in info.cluster_of.iter().enumerate() {
        let s = info.node_score[i];
        for (o, &g) in out.row_mut(c).iter_mut().zip(upstream.row(i)) {
            *o += g / s;
        }
    }
    Ok(out)
}

/// Gradient of the unpooled output w.r.t. each original node's gating score.
/// Zero for unmatched nodes, whose score is the constant 1.
pub fn unpool_score_grad<T: Scalar>(
    pooled: &Matrix<T>,
    upstream: &Matrix<T>,
    info: &PoolInfo<T>,
) -> Result<Vec<T>> {
    check(pooled.rows(), info)?;
    if upstream.shape() != (info.cluster_of.len(), pooled.cols()) {
        return Err(Error::dims("upstream gradient shape"));
    }
    let merged = info.matched_edges.len();
    Ok(info
        .cluster_of
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c >= merged {
                return T::zero();
            }
            let s = info.node_score[i].acc();
            let d: f64 = pooled.row(c).iter().zip(upstream.row(i)).map(|(p, g)| p.acc() * g.acc()).sum();
            T::lit(-d / (s * s))
        })
        .collect())
}

/// Pooling levels, first-applied first.
#[derive(Clone, Debug)]
pub struct UnpoolPlan<T> {
    levels: Vec<PoolInfo<T>>,
}

impl<T: Scalar> UnpoolPlan<T> {
    pub fn new(levels: Vec<PoolInfo<T>>) -> Result<Self> {
        for (k, w) in levels.windows(2).enumerate() {
            if w[0].pooled_num_nodes != w[1].cluster_of.len() {
                return Err(Error::dims(format!(
                    "level {k} pools to {} nodes but level {} starts from {}",
                    w[0].pooled_num_nodes,
                    k + 1,
                    w[1].cluster_of.len()
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[PoolInfo<T>] {
        &self.levels
    }
}

/// Unpools through every level of `plan`, innermost level first.
pub fn unpool_chain<T: Scalar>(features: &Matrix<T>, plan: &UnpoolPlan<T>) -> Result<Matrix<T>> {
    plan.levels.iter().rev().try_fold(features.clone(), |x, info| unpool_once(&x, info))
}
