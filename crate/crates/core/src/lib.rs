//! Edge-contraction graph pooling.
//!
//! The crate is generic over the floating-point element type ([`Scalar`]);
//! the aliases below pin the two precisions used in practice: `f32` for
//! training and `f64` for gradient checking.

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod matrix;
pub mod nn;
pub mod pool;
pub mod rng;
pub mod scalar;
pub mod unpool;

pub use error::{Error, Result};
pub use graph::{batch, to_dot, BatchedGraph, DotStyle, Graph, GraphRecord, Topology};
pub use matrix::Matrix;
pub use pool::{
    apply_score_dropout, contract, edgepool_backward, edgepool_forward, normalize_scores,
    raw_scores, select_contractions, Combiner, EdgeScores, ForwardOptions, PoolGrads, PoolInfo,
    PoolOutput, PoolParams,
};
pub use scalar::Scalar;
pub use unpool::{unpool_backward, unpool_chain, unpool_once, unpool_score_grad, UnpoolPlan};

pub type Graph32 = Graph<f32>;
pub type Graph64 = Graph<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type PoolParams32 = PoolParams<f32>;
pub type PoolParams64 = PoolParams<f64>;
pub type PoolInfo32 = PoolInfo<f32>;
pub type PoolInfo64 = PoolInfo<f64>;
