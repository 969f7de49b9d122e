//! Minimal differentiable stack: layers with explicit backward passes, Adam,
//! and the two architectures built around edge pooling.

mod block;
pub mod graph_model;
pub mod layers;
pub mod node_model;
pub mod params;
pub mod train;

use serde::{Deserialize, Serialize};

pub use graph_model::GraphClassifier;
pub use node_model::NodeClassifier;
pub use params::{adam_step, learning_rate, AdamConfig, ParamId, ParamStore, TensorRecord};
pub use train::{
    evaluate_graphs, train_graph_classifier, train_node_classifier, Checkpoint, EpochRecord,
    TrainConfig, TrainOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    None,
    #[default]
    Edgepool,
}

/// Graph convolution flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConvKind {
    /// Self term plus mean over in-neighbors.
    #[default]
    Mean,
    /// Self term only; nodes only exchange information through pooling.
    Mlp,
}

/// Architecture hyperparameters shared by both models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_width: usize,
    pub channels: usize,
    pub num_classes: usize,
    pub pooling: Pooling,
    pub conv: ConvKind,
    /// Feature dropout on the fully-connected head.
    pub dropout_p: f64,
    pub edge_score_dropout_p: f64,
}

/// Whether a forward pass trains, and the seed for its random masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pass {
    pub training: bool,
    pub seed: u64,
}

impl Pass {
    pub fn eval() -> Self {
        Self { training: false, seed: 0 }
    }

    pub fn train(seed: u64) -> Self {
        Self { training: true, seed }
    }
}
