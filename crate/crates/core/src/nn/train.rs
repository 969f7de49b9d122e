//! Training loops for both tasks.
//!
//! Adam with a step learning-rate schedule, seeded shuffling, edge-score
//! dropout while training only. Everything random is derived from
//! `TrainConfig::seed`, so two runs with the same seed match exactly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::layers::{argmax_rows, softmax_cross_entropy};
use super::params::{adam_step, learning_rate, AdamConfig, ParamStore, TensorRecord};
use super::{ConvKind, GraphClassifier, ModelConfig, NodeClassifier, Pass, Pooling};
use crate::data::{GraphDataset, NodeTask};
use crate::error::{Error, Result};
use crate::graph::{batch, BatchedGraph};
use crate::matrix::Matrix;
use crate::rng::{derive_indexed, rng_for};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_halving_period: usize,
    pub channels: usize,
    pub dropout_p: f64,
    pub edge_score_dropout_p: f64,
    pub seed: u64,
    pub pooling: Pooling,
    pub conv: ConvKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            lr_halving_period: 50,
            channels: 128,
            dropout_p: 0.5,
            edge_score_dropout_p: 0.2,
            seed: 0,
            pooling: Pooling::Edgepool,
            conv: ConvKind::Mean,
        }
    }
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.channels == 0 || self.lr_halving_period == 0 {
            return Err(Error::InvalidParams("epochs, batch size, channels and halving period must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParams(format!("learning rate {}", self.learning_rate)));
        }
        for p in [self.dropout_p, self.edge_score_dropout_p] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(())
    }

    pub fn model(&self, in_width: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            in_width,
            channels: self.channels,
            num_classes,
            pooling: self.pooling,
            conv: self.conv,
            dropout_p: self.dropout_p,
            edge_score_dropout_p: self.edge_score_dropout_p,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        learning_rate(self.learning_rate, epoch, self.lr_halving_period)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub eval_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T, M> {
    pub model: M,
    pub params: ParamStore<T>,
    pub history: Vec<EpochRecord>,
}

impl<T, M> TrainOutcome<T, M> {
    pub fn final_eval_acc(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.eval_acc)
    }
}

/// Serialized model weights plus the configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: CheckpointConfig,
    pub params: BTreeMap<String, TensorRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn new<T: Scalar>(train: &TrainConfig, model: &ModelConfig, params: &ParamStore<T>) -> Self {
        Self {
            format_version: Self::FORMAT_VERSION,
            config: CheckpointConfig { train: train.clone(), model: *model },
            params: params.to_record(),
        }
    }
}

fn make_batch<T: Scalar>(dataset: &GraphDataset<T>, idx: &[usize]) -> Result<(BatchedGraph<T>, Vec<usize>)> {
    let graphs: Vec<_> = idx.iter().map(|&i| &dataset.graphs[i]).collect();
    Ok((batch(&graphs)?, idx.iter().map(|&i| dataset.labels[i]).collect()))
}

fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64
}

/// Accuracy over `idx`, evaluated in consecutive batches with batch statistics.
pub fn evaluate_graphs<T: Scalar>(
    model: &GraphClassifier,
    params: &ParamStore<T>,
    dataset: &GraphDataset<T>,
    idx: &[usize],
    batch_size: usize,
) -> Result<f64> {
    let mut correct = 0usize;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (b, labels) = make_batch(dataset, chunk)?;
        let fwd = model.forward(params, &b, Pass::eval())?;
        correct += argmax_rows(&fwd.logits).iter().zip(&labels).filter(|(p, l)| p == l).count();
    }
    Ok(correct as f64 / idx.len().max(1) as f64)
}

/// Trains the graph classifier on `train_idx`, recording accuracy on `eval_idx` after every epoch.
pub fn train_graph_classifier<T: Scalar>(
    dataset: &GraphDataset<T>,
    train_idx: &[usize],
    eval_idx: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T, GraphClassifier>> {
    cfg.validate()?;
    if train_idx.is_empty() {
        return Err(Error::InvalidParams("empty training set".into()));
    }
    let mut params = ParamStore::new();
    let model = GraphClassifier::new(
        cfg.model(dataset.feature_width(), dataset.num_classes),
        &mut params,
        &mut rng_for(cfg.seed, "init"),
    )?;
    let adam = AdamConfig::default();
    let mut step = 0u64;
    let mut order = train_idx.to_vec();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut crate::rng::rng_from(derive_indexed(cfg.seed, "shuffle", epoch as u64)));
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let (b, labels) = make_batch(dataset, chunk)?;
            step += 1;
            let pass = Pass::train(derive_indexed(cfg.seed, "step", step));
            let fwd = model.forward(&params, &b, pass)?;
            let (loss, grad) = softmax_cross_entropy(&fwd.logits, &labels)?;
            params.zero_grad();
            model.backward(&mut params, &fwd, &grad)?;
            adam_step(&mut params, lr, &adam, step);
            loss_sum += loss;
            batches += 1;
        }
        let eval_acc = if eval_idx.is_empty() {
            0.0
        } else {
            evaluate_graphs(&model, &params, dataset, eval_idx, cfg.batch_size)?
        };
        history.push(EpochRecord { epoch, lr, train_loss: loss_sum / batches as f64, eval_acc });
    }
    Ok(TrainOutcome { model, params, history })
}

/// Cross-entropy restricted to `nodes`, with the gradient scattered back to all rows.
pub fn masked_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
    nodes: &[usize],
) -> Result<(f64, Matrix<T>)> {
    let sub = logits.gather_rows(nodes);
    let sub_labels: Vec<usize> = nodes.iter().map(|&i| labels[i]).collect();
    let (loss, g) = softmax_cross_entropy(&sub, &sub_labels)?;
    let mut full = Matrix::zeros(logits.rows(), logits.cols());
    for (k, &i) in nodes.iter().enumerate() {
        full.row_mut(i).copy_from_slice(g.row(k));
    }
    Ok((loss, full))
}

pub fn evaluate_nodes<T: Scalar>(
    model: &NodeClassifier,
    params: &ParamStore<T>,
    task: &NodeTask<T>,
    nodes: &[usize],
) -> Result<f64> {
    let fwd = model.forward(params, &task.graph, Pass::eval())?;
    let pred = argmax_rows(&fwd.logits.gather_rows(nodes));
    let labels: Vec<usize> = nodes.iter().map(|&i| task.node_labels[i]).collect();
    Ok(accuracy(&pred, &labels))
}

/// Full-graph training of the node classifier; one optimizer step per epoch.
pub fn train_node_classifier<T: Scalar>(
    task: &NodeTask<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T, NodeClassifier>> {
    cfg.validate()?;
    let train = task.train_nodes();
    let test = task.test_nodes();
    if train.is_empty() {
        return Err(Error::InvalidParams("no training nodes".into()));
    }
    let mut params = ParamStore::new();
    let model = NodeClassifier::new(
        cfg.model(task.graph.feature_width(), task.num_classes),
        &mut params,
        &mut rng_for(cfg.seed, "init"),
    )?;
    let adam = AdamConfig::default();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let step = epoch as u64 + 1;
        let fwd = model.forward(&params, &task.graph, Pass::train(derive_indexed(cfg.seed, "step", step)))?;
        let (loss, grad) = masked_cross_entropy(&fwd.logits, &task.node_labels, &train)?;
        params.zero_grad();
        model.backward(&mut params, &fwd, &grad)?;
        adam_step(&mut params, lr, &adam, step);
        let eval_acc = evaluate_nodes(&model, &params, task, &test)?;
        history.push(EpochRecord { epoch, lr, train_loss: loss, eval_acc });
    }
    Ok(TrainOutcome { model, params, history })
}
