use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use edgepool::data::{sbm_node_task, NodeTask};
use edgepool::nn::train::evaluate_nodes;
use edgepool::nn::{train_node_classifier, Checkpoint, TrainConfig};
use edgepool::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::manifest::{write_json, DatasetIdentity, RunManifest};
use crate::train_graph::write_history;
use crate::{ConvArg, PoolingArg};

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Sbm,
}

#[derive(clap::Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "synthetic"]))]
pub struct Args {
    /// Graph JSON with `node_labels`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticKind>,
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 60)]
    pub block_size: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    /// Feature noise around the block centroids.
    #[arg(long, default_value_t = 2.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 20)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 30)]
    pub test_per_class: usize,
    #[arg(long, value_enum, default_value = "edgepool")]
    pub pooling: PoolingArg,
    #[arg(long, value_enum, default_value = "mean")]
    pub conv: ConvArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub channels: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.2)]
    pub edge_score_dropout: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub pooling: String,
    pub num_nodes: usize,
    pub train_nodes: usize,
    pub test_nodes: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub final_train_loss: f64,
}

fn load(args: &Args) -> CliResult<(NodeTask<f32>, DatasetIdentity)> {
    let split_seed = derive_seed(args.seed, "split");
    if let Some(path) = &args.input {
        let task = NodeTask::from_json(path, args.train_per_class, args.test_per_class, split_seed)?;
        let id = DatasetIdentity::from_files("json", &path.display().to_string(), path, std::slice::from_ref(path))?;
        return Ok((task, id));
    }
    let data_seed = derive_seed(args.seed, "dataset");
    let task = sbm_node_task(
        args.blocks,
        args.block_size,
        args.p_in,
        args.p_out,
        args.width,
        args.noise,
        args.train_per_class,
        args.test_per_class,
        data_seed,
    )?;
    let spec = serde_json::json!({
        "generator": "sbm",
        "blocks": args.blocks,
        "block_size": args.block_size,
        "p_in": args.p_in,
        "p_out": args.p_out,
        "width": args.width,
        "noise": args.noise,
        "train_per_class": args.train_per_class,
        "test_per_class": args.test_per_class,
        "seed": data_seed,
    });
    Ok((task, DatasetIdentity::generated("sbm", &spec)))
}

pub fn run(args: &Args) -> CliResult<()> {
    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        channels: args.channels,
        dropout_p: args.dropout,
        edge_score_dropout_p: args.edge_score_dropout,
        seed: derive_seed(args.seed, "train"),
        pooling: args.pooling.into(),
        conv: args.conv.into(),
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let mut manifest = RunManifest::start("train-node", args.seed, serde_json::to_value(args)?);
    let (task, id) = load(args)?;
    manifest.dataset = Some(id.with_summary(serde_json::json!({
        "num_nodes": task.graph.num_nodes(),
        "num_edges": task.graph.num_edges(),
        "num_classes": task.num_classes,
    })));
    let out = train_node_classifier(&task, &cfg)?;
    fs::create_dir_all(&args.out)?;
    let hist = args.out.join("history.csv");
    write_history(&hist, &out.history)?;
    manifest.output(&hist);
    let ckpt = args.out.join("checkpoint.json");
    write_json(&ckpt, &Checkpoint::new(&cfg, &out.model.config, &out.params))?;
    manifest.output(&ckpt);

    let train = task.train_nodes();
    let last = out.history.last().expect("at least one epoch");
    let summary = Summary {
        pooling: serde_json::to_value(args.pooling)?.as_str().unwrap_or_default().to_string(),
        num_nodes: task.graph.num_nodes(),
        train_nodes: train.len(),
        test_nodes: task.test_nodes().len(),
        train_acc: evaluate_nodes(&out.model, &out.params, &task, &train)?,
        test_acc: last.eval_acc,
        final_train_loss: last.train_loss,
    };
    let spath = args.out.join("summary.json");
    write_json(&spath, &summary)?;
    manifest.output(&spath);
    println!("test accuracy {:.4} (train {:.4})", summary.test_acc, summary.train_acc);
    manifest.finish(&args.out)?;
    Ok(())
}
