use std::fs;
use std::path::{Path, PathBuf};

use edgepool::data::{kfold_splits, load_tu, path_proteinlike, Fold, GraphDataset};
use edgepool::nn::{train_graph_classifier, Checkpoint, EpochRecord, TrainConfig};
use edgepool::rng::{derive_indexed, derive_seed};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{write_json, DatasetIdentity, RunManifest};
use crate::{ConvArg, PoolingArg};

#[derive(clap::Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["tu", "synthetic_graphs"]))]
pub struct Args {
    /// TU dataset directory and name.
    #[arg(long, num_args = 2, value_names = ["DIR", "NAME"])]
    pub tu: Option<Vec<String>>,
    /// Use this many generated protein-like graphs instead of a TU dataset.
    #[arg(long)]
    pub synthetic_graphs: Option<usize>,
    #[arg(long, value_enum, default_value = "edgepool")]
    pub pooling: PoolingArg,
    #[arg(long, value_enum, default_value = "mean")]
    pub conv: ConvArg,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub channels: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.2)]
    pub edge_score_dropout: f64,
    /// Folds trained concurrently; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

impl Args {
    pub fn train_config(&self, fold: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            channels: self.channels,
            dropout_p: self.dropout,
            edge_score_dropout_p: self.edge_score_dropout,
            seed: derive_indexed(self.seed, "fold", fold as u64),
            pooling: self.pooling.into(),
            conv: self.conv.into(),
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Test accuracy after the last epoch.
    pub test_acc: f64,
    pub final_train_loss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub pooling: String,
    pub mean_acc: f64,
    /// Population standard deviation over folds.
    pub std_acc: f64,
    pub folds: Vec<FoldResult>,
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn load(args: &Args) -> CliResult<(GraphDataset<f32>, DatasetIdentity)> {
    if let Some((dir, name)) = crate::tu_pair(&args.tu) {
        let ds = load_tu::<f32>(&dir, &name)?;
        let id = DatasetIdentity::from_files("tu", &name, &dir, &crate::pool::tu_files(&dir, &name)?)?;
        return Ok((ds, id));
    }
    let n = args.synthetic_graphs.expect("clap requires a source");
    let seed = derive_seed(args.seed, "dataset");
    let ds = path_proteinlike::<f32>(n, seed)?;
    let spec = serde_json::json!({ "generator": "path_proteinlike", "num_graphs": n, "seed": seed });
    Ok((ds, DatasetIdentity::generated("path_proteinlike", &spec)))
}

fn run_fold(args: &Args, ds: &GraphDataset<f32>, k: usize, fold: &Fold) -> CliResult<(FoldResult, Vec<PathBuf>)> {
    let cfg = args.train_config(k);
    let out = train_graph_classifier(ds, &fold.train, &fold.test, &cfg)?;
    let dir = args.out.join(format!("fold_{k:02}"));
    fs::create_dir_all(&dir)?;
    let hist = dir.join("history.csv");
    write_history(&hist, &out.history)?;
    let ckpt = dir.join("checkpoint.json");
    write_json(&ckpt, &Checkpoint::new(&cfg, &out.model.config, &out.params))?;
    let last = out.history.last().expect("at least one epoch");
    eprintln!("fold {k}: test accuracy {:.4}", last.eval_acc);
    Ok((
        FoldResult {
            fold: k,
            train_size: fold.train.len(),
            test_size: fold.test.len(),
            test_acc: last.eval_acc,
            final_train_loss: last.train_loss,
        },
        vec![hist, ckpt],
    ))
}

pub fn run(args: &Args) -> CliResult<()> {
    args.train_config(0).validate()?;
    let mut manifest = RunManifest::start("train-graph", args.seed, serde_json::to_value(args)?);
    let (ds, id) = load(args)?;
    manifest.dataset = Some(id.with_summary(serde_json::json!({
        "num_graphs": ds.len(),
        "num_classes": ds.num_classes,
        "feature_width": ds.feature_width(),
    })));
    let folds = kfold_splits(ds.len(), args.folds, derive_seed(args.seed, "folds"))?;
    fs::create_dir_all(&args.out)?;

    let jobs = args.jobs.max(1);
    let mut results: Vec<Option<CliResult<(FoldResult, Vec<PathBuf>)>>> = (0..folds.len()).map(|_| None).collect();
    for chunk in (0..folds.len()).collect::<Vec<_>>().chunks(jobs) {
        let done: Vec<_> = std::thread::scope(|s| {
            let (ds, folds) = (&ds, &folds);
            let handles: Vec<_> =
                chunk.iter().map(|&k| s.spawn(move || (k, run_fold(args, ds, k, &folds[k])))).collect();
            handles.into_iter().map(|h| h.join().expect("fold thread panicked")).collect()
        });
        for (k, r) in done {
            results[k] = Some(r);
        }
    }
    let mut fold_results = Vec::with_capacity(folds.len());
    for r in results.into_iter().flatten() {
        let (res, paths) = r?;
        paths.into_iter().for_each(|p| manifest.output(p));
        fold_results.push(res);
    }
    if fold_results.is_empty() {
        return Err(CliError::Input("no folds".into()));
    }
    let accs: Vec<f64> = fold_results.iter().map(|f| f.test_acc).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64).sqrt();
    let summary = Summary {
        dataset: ds.name.clone(),
        pooling: serde_json::to_value(args.pooling)?.as_str().unwrap_or_default().to_string(),
        mean_acc: mean,
        std_acc: std,
        folds: fold_results,
    };
    let spath = args.out.join("summary.json");
    write_json(&spath, &summary)?;
    manifest.output(&spath);
    println!("mean accuracy {:.4} ± {:.4} over {} folds", mean, std, summary.folds.len());
    manifest.finish(&args.out)?;
    Ok(())
}
