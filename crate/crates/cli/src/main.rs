//! `edgepool` command-line interface.
//!
//! Exit codes: 0 success, 1 a check ran and failed, 2 bad input.

mod alloc;
mod bench;
mod error;
mod gradcheck;
mod manifest;
mod pool;
mod train_graph;
mod train_node;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use edgepool::nn::{ConvKind, Pooling};

#[global_allocator]
static ALLOC: alloc::CountingAlloc = alloc::CountingAlloc;

#[derive(Parser, Debug)]
#[command(name = "edgepool", version, about = "Edge-contraction pooling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pool a graph repeatedly and export the hierarchy as JSON and DOT.
    Pool(pool::Args),
    /// k-fold cross-validation of the graph classifier.
    TrainGraph(train_graph::Args),
    /// Train the node classifier on one graph.
    TrainNode(train_node::Args),
    /// Compare analytic gradients with finite differences.
    Gradcheck(gradcheck::Args),
    /// Pooling time and peak memory against edge count.
    Bench(bench::Args),
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingArg {
    None,
    Edgepool,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::None => Pooling::None,
            PoolingArg::Edgepool => Pooling::Edgepool,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvArg {
    Mean,
    Mlp,
}

impl From<ConvArg> for ConvKind {
    fn from(c: ConvArg) -> Self {
        match c {
            ConvArg::Mean => ConvKind::Mean,
            ConvArg::Mlp => ConvKind::Mlp,
        }
    }
}

/// Accepts plain integers and float notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 => Ok(v as usize),
        _ => Err(format!("not a non-negative integer: {s}")),
    }
}

/// `--tu DIR NAME` as a pair.
pub fn tu_pair(v: &Option<Vec<String>>) -> Option<(PathBuf, String)> {
    v.as_ref().map(|v| (PathBuf::from(&v[0]), v[1].clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pool(a) => pool::run(&a),
        Command::TrainGraph(a) => train_graph::run(&a),
        Command::TrainNode(a) => train_node::run(&a),
        Command::Gradcheck(a) => gradcheck::run(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
