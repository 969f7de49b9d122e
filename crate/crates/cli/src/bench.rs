use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use edgepool::data::random_gnm;
use edgepool::rng::{derive_indexed, rng_from};
use edgepool::{edgepool_forward, ForwardOptions, Graph32, PoolParams};
use serde::{Deserialize, Serialize};

use crate::alloc;
use crate::error::{CliError, CliResult};
use crate::manifest::{write_json, RunManifest};

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Smallest directed edge count.
    #[arg(long, default_value = "1e3", value_parser = crate::parse_count)]
    pub min_edges: usize,
    #[arg(long, default_value = "1e6", value_parser = crate::parse_count)]
    pub max_edges: usize,
    /// Sizes per factor of ten between the bounds.
    #[arg(long, default_value_t = 3)]
    pub per_decade: usize,
    /// Mean degree of the generated graphs.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    /// Timed repetitions per size; the minimum is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "runs/bench")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Row {
    pub edges: usize,
    pub nodes: usize,
    /// Seconds per pooling step.
    pub pool_time: f64,
    /// Heap bytes allocated above the pre-call baseline at the high-water mark.
    pub peak_aux_memory: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<Row>,
    /// Least-squares slope of log(pool_time) against log(edges); absent for one size.
    pub time_slope: Option<f64>,
    pub memory_slope: Option<f64>,
}

/// Log-spaced sizes from `min` to `max`, both included.
pub fn sizes(min: usize, max: usize, per_decade: usize) -> Vec<usize> {
    if min >= max || per_decade == 0 {
        return vec![min];
    }
    let steps = ((max as f64 / min as f64).log10() * per_decade as f64).round().max(1.0) as usize;
    let ratio = (max as f64 / min as f64).powf(1.0 / steps as f64);
    let mut out: Vec<usize> = (0..=steps).map(|i| (min as f64 * ratio.powi(i as i32)).round() as usize).collect();
    out.dedup();
    out
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn measure(graph: &Graph32, params: &PoolParams<f32>, repeats: usize) -> CliResult<(f64, usize)> {
    let opts = ForwardOptions::default();
    let base = alloc::reset_peak();
    let out = edgepool_forward(graph, params, &opts)?;
    let peak = alloc::peak_bytes().saturating_sub(base);
    drop(black_box(out));

    // repeat tiny graphs inside one timing window so the clock resolution does not dominate
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let mut iters = 0u32;
        let start = Instant::now();
        while iters == 0 || start.elapsed() < Duration::from_millis(20) {
            black_box(edgepool_forward(black_box(graph), params, &opts)?);
            iters += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / iters as f64);
    }
    Ok((best, peak))
}

pub fn run(args: &Args) -> CliResult<()> {
    if args.min_edges < 2 * args.degree || args.max_edges < args.min_edges || args.degree < 2 {
        return Err(CliError::Input("need degree ≥ 2 and 2·degree ≤ min-edges ≤ max-edges".into()));
    }
    let mut manifest = RunManifest::start("bench", args.seed, serde_json::to_value(args)?);
    let mut rows = Vec::new();
    for (i, &edges) in sizes(args.min_edges, args.max_edges, args.per_decade).iter().enumerate() {
        let mut rng = rng_from(derive_indexed(args.seed, "bench_graph", i as u64));
        let nodes = (edges / args.degree).max(2);
        let graph: Graph32 = random_gnm(nodes, edges / 2, args.width, &mut rng)?;
        let params = PoolParams::random(args.width, None, &mut rng);
        let (pool_time, peak_aux_memory) = measure(&graph, &params, args.repeats)?;
        eprintln!("{:>9} edges: {:.3e} s, {} bytes", graph.num_edges(), pool_time, peak_aux_memory);
        rows.push(Row { edges: graph.num_edges(), nodes, pool_time, peak_aux_memory });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.edges as f64).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.pool_time).collect();
    let m: Vec<f64> = rows.iter().map(|r| r.peak_aux_memory.max(1) as f64).collect();
    let summary = Summary { time_slope: loglog_slope(&x, &t), memory_slope: loglog_slope(&x, &m), rows };

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("bench.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for r in &summary.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    manifest.output(&csv_path);
    let spath = args.out.join("bench_summary.json");
    write_json(&spath, &summary)?;
    manifest.output(&spath);
    match (summary.time_slope, summary.memory_slope) {
        (Some(ts), Some(ms)) => println!("log-log slope: time {ts:.3}, memory {ms:.3}"),
        _ => println!("single size; no slope"),
    }
    manifest.finish(&args.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1e3, 1e4, 1e5];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.1)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.1).abs() < 1e-12);
        assert!(loglog_slope(&[5.0], &[1.0]).is_none());
    }

    #[test]
    fn size_grid() {
        assert_eq!(sizes(1000, 1000, 3), vec![1000]);
        let s = sizes(1000, 1_000_000, 3);
        assert_eq!(s.len(), 10);
        assert_eq!((s[0], s[9]), (1000, 1_000_000));
        assert_eq!(s[3], 10_000);
    }
}
