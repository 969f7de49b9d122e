//! Acceptance suite: one line per criterion, nonzero exit if any runnable
//! criterion fails. A criterion whose data is unavailable is reported as
//! BLOCKED; set `EDGEPOOL_ACCEPTANCE_STRICT=1` to count that as a failure.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use edgepool::data::erdos_renyi;
use edgepool::rng::{derive_indexed, rng_from};
use edgepool::{
    edgepool_forward, select_contractions, unpool_chain, unpool_once, ForwardOptions, Graph64,
    PoolParams, UnpoolPlan,
};
use rand::Rng as _;
use serde_json::Value;
use support::{Instance, KINDS};

const SEED: u64 = 20_190_517;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edgepool"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .expect("valid json")
}

fn within(limit: Duration, started: Instant, body: String, ok: bool) -> Outcome {
    let took = started.elapsed();
    let body = format!("{body}; {:.1}s (limit {}s)", took.as_secs_f64(), limit.as_secs());
    if ok && took <= limit {
        Outcome::Pass(body)
    } else {
        Outcome::Fail(body)
    }
}

fn property_suite() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from(SEED);
    let mut failures = Vec::new();
    let (mut permuted, mut tied, mut sizes) = (0, 0, Vec::new());
    for i in 0..200u64 {
        let kind = KINDS[i as usize % KINDS.len()];
        // a spread of sizes over the full range, including both ends
        let n = match i {
            0 => 2,
            1 => 500,
            _ => rng.random_range(2..=500),
        };
        let inst = Instance::new(kind, n, derive_indexed(SEED, "property", i));
        sizes.push(inst.graph.num_nodes());
        let out = inst.forward();
        let checks = [
            support::check_scores(&inst.graph, &out.scores),
            support::check_matching(&inst.graph, &out.scores, &out.info, &out.pooled),
            support::check_locality(&inst, &mut rng_from(derive_indexed(SEED, "locality", i))),
        ];
        for r in checks {
            if let Err(e) = r {
                failures.push(format!("graph {i} ({kind:?}, n={n}): {e}"));
            }
        }
        match support::check_permutation(&inst.graph, &inst.params, &mut rng_from(derive_indexed(SEED, "perm", i))) {
            Ok(true) => permuted += 1,
            // leaves with a single incoming edge all score exactly 1.5, so
            // stars and paths are usually skipped here
            Ok(false) => tied += 1,
            Err(e) => failures.push(format!("graph {i} ({kind:?}, n={n}): {e}")),
        }
    }
    let body = format!(
        "200 graphs, {}..={} nodes; normalization, validity, maximality, node count, score range, locality; \
         permutation equivariance on {permuted} tie-free graphs ({tied} skipped for ties); {} failures{}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        failures.len(),
        failures.first().map_or(String::new(), |f| format!(" (first: {f})")),
    );
    within(Duration::from_secs(60), started, body, failures.is_empty() && permuted >= 40)
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from(derive_indexed(SEED, "oracle", 0));
    let mut mismatches = 0;
    let mut contracted = 0;
    for i in 0..1000u64 {
        let kind = KINDS[rng.random_range(0..KINDS.len())];
        let n = rng.random_range(2..=7);
        let inst = Instance::new(kind, n, derive_indexed(SEED, "oracle", i + 1));
        let scores = inst.forward().scores;
        let fast = select_contractions(&inst.graph, &scores);
        contracted += fast.len();
        if fast != support::naive_select(&inst.graph, &scores) {
            mismatches += 1;
        }
    }
    let body = format!("1000 graphs with ≤7 nodes, {contracted} contractions, {mismatches} mismatches vs repeated argmax");
    within(Duration::from_secs(60), started, body, mismatches == 0)
}

fn gradient_correctness(tmp: &Path) -> Outcome {
    let started = Instant::now();
    let out = tmp.join("gradcheck");
    let run = bin().args(["gradcheck", "--cases", "all", "--seed", "0", "--out"]).arg(&out).output().unwrap();
    let reports = read_json(&out.join("gradcheck.json"));
    let cases = reports.as_array().unwrap();
    let worst = cases
        .iter()
        .filter(|c| c["rtol"].as_f64() == Some(1e-4))
        .map(|c| c["max_rel_err"].as_f64().unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    let adjoint = cases.iter().find(|c| c["name"] == "unpool.adjoint").map(|c| c["max_abs_err"].clone());
    let names: Vec<&str> = cases.iter().filter_map(|c| c["name"].as_str()).collect();
    let required = ["edgepool", "unpool.adjoint", "unpool.chain", "layers.dense", "layers.mean_conv", "layers.batch_norm", "layers.global_mean_pool", "layers.cross_entropy"];
    let complete = required.iter().all(|r| names.contains(r));
    // negative control: corrupted gradients must be rejected with exit code 1
    let control = bin()
        .args(["gradcheck", "--cases", "layers", "--corrupt-gradients", "--out"])
        .arg(tmp.join("gradcheck_corrupt"))
        .output()
        .unwrap();
    let body = format!(
        "{} cases, exit {:?}; worst rtol-1e-4 relative error {worst:.2e}; adjoint error {}; corrupted control exit {:?}",
        cases.len(),
        run.status.code(),
        adjoint.unwrap_or(Value::Null),
        control.status.code(),
    );
    within(Duration::from_secs(120), started, body, run.status.success() && complete && control.status.code() == Some(1))
}

fn roundtrip() -> Outcome {
    let started = Instant::now();
    let mut worst_failure = None;
    let mut chains = 0;
    for i in 0..100u64 {
        let kind = KINDS[i as usize % KINDS.len()];
        let n = 2 + (i as usize * 37) % 150;
        let inst = Instance::new(kind, n, derive_indexed(SEED, "roundtrip", i));
        let opts = ForwardOptions::default();
        let l1 = edgepool_forward(&inst.graph, &inst.params, &opts).unwrap();
        let up = unpool_once(l1.pooled.node_features(), &l1.info).unwrap();
        if let Err(e) = support::check_roundtrip(&inst.graph, &l1, &up, 1e-6) {
            worst_failure.get_or_insert(format!("graph {i}: {e}"));
        }
        // second level: each level restores its own input, and the chain composes them
        let l2 = edgepool_forward(&l1.pooled, &inst.params, &opts).unwrap();
        let up2 = unpool_once(l2.pooled.node_features(), &l2.info).unwrap();
        if let Err(e) = support::check_roundtrip(&l1.pooled, &l2, &up2, 1e-6) {
            worst_failure.get_or_insert(format!("graph {i} level 2: {e}"));
        }
        let plan = UnpoolPlan::new(vec![l1.info.clone(), l2.info.clone()]).unwrap();
        let chained = unpool_chain(l2.pooled.node_features(), &plan).unwrap();
        let manual = unpool_once(&up2, &l1.info).unwrap();
        if chained.as_slice().iter().zip(manual.as_slice()).any(|(a, b)| (a - b).abs() > 1e-6) {
            worst_failure.get_or_insert(format!("graph {i}: chain differs from composition"));
        }
        chains += 1;
    }
    let body = format!(
        "100 graphs, {chains} two-level chains; {}",
        worst_failure.clone().unwrap_or_else(|| "all within 1e-6".into())
    );
    within(Duration::from_secs(60), started, body, worst_failure.is_none())
}

fn connected(g: &Graph64) -> bool {
    let n = g.num_nodes();
    let mut adj = vec![Vec::new(); n];
    for &(s, d) in g.edges() {
        adj[s].push(d);
        adj[d].push(s);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn reduction_ratio() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from(derive_indexed(SEED, "reduction", 0));
    let (mut ratios, mut degrees) = (Vec::new(), Vec::new());
    while ratios.len() < 100 {
        let g: Graph64 = erdos_renyi(100, 5.0 / 99.0, 8, &mut rng).unwrap();
        let degree = g.num_edges() as f64 / 100.0;
        if !connected(&g) || degree < 4.0 {
            continue;
        }
        let params = PoolParams::random(8, None, &mut rng);
        let out = edgepool_forward(&g, &params, &ForwardOptions::default()).unwrap();
        ratios.push(out.pooled.num_nodes() as f64 / 100.0);
        degrees.push(degree);
    }
    let mean = ratios.iter().sum::<f64>() / 100.0;
    let body = format!(
        "100 connected G(100, p) graphs, mean degree {:.2}; mean pooled/original ratio {mean:.3} (max {:.2}, threshold 0.6)",
        degrees.iter().sum::<f64>() / 100.0,
        ratios.iter().cloned().fold(0.0, f64::max),
    );
    within(Duration::from_secs(60), started, body, mean <= 0.6)
}

fn scaling(tmp: &Path) -> Outcome {
    let started = Instant::now();
    let out = tmp.join("bench");
    let run = bin()
        .args(["bench", "--min-edges", "1e3", "--max-edges", "1e6", "--seed", "0", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    if !run.status.success() {
        return Outcome::Fail(format!("bench exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
    }
    let summary = read_json(&out.join("bench_summary.json"));
    let rows = summary["rows"].as_array().unwrap();
    let ts = summary["time_slope"].as_f64().unwrap();
    let ms = summary["memory_slope"].as_f64().unwrap();
    let body = format!(
        "{} sizes, {}..{} edges; log-log slope time {ts:.3} (≤ 1.2), memory {ms:.3} (≤ 1.1)",
        rows.len(),
        rows.first().unwrap()["edges"],
        rows.last().unwrap()["edges"],
    );
    within(Duration::from_secs(600), started, body, ts <= 1.2 && ms <= 1.1)
}

fn train_graph(tmp: &Path, tu: &[&str], pooling: &str, extra: &[&str]) -> Result<Value, String> {
    let out = tmp.join(format!("train_graph_{pooling}"));
    let mut cmd = bin();
    cmd.arg("train-graph").args(tu).args(["--pooling", pooling, "--seed", "0", "--out"]).arg(&out).args(extra);
    let run = cmd.output().map_err(|e| e.to_string())?;
    if !run.status.success() {
        return Err(format!("train-graph exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
    }
    Ok(read_json(&out.join("summary.json")))
}

fn proteins(tmp: &Path) -> Outcome {
    let dir = std::env::var_os("EDGEPOOL_PROTEINS_DIR").map(PathBuf::from);
    let Some(dir) = dir.filter(|d| d.join("PROTEINS_A.txt").exists()) else {
        // exercise the identical pipeline on generated data so a broken pipeline still shows up here
        let smoke = ["--synthetic-graphs", "200"];
        let short = ["--folds", "2", "--epochs", "2", "--channels", "16", "--jobs", "2"];
        let detail = match (train_graph(tmp, &smoke, "edgepool", &short), train_graph(tmp, &smoke, "none", &short)) {
            (Ok(a), Ok(b)) => format!(
                "pipeline smoke on generated graphs ran (edgepool {:.3}, base {:.3}; not evidence for the criterion)",
                a["mean_acc"].as_f64().unwrap_or(f64::NAN),
                b["mean_acc"].as_f64().unwrap_or(f64::NAN)
            ),
            (Err(e), _) | (_, Err(e)) => return Outcome::Fail(format!("pipeline smoke failed: {e}")),
        };
        return Outcome::Blocked(format!(
            "PROTEINS is not available offline; set EDGEPOOL_PROTEINS_DIR to a directory holding PROTEINS_*.txt to run \
             the 10-fold, 64-channel, 200-epoch comparison; {detail}"
        ));
    };
    let started = Instant::now();
    let dir_s = dir.to_string_lossy().into_owned();
    let tu = ["--tu", dir_s.as_str(), "PROTEINS"];
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).to_string();
    let args = ["--folds", "10", "--epochs", "200", "--channels", "64", "--jobs", jobs.as_str()];
    let (pooled, base) = match (train_graph(tmp, &tu, "edgepool", &args), train_graph(tmp, &tu, "none", &args)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e),
    };
    let (ep, bm) = (pooled["mean_acc"].as_f64().unwrap(), base["mean_acc"].as_f64().unwrap());
    let body = format!(
        "edgepool {:.1}% ± {:.1}, base {:.1}% ± {:.1} (need ≥ 70.0% and edgepool > base − 1.0 pp); {:.0}s",
        100.0 * ep,
        100.0 * pooled["std_acc"].as_f64().unwrap(),
        100.0 * bm,
        100.0 * base["std_acc"].as_f64().unwrap(),
        started.elapsed().as_secs_f64()
    );
    if ep >= 0.70 && ep > bm - 0.01 {
        Outcome::Pass(body)
    } else {
        Outcome::Fail(body)
    }
}

fn node_task(tmp: &Path) -> Outcome {
    let started = Instant::now();
    let mut means = Vec::new();
    for pooling in ["edgepool", "none"] {
        let mut accs = Vec::new();
        for seed in 0..5 {
            let out = tmp.join(format!("node_{pooling}_{seed}"));
            let run = bin()
                .args(["train-node", "--synthetic", "sbm", "--conv", "mlp", "--pooling", pooling, "--seed"])
                .arg(seed.to_string())
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            if !run.status.success() {
                return Outcome::Fail(format!("train-node exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
            }
            accs.push(read_json(&out.join("summary.json"))["test_acc"].as_f64().unwrap());
        }
        means.push(accs.iter().sum::<f64>() / accs.len() as f64);
    }
    let gap = means[0] - means[1];
    let body = format!(
        "SBM, MLP convolutions, 5 seeds: edgepool {:.1}% vs no pooling {:.1}%, gap {:.1} pp (need ≥ 5)",
        100.0 * means[0],
        100.0 * means[1],
        100.0 * gap
    );
    within(Duration::from_secs(600), started, body, gap >= 0.05)
}

fn main() -> ExitCode {
    let strict = std::env::var("EDGEPOOL_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("property suite", Box::new(property_suite)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("gradient correctness", Box::new(|| gradient_correctness(tmp.path()))),
        ("unpool roundtrip", Box::new(roundtrip)),
        ("reduction ratio", Box::new(reduction_ratio)),
        ("scaling", Box::new(|| scaling(tmp.path()))),
        ("PROTEINS reproduction", Box::new(|| proteins(tmp.path()))),
        ("node task with MLP convolutions", Box::new(|| node_task(tmp.path()))),
    ];
    let mut failed = 0;
    let mut blocked = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Outcome::Pass(s) => format!("PASS    {s}"),
            Outcome::Fail(s) => {
                failed += 1;
                format!("FAIL    {s}")
            }
            Outcome::Blocked(s) => {
                blocked += 1;
                format!("BLOCKED {s}")
            }
        };
        println!("criterion {} [{name}]: {line}", i + 1);
    }
    println!(
        "criterion 9 [not-reproduced tables]: SKIPPED declared out of scope; large-graph and node-table rows are not rerun, \
         the mechanisms they rely on are exercised by criteria 1-8"
    );
    println!("acceptance: {failed} failed, {blocked} blocked");
    if failed > 0 || (strict && blocked > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
