//! Central finite-difference checks of every hand-written backward pass.
//!
//! Each case draws random small instances in `f64`, reduces the forward output
//! to a scalar with a random linear functional, and compares the analytic
//! gradient against `(L(x + ε) − L(x − ε)) / 2ε` coordinate by coordinate.
//! Pooling is only differentiable while the matching stays put, so instances
//! whose matching flips under a ±ε probe are redrawn.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{erdos_renyi, path_graph};
use crate::error::{Error, Result};
use crate::graph::{batch, Graph};
use crate::matrix::Matrix;
use crate::nn::layers::{
    batch_norm, batch_norm_backward, dense, dense_backward, mean_conv, mean_conv_backward,
    mean_pool_by, mean_pool_by_backward, softmax_cross_entropy, BATCH_NORM_EPS,
};
use crate::nn::{ConvKind, GraphClassifier, ModelConfig, NodeClassifier, ParamStore, Pass, Pooling};
use crate::pool::{edgepool_backward, edgepool_forward, ForwardOptions, PoolParams};
use crate::rng::{rng_for, Rng};
use crate::unpool::{unpool_backward, unpool_chain, unpool_once, unpool_score_grad, UnpoolPlan};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const LAYER_RTOL: f64 = 1e-4;
pub const LAYER_ATOL: f64 = 1e-7;
pub const MODEL_RTOL: f64 = 1e-3;
pub const ADJOINT_ATOL: f64 = 1e-8;
pub const EDGEPOOL_INSTANCES: usize = 20;

/// Which group of checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseSet {
    All,
    Edgepool,
    Unpool,
    Layers,
    Models,
}

impl FromStr for CaseSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Self::All,
            "edgepool" => Self::Edgepool,
            "unpool" => Self::Unpool,
            "layers" => Self::Layers,
            "models" => Self::Models,
            other => return Err(Error::InvalidParams(format!("unknown gradcheck case set {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub cases: CaseSet,
    pub eps: f64,
    /// Perturbs every analytic gradient before comparing; the checker must then fail.
    pub corrupt: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { seed: 0, cases: CaseSet::All, eps: DEFAULT_EPS, corrupt: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub instances: usize,
    pub coordinates: usize,
    /// Largest `|a − n| / max(|a|, |n|)` over coordinates whose magnitude exceeds `atol / rtol`.
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub rtol: f64,
    pub atol: f64,
    pub passed: bool,
}

impl fmt::Display for CaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} instances={:<3} coords={:<6} max_rel_err={:.3e} max_abs_err={:.3e} (rtol {:.0e}, atol {:.0e})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.instances,
            self.coordinates,
            self.max_rel_err,
            self.max_abs_err,
            self.rtol,
            self.atol,
        )
    }
}

/// Running comparison statistics for one case.
#[derive(Clone, Debug)]
pub struct Comparison {
    rtol: f64,
    atol: f64,
    instances: usize,
    coordinates: usize,
    max_rel: f64,
    max_abs: f64,
    passed: bool,
}

impl Comparison {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, instances: 0, coordinates: 0, max_rel: 0.0, max_abs: 0.0, passed: true }
    }

    pub fn add(&mut self, analytic: &[f64], numeric: &[f64]) {
        assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
        self.instances += 1;
        self.coordinates += analytic.len();
        for (&a, &n) in analytic.iter().zip(numeric) {
            let diff = (a - n).abs();
            let mag = a.abs().max(n.abs());
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
            if !(diff <= self.atol + self.rtol * mag) {
                self.passed = false;
            }
            self.max_abs = self.max_abs.max(diff);
            if mag > self.atol / self.rtol {
                self.max_rel = self.max_rel.max(diff / mag);
            }
            if diff.is_nan() {
                self.max_rel = f64::NAN;
            }
        }
    }

    pub fn report(&self, name: &str) -> CaseReport {
        CaseReport {
            name: name.to_string(),
            instances: self.instances,
            coordinates: self.coordinates,
            max_rel_err: self.max_rel,
            max_abs_err: self.max_abs,
            rtol: self.rtol,
            atol: self.atol,
            passed: self.passed && self.instances > 0,
        }
    }
}

/// Outcome of probing the objective at one point.
pub struct Probe {
    pub loss: f64,
    /// Discrete state the gradient is conditional on (e.g. the matching).
    pub signature: Vec<Vec<usize>>,
}

impl Probe {
    pub fn smooth(loss: f64) -> Self {
        Self { loss, signature: Vec::new() }
    }
}

/// Central differences of `f` at `x`. `None` when some probe leaves the
/// discrete state `f(x)` was evaluated in.
pub fn central_differences(
    mut f: impl FnMut(&[f64]) -> Result<Probe>,
    x: &[f64],
    eps: f64,
) -> Result<Option<Vec<f64>>> {
    let base = f(x)?.signature;
    let mut point = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        point[i] = x[i] + eps;
        let plus = f(&point)?;
        point[i] = x[i] - eps;
        let minus = f(&point)?;
        point[i] = x[i];
        if plus.signature != base || minus.signature != base {
            return Ok(None);
        }
        out.push((plus.loss - minus.loss) / (2.0 * eps));
    }
    Ok(Some(out))
}

fn corrupt_in_place(g: &mut [f64]) {
    if let Some(v) = g.first_mut() {
        *v += 1e-2 * (1.0 + v.abs());
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Splits a flat vector into consecutive row-major matrices.
fn unpack(x: &[f64], shapes: &[(usize, usize)]) -> Vec<Matrix<f64>> {
    let mut at = 0;
    shapes
        .iter()
        .map(|&(r, c)| {
            let m = Matrix::from_vec(r, c, x[at..at + r * c].to_vec()).expect("shape matches slice");
            at += r * c;
            m
        })
        .collect()
}

fn pack(parts: &[&Matrix<f64>]) -> Vec<f64> {
    parts.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
}

fn shapes(parts: &[&Matrix<f64>]) -> Vec<(usize, usize)> {
    parts.iter().map(|m| m.shape()).collect()
}

struct Checker {
    opts: GradcheckOptions,
    reports: Vec<CaseReport>,
}

impl Checker {
    /// Compares one instance; returns false if it was unstable and skipped.
    fn instance(
        &self,
        cmp: &mut Comparison,
        f: impl FnMut(&[f64]) -> Result<Probe>,
        x: &[f64],
        mut analytic: Vec<f64>,
    ) -> Result<bool> {
        let Some(numeric) = central_differences(f, x, self.opts.eps)? else {
            return Ok(false);
        };
        if self.opts.corrupt {
            corrupt_in_place(&mut analytic);
        }
        cmp.add(&analytic, &numeric);
        Ok(true)
    }

    fn push(&mut self, name: &str, cmp: &Comparison) {
        self.reports.push(cmp.report(name));
    }

    fn rng(&self, label: &str) -> Rng {
        rng_for(self.opts.seed, &format!("gradcheck.{label}"))
    }
}

/// Runs the selected checks and returns one report per case.
pub fn run(opts: &GradcheckOptions) -> Result<Vec<CaseReport>> {
    let mut c = Checker { opts: *opts, reports: Vec::new() };
    let want = |s: CaseSet| opts.cases == CaseSet::All || opts.cases == s;
    if want(CaseSet::Edgepool) {
        edgepool_case(&mut c, false)?;
        edgepool_case(&mut c, true)?;
    }
    if want(CaseSet::Unpool) {
        unpool_adjoint_case(&mut c)?;
        unpool_chain_case(&mut c)?;
    }
    if want(CaseSet::Layers) {
        dense_case(&mut c)?;
        mean_conv_case(&mut c, true)?;
        mean_conv_case(&mut c, false)?;
        batch_norm_case(&mut c)?;
        mean_pool_case(&mut c)?;
        cross_entropy_case(&mut c)?;
    }
    if want(CaseSet::Models) {
        graph_model_case(&mut c)?;
        node_model_case(&mut c)?;
    }
    Ok(c.reports)
}

pub fn all_passed(reports: &[CaseReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.passed)
}

/// Pooling with a score-coupled unpooling term:
/// `L = ⟨R1, P⟩ + ⟨R2, unpool(P ∘ P)⟩`, where `P` are the pooled features.
/// The second term depends on the gating scores through the division in
/// unpooling, exercising the score-gradient path.
fn edgepool_case(c: &mut Checker, edge_features: bool) -> Result<()> {
    let name = if edge_features { "edgepool.edge_features" } else { "edgepool" };
    let mut rng = c.rng(name);
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    let (n, f, fe) = (10, 3, 2);
    let mut attempts = 0;
    while cmp.instances < EDGEPOOL_INSTANCES {
        attempts += 1;
        if attempts > 50 * EDGEPOOL_INSTANCES {
            return Err(Error::InvalidParams(format!("{name}: could not draw stable instances")));
        }
        let mut graph: Graph<f64> = erdos_renyi(n, 0.35, f, &mut rng)?;
        if graph.num_edges() == 0 {
            continue;
        }
        if edge_features {
            let ef = gaussian(graph.num_edges(), fe, &mut rng);
            graph = Graph::build(n, graph.edges(), graph.node_features().clone(), Some(ef))?;
        }
        let ew = edge_features.then_some(fe);
        let params = PoolParams::<f64>::random(f, ew, &mut rng);
        let opts = ForwardOptions::default();
        let base = edgepool_forward(&graph, &params, &opts)?;
        let p = base.pooled.node_features().clone();
        let r1 = gaussian(p.rows(), f, &mut rng);
        let r2 = gaussian(n, f, &mut rng);

        let sq = p.map(|v| v * v);
        let g_sq = unpool_backward(&r2, &base.info)?;
        let sg = unpool_score_grad(&sq, &r2, &base.info)?;
        let mut upstream = r1.clone();
        upstream.add_assign(&Matrix::from_fn(p.rows(), f, |i, t| 2.0 * p[(i, t)] * g_sq[(i, t)]))?;
        let g = edgepool_backward(&graph, &params, &base.info, &base.scores, &upstream, Some(&sg))?;

        let weight = Matrix::from_vec(1, params.weight.len(), params.weight.clone())?;
        let bias = Matrix::filled(1, 1, params.bias);
        let parts = [graph.node_features(), &weight, &bias];
        let layout = shapes(&parts);
        let x0 = pack(&parts);
        let mut analytic = g.node_features.into_vec();
        analytic.extend(&g.weight);
        analytic.push(g.bias);

        let objective = |x: &[f64]| -> Result<Probe> {
            let m = unpack(x, &layout);
            let gx = graph.with_node_features(m[0].clone())?;
            let pp = PoolParams::new(f, ew, m[1].as_slice().to_vec(), m[2][(0, 0)])?;
            let out = edgepool_forward(&gx, &pp, &opts)?;
            let signature = vec![out.info.matched_edges.clone()];
            let pooled = out.pooled.node_features();
            if pooled.shape() != r1.shape() {
                return Ok(Probe { loss: f64::NAN, signature });
            }
            let u = unpool_once(&pooled.map(|v| v * v), &out.info)?;
            Ok(Probe { loss: Matrix::dot(&r1, pooled)? + Matrix::dot(&r2, &u)?, signature })
        };
        c.instance(&mut cmp, objective, &x0, analytic)?;
    }
    c.push(name, &cmp);
    Ok(())
}

/// `⟨unpool(P), G⟩ = ⟨P, unpoolᵀ(G)⟩` on random pooled graphs.
fn unpool_adjoint_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("unpool.adjoint");
    let mut cmp = Comparison::new(0.0, ADJOINT_ATOL);
    for _ in 0..EDGEPOOL_INSTANCES {
        let n = rng.random_range(2..30);
        let graph: Graph<f64> = erdos_renyi(n, 0.3, 4, &mut rng)?;
        let params = PoolParams::random(4, None, &mut rng);
        let out = edgepool_forward(&graph, &params, &ForwardOptions::default())?;
        let p = gaussian(out.info.pooled_num_nodes, 3, &mut rng);
        let g = gaussian(n, 3, &mut rng);
        let lhs = Matrix::dot(&unpool_once(&p, &out.info)?, &g)?;
        let mut rhs = Matrix::dot(&p, &unpool_backward(&g, &out.info)?)?;
        if c.opts.corrupt {
            rhs += 1e-2 * (1.0 + rhs.abs());
        }
        cmp.add(&[rhs], &[lhs]);
    }
    c.push("unpool.adjoint", &cmp);
    Ok(())
}

/// Two pooling levels, then unpooling through both, differentiated w.r.t.
/// the coarsest features.
fn unpool_chain_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("unpool.chain");
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..EDGEPOOL_INSTANCES {
        let graph: Graph<f64> = erdos_renyi(12, 0.3, 3, &mut rng)?;
        let p1 = PoolParams::random(3, None, &mut rng);
        let p2 = PoolParams::random(3, None, &mut rng);
        let l1 = edgepool_forward(&graph, &p1, &ForwardOptions::default())?;
        let l2 = edgepool_forward(&l1.pooled, &p2, &ForwardOptions::default())?;
        let coarse = l2.pooled.node_features().clone();
        let plan = UnpoolPlan::new(vec![l1.info.clone(), l2.info.clone()])?;
        let r = gaussian(12, 3, &mut rng);
        // L = ⟨R, unpool_chain(X ∘ X)⟩
        let g_sq = unpool_backward(&unpool_backward(&r, &l1.info)?, &l2.info)?;
        let analytic: Vec<f64> =
            coarse.as_slice().iter().zip(g_sq.as_slice()).map(|(x, g)| 2.0 * x * g).collect();
        let shape = coarse.shape();
        let objective = |x: &[f64]| -> Result<Probe> {
            let m = Matrix::from_vec(shape.0, shape.1, x.to_vec())?;
            Ok(Probe::smooth(Matrix::dot(&r, &unpool_chain(&m.map(|v| v * v), &plan)?)?))
        };
        c.instance(&mut cmp, objective, coarse.as_slice(), analytic)?;
    }
    c.push("unpool.chain", &cmp);
    Ok(())
}

fn dense_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("dense");
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..5 {
        let (n, i, o) = (rng.random_range(1..6), rng.random_range(1..5), rng.random_range(1..5));
        let x = gaussian(n, i, &mut rng);
        let w = gaussian(i, o, &mut rng);
        let b = gaussian(1, o, &mut rng);
        let r = gaussian(n, o, &mut rng);
        let g = dense_backward(&x, &w, &r)?;
        let parts = [&x, &w, &b];
        let layout = shapes(&parts);
        let objective = |v: &[f64]| -> Result<Probe> {
            let m = unpack(v, &layout);
            Ok(Probe::smooth(Matrix::dot(&r, &dense(&m[0], &m[1], &m[2])?)?))
        };
        c.instance(&mut cmp, objective, &pack(&parts), pack(&[&g.x, &g.w, &g.b]))?;
    }
    c.push("layers.dense", &cmp);
    Ok(())
}

fn mean_conv_case(c: &mut Checker, with_neighbors: bool) -> Result<()> {
    let name = if with_neighbors { "layers.mean_conv" } else { "layers.mean_conv.self_only" };
    let mut rng = c.rng(name);
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..5 {
        let (n, i, o) = (8, 3, 4);
        let mut graph: Graph<f64> = erdos_renyi(n, 0.3, i, &mut rng)?;
        // one-way edges too, so in- and out-neighborhoods differ
        let extra = graph.edges().iter().copied().chain([(0, 7)]).collect::<Vec<_>>();
        if graph.topology().edge_index(0, 7).is_none() {
            graph = Graph::build(n, &extra, graph.node_features().clone(), None)?;
        }
        let topo = graph.topology().clone();
        let x = graph.node_features().clone();
        let ws = gaussian(i, o, &mut rng);
        let wn = gaussian(i, o, &mut rng);
        let b = gaussian(1, o, &mut rng);
        let r = gaussian(n, o, &mut rng);
        let wn_opt = with_neighbors.then_some(&wn);
        let (_, agg) = mean_conv(&topo, &x, &ws, wn_opt, &b)?;
        let g = mean_conv_backward(&topo, &x, agg.as_ref(), &ws, wn_opt, &r)?;
        let mut parts = vec![&x, &ws, &b];
        let mut grads = vec![&g.x, &g.w_self, &g.b];
        if let Some(gn) = g.w_neigh.as_ref() {
            parts.push(&wn);
            grads.push(gn);
        }
        let layout = shapes(&parts);
        let objective = |v: &[f64]| -> Result<Probe> {
            let m = unpack(v, &layout);
            let (y, _) = mean_conv(&topo, &m[0], &m[1], m.get(3), &m[2])?;
            Ok(Probe::smooth(Matrix::dot(&r, &y)?))
        };
        c.instance(&mut cmp, objective, &pack(&parts), pack(&grads))?;
    }
    c.push(name, &cmp);
    Ok(())
}

fn batch_norm_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("batch_norm");
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..5 {
        let (n, k) = (rng.random_range(2..9), rng.random_range(1..5));
        let x = gaussian(n, k, &mut rng);
        let gamma = gaussian(1, k, &mut rng);
        let beta = gaussian(1, k, &mut rng);
        let r = gaussian(n, k, &mut rng);
        let (_, cache) = batch_norm(&x, &gamma, &beta, BATCH_NORM_EPS)?;
        let g = batch_norm_backward(&cache, &gamma, &r);
        let parts = [&x, &gamma, &beta];
        let layout = shapes(&parts);
        let objective = |v: &[f64]| -> Result<Probe> {
            let m = unpack(v, &layout);
            let (y, _) = batch_norm(&m[0], &m[1], &m[2], BATCH_NORM_EPS)?;
            Ok(Probe::smooth(Matrix::dot(&r, &y)?))
        };
        c.instance(&mut cmp, objective, &pack(&parts), pack(&[&g.x, &g.gamma, &g.beta]))?;
    }
    c.push("layers.batch_norm", &cmp);
    Ok(())
}

fn mean_pool_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("global_mean_pool");
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..5 {
        let sizes: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..6)).collect();
        let graphs: Vec<Graph<f64>> =
            sizes.iter().map(|&s| path_graph(s, 3, &mut rng)).collect::<Result<_>>()?;
        let b = batch(&graphs.iter().collect::<Vec<_>>())?;
        let x = b.graph.node_features().clone();
        let r = gaussian(b.num_graphs, 3, &mut rng);
        let analytic = mean_pool_by_backward(&b.graph_id, b.num_graphs, &r).into_vec();
        let shape = x.shape();
        let objective = |v: &[f64]| -> Result<Probe> {
            let m = Matrix::from_vec(shape.0, shape.1, v.to_vec())?;
            Ok(Probe::smooth(Matrix::dot(&r, &mean_pool_by(&b.graph_id, b.num_graphs, &m)?)?))
        };
        c.instance(&mut cmp, objective, x.as_slice(), analytic)?;
    }
    c.push("layers.global_mean_pool", &cmp);
    Ok(())
}

fn cross_entropy_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("cross_entropy");
    let mut cmp = Comparison::new(LAYER_RTOL, LAYER_ATOL);
    for _ in 0..5 {
        let (n, k) = (rng.random_range(1..6), rng.random_range(2..5));
        let logits = gaussian(n, k, &mut rng).scale(3.0);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let (_, g) = softmax_cross_entropy(&logits, &labels)?;
        let objective = |v: &[f64]| -> Result<Probe> {
            let m = Matrix::from_vec(n, k, v.to_vec())?;
            Ok(Probe::smooth(softmax_cross_entropy(&m, &labels)?.0))
        };
        c.instance(&mut cmp, objective, logits.as_slice(), g.into_vec())?;
    }
    c.push("layers.cross_entropy", &cmp);
    Ok(())
}

fn toy_config(in_width: usize, conv: ConvKind) -> ModelConfig {
    ModelConfig {
        in_width,
        channels: 4,
        num_classes: 3,
        pooling: Pooling::Edgepool,
        conv,
        dropout_p: 0.5,
        edge_score_dropout_p: 0.2,
    }
}

/// Cross-entropy of the whole graph classifier w.r.t. every parameter.
fn graph_model_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("graph_classifier");
    let mut cmp = Comparison::new(MODEL_RTOL, LAYER_ATOL);
    let mut attempts = 0;
    while cmp.instances < 3 {
        attempts += 1;
        if attempts > 50 {
            return Err(Error::InvalidParams("graph classifier: could not draw stable instances".into()));
        }
        let graphs: Vec<Graph<f64>> = (0..2).map(|_| erdos_renyi(6, 0.5, 3, &mut rng)).collect::<Result<_>>()?;
        let b = batch(&graphs.iter().collect::<Vec<_>>())?;
        let labels = vec![rng.random_range(0..3), rng.random_range(0..3)];
        let mut store = ParamStore::<f64>::new();
        let model = GraphClassifier::new(toy_config(3, ConvKind::Mean), &mut store, &mut rng)?;
        // non-trivial biases and affine parameters
        let mut x0 = store.flat_values();
        x0.iter_mut().for_each(|v| *v += 0.1 * rng.sample::<f64, _>(StandardNormal));
        store.set_flat_values(&x0)?;
        let fwd = match model.forward(&store, &b, Pass::eval()) {
            Ok(f) => f,
            Err(Error::TooFewRows(_)) => continue,
            Err(e) => return Err(e),
        };
        let (_, grad) = softmax_cross_entropy(&fwd.logits, &labels)?;
        store.zero_grad();
        model.backward(&mut store, &fwd, &grad)?;
        let analytic = store.flat_grads();
        let mut probe_store = store.clone();
        let objective = |v: &[f64]| -> Result<Probe> {
            probe_store.set_flat_values(v)?;
            let f = model.forward(&probe_store, &b, Pass::eval())?;
            Ok(Probe { loss: softmax_cross_entropy(&f.logits, &labels)?.0, signature: f.matchings() })
        };
        c.instance(&mut cmp, objective, &x0, analytic)?;
    }
    c.push("models.graph_classifier", &cmp);
    Ok(())
}

/// Masked cross-entropy of the node classifier w.r.t. every parameter.
fn node_model_case(c: &mut Checker) -> Result<()> {
    let mut rng = c.rng("node_classifier");
    let mut cmp = Comparison::new(MODEL_RTOL, LAYER_ATOL);
    let mut attempts = 0;
    while cmp.instances < 3 {
        attempts += 1;
        if attempts > 50 {
            return Err(Error::InvalidParams("node classifier: could not draw stable instances".into()));
        }
        let graph: Graph<f64> = erdos_renyi(12, 0.35, 3, &mut rng)?;
        let labels: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
        let mut store = ParamStore::<f64>::new();
        let model = NodeClassifier::new(toy_config(3, ConvKind::Mean), &mut store, &mut rng)?;
        let mut x0 = store.flat_values();
        x0.iter_mut().for_each(|v| *v += 0.1 * rng.sample::<f64, _>(StandardNormal));
        store.set_flat_values(&x0)?;
        let fwd = match model.forward(&store, &graph, Pass::eval()) {
            Ok(f) => f,
            Err(Error::TooFewRows(_)) => continue,
            Err(e) => return Err(e),
        };
        let (_, grad) = softmax_cross_entropy(&fwd.logits, &labels)?;
        store.zero_grad();
        model.backward(&mut store, &fwd, &grad)?;
        let analytic = store.flat_grads();
        let mut probe_store = store.clone();
        let objective = |v: &[f64]| -> Result<Probe> {
            probe_store.set_flat_values(v)?;
            let f = model.forward(&probe_store, &graph, Pass::eval())?;
            Ok(Probe { loss: softmax_cross_entropy(&f.logits, &labels)?.0, signature: f.matchings() })
        };
        c.instance(&mut cmp, objective, &x0, analytic)?;
    }
    c.push("models.node_classifier", &cmp);
    Ok(())
}
