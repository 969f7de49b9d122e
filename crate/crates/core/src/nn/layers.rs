//! Layer kernels with hand-written backward passes.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{BatchedGraph, Topology};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

pub const BATCH_NORM_EPS: f64 = 1e-5;

/// `y = x·W + b`
pub fn dense<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let mut y = x.matmul(w)?;
    y.add_row_broadcast(b)?;
    Ok(y)
}

pub struct DenseGrads<T> {
    pub x: Matrix<T>,
    pub w: Matrix<T>,
    pub b: Matrix<T>,
}

pub fn dense_backward<T: Scalar>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    gy: &Matrix<T>,
) -> Result<DenseGrads<T>> {
    Ok(DenseGrads { x: gy.matmul_t(w)?, w: x.t_matmul(gy)?, b: gy.col_sums() })
}

/// Mean of in-neighbor rows; zero for nodes without in-neighbors.
pub fn neighbor_mean<T: Scalar>(topo: &Topology, x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.rows() != topo.num_nodes() {
        return Err(Error::dims(format!(
            "{} feature rows for {} nodes",
            x.rows(),
            topo.num_nodes()
        )));
    }
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for j in 0..topo.num_nodes() {
        let ins = topo.in_edges(j);
        if ins.is_empty() {
            continue;
        }
        let o = out.row_mut(j);
        for &e in ins {
            for (ov, &v) in o.iter_mut().zip(x.row(topo.edges()[e].0)) {
                *ov += v;
            }
        }
        let inv = T::one() / T::lit(ins.len() as f64);
        for ov in o.iter_mut() {
            *ov *= inv;
        }
    }
    Ok(out)
}

/// Adjoint of [`neighbor_mean`].
pub fn neighbor_mean_backward<T: Scalar>(topo: &Topology, g: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(g.rows(), g.cols());
    for j in 0..topo.num_nodes() {
        let ins = topo.in_edges(j);
        if ins.is_empty() {
            continue;
        }
        let inv = T::one() / T::lit(ins.len() as f64);
        for &e in ins {
            let src = topo.edges()[e].0;
            for t in 0..g.cols() {
                let v = g[(j, t)] * inv;
                out[(src, t)] += v;
            }
        }
    }
    out
}

/// Mean-aggregation graph convolution:
/// `y_i = x_i·W_self + mean_{k→i} x_k·W_neigh + b`.
/// Without `w_neigh` the layer is node-independent.
pub fn mean_conv<T: Scalar>(
    topo: &Topology,
    x: &Matrix<T>,
    w_self: &Matrix<T>,
    w_neigh: Option<&Matrix<T>>,
    b: &Matrix<T>,
) -> Result<(Matrix<T>, Option<Matrix<T>>)> {
    let mut y = dense(x, w_self, b)?;
    let agg = match w_neigh {
        Some(wn) => {
            let agg = neighbor_mean(topo, x)?;
            y.add_assign(&agg.matmul(wn)?)?;
            Some(agg)
        }
        None => {
            if x.rows() != topo.num_nodes() {
                return Err(Error::dims("feature rows vs node count"));
            }
            None
        }
    };
    Ok((y, agg))
}

pub struct ConvGrads<T> {
    pub x: Matrix<T>,
    pub w_self: Matrix<T>,
    pub w_neigh: Option<Matrix<T>>,
    pub b: Matrix<T>,
}

pub fn mean_conv_backward<T: Scalar>(
    topo: &Topology,
    x: &Matrix<T>,
    agg: Option<&Matrix<T>>,
    w_self: &Matrix<T>,
    w_neigh: Option<&Matrix<T>>,
    gy: &Matrix<T>,
) -> Result<ConvGrads<T>> {
    let d = dense_backward(x, w_self, gy)?;
    let mut gx = d.x;
    let gw_neigh = match (agg, w_neigh) {
        (Some(agg), Some(wn)) => {
            let g_agg = gy.matmul_t(wn)?;
            gx.add_assign(&neighbor_mean_backward(topo, &g_agg))?;
            Some(agg.t_matmul(gy)?)
        }
        (None, None) => None,
        _ => return Err(Error::dims("neighbor weight and aggregate must come together")),
    };
    Ok(ConvGrads { x: gx, w_self: d.w, w_neigh: gw_neigh, b: d.b })
}

pub struct BatchNormCache<T> {
    xhat: Matrix<T>,
    inv_std: Vec<f64>,
}

/// Per-column standardization with the statistics of `x` itself, followed by
/// `gamma`/`beta`. There are no running statistics: evaluation also uses the
/// current batch.
pub fn batch_norm<T: Scalar>(
    x: &Matrix<T>,
    gamma: &Matrix<T>,
    beta: &Matrix<T>,
    eps: f64,
) -> Result<(Matrix<T>, BatchNormCache<T>)> {
    let (n, c) = x.shape();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if gamma.shape() != (1, c) || beta.shape() != (1, c) {
        return Err(Error::dims("batch norm affine parameters"));
    }
    let mut mean = vec![0.0f64; c];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v.acc();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0f64; c];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            let d = v.acc() - m;
            *s += d * d;
        }
    }
    let inv_std: Vec<f64> = var.iter().map(|s| 1.0 / (s / n as f64 + eps).sqrt()).collect();
    let xhat = Matrix::from_fn(n, c, |i, t| T::lit((x[(i, t)].acc() - mean[t]) * inv_std[t]));
    let y = Matrix::from_fn(n, c, |i, t| gamma[(0, t)] * xhat[(i, t)] + beta[(0, t)]);
    Ok((y, BatchNormCache { xhat, inv_std }))
}

pub struct BatchNormGrads<T> {
    pub x: Matrix<T>,
    pub gamma: Matrix<T>,
    pub beta: Matrix<T>,
}

pub fn batch_norm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    gamma: &Matrix<T>,
    gy: &Matrix<T>,
) -> BatchNormGrads<T> {
    let (n, c) = gy.shape();
    let mut sum_g = vec![0.0f64; c];
    let mut sum_gx = vec![0.0f64; c];
    for i in 0..n {
        for t in 0..c {
            let g = gy[(i, t)].acc();
            sum_g[t] += g;
            sum_gx[t] += g * cache.xhat[(i, t)].acc();
        }
    }
    let nf = n as f64;
    let gx = Matrix::from_fn(n, c, |i, t| {
        let g = gy[(i, t)].acc();
        let xh = cache.xhat[(i, t)].acc();
        let scale = gamma[(0, t)].acc() * cache.inv_std[t] / nf;
        T::lit(scale * (nf * g - sum_g[t] - xh * sum_gx[t]))
    });
    BatchNormGrads {
        x: gx,
        gamma: Matrix::from_fn(1, c, |_, t| T::lit(sum_gx[t])),
        beta: Matrix::from_fn(1, c, |_, t| T::lit(sum_g[t])),
    }
}

pub fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| v.max(T::zero()))
}

/// Gradient through a ReLU given its output.
pub fn relu_backward<T: Scalar>(y: &Matrix<T>, gy: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(y.rows(), y.cols(), |i, j| {
        if y[(i, j)] > T::zero() {
            gy[(i, j)]
        } else {
            T::zero()
        }
    })
}

/// Inverted dropout mask: entries are `0` or `1/(1-p)`.
pub fn dropout_mask<T: Scalar>(rows: usize, cols: usize, p: f64, rng: &mut Rng) -> Result<Matrix<T>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let keep = T::lit(1.0 / (1.0 - p));
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        if p > 0.0 && rng.random::<f64>() < p {
            T::zero()
        } else {
            keep
        }
    }))
}

pub fn hadamard<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    debug_assert_eq!(a.shape(), b.shape());
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * b[(i, j)])
}

/// Row `g` is the mean of rows assigned to group `g`.
pub fn mean_pool_by<T: Scalar>(
    assignment: &[usize],
    num_groups: usize,
    x: &Matrix<T>,
) -> Result<Matrix<T>> {
    if assignment.len() != x.rows() {
        return Err(Error::dims(format!(
            "{} assignments for {} rows",
            assignment.len(),
            x.rows()
        )));
    }
    let mut counts = vec![0usize; num_groups];
    let mut out = Matrix::zeros(num_groups, x.cols());
    for (i, &g) in assignment.iter().enumerate() {
        if g >= num_groups {
            return Err(Error::IndexOutOfRange { index: g, num_nodes: num_groups });
        }
        counts[g] += 1;
        for (o, &v) in out.row_mut(g).iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyGraph(g));
        }
        let inv = T::one() / T::lit(c as f64);
        out.row_mut(g).iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

pub fn mean_pool_by_backward<T: Scalar>(
    assignment: &[usize],
    num_groups: usize,
    g: &Matrix<T>,
) -> Matrix<T> {
    let mut counts = vec![0usize; num_groups];
    for &a in assignment {
        counts[a] += 1;
    }
    Matrix::from_fn(assignment.len(), g.cols(), |i, t| {
        let a = assignment[i];
        g[(a, t)] / T::lit(counts[a] as f64)
    })
}

/// Per-graph mean of node features.
pub fn global_mean_pool<T: Scalar>(batched: &BatchedGraph<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    mean_pool_by(&batched.graph_id, batched.num_graphs, x)
}

/// Mean cross-entropy of `softmax(logits)` against `labels`, with its gradient.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(f64, Matrix<T>)> {
    let (n, c) = logits.shape();
    if labels.len() != n {
        return Err(Error::dims(format!("{} labels for {n} rows", labels.len())));
    }
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(n, c);
    for (i, &label) in labels.iter().enumerate() {
        if label >= c {
            return Err(Error::LabelOutOfRange { label, num_classes: c });
        }
        let row = logits.row(i);
        let top = argmax(row);
        let max = row[top].acc();
        // the max term contributes exactly 1; ln_1p keeps tiny losses accurate
        let rest: f64 = row
            .iter()
            .enumerate()
            .filter(|&(t, _)| t != top)
            .map(|(_, v)| (v.acc() - max).exp())
            .sum();
        let lse = max + rest.ln_1p();
        loss += (max - row[label].acc()) + rest.ln_1p();
        for (t, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = (row[t].acc() - lse).exp();
            let target = if t == label { 1.0 } else { 0.0 };
            *g = T::lit((p - target) / n as f64);
        }
    }
    Ok((loss / n.max(1) as f64, grad))
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (t, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = t;
        }
    }
    best
}

pub fn argmax_rows<T: Scalar>(x: &Matrix<T>) -> Vec<usize> {
    (0..x.rows()).map(|i| argmax(x.row(i))).collect()
}
