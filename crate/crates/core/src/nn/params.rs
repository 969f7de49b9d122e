use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
    m: Matrix<T>,
    v: Matrix<T>,
}

/// Named parameters with gradient accumulators and Adam moments.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    index: BTreeMap<String, usize>,
}

/// Handle returned by [`ParamStore::add`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(usize);

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new(), index: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, value: Matrix<T>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidParams(format!("duplicate parameter name {name}")));
        }
        let (r, c) = value.shape();
        let id = self.params.len();
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
        });
        self.index.insert(name.to_string(), id);
        Ok(ParamId(id))
    }

    /// Glorot-uniform matrix of the given shape.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut Rng) -> Result<ParamId> {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let value = Matrix::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-limit..=limit)));
        self.add(name, value)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].grad
    }

    pub fn accumulate(&mut self, id: ParamId, g: &Matrix<T>) -> Result<()> {
        self.params[id.0].grad.add_assign(g)
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.as_mut_slice().fill(T::zero());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.as_slice().len()).sum()
    }

    /// All parameter values flattened in registration order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.as_slice().iter().map(|v| v.acc())).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.grad.as_slice().iter().map(|v| v.acc())).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::dims("flat parameter vector length"));
        }
        let mut it = flat.iter();
        for p in &mut self.params {
            for v in p.value.as_mut_slice() {
                *v = T::lit(*it.next().unwrap());
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> BTreeMap<String, TensorRecord> {
        self.params
            .iter()
            .map(|p| {
                let (r, c) = p.value.shape();
                let data = p.value.as_slice().iter().map(|v| v.acc()).collect();
                (p.name.clone(), TensorRecord { shape: vec![r, c], data })
            })
            .collect()
    }

    /// Overwrites values from a checkpoint; names and shapes must match exactly.
    pub fn load_record(&mut self, rec: &BTreeMap<String, TensorRecord>) -> Result<()> {
        if rec.len() != self.params.len() {
            return Err(Error::InvalidParams(format!(
                "checkpoint has {} tensors, model has {}",
                rec.len(),
                self.params.len()
            )));
        }
        for p in &mut self.params {
            let t = rec
                .get(&p.name)
                .ok_or_else(|| Error::InvalidParams(format!("missing tensor {}", p.name)))?;
            let (r, c) = p.value.shape();
            if t.shape != [r, c] || t.data.len() != r * c {
                return Err(Error::dims(format!("tensor {} shape {:?}", p.name, t.shape)));
            }
            for (v, &d) in p.value.as_mut_slice().iter_mut().zip(&t.data) {
                *v = T::lit(d);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of every parameter. `t` counts steps from 1.
pub fn adam_step<T: Scalar>(store: &mut ParamStore<T>, lr: f64, cfg: &AdamConfig, t: u64) {
    assert!(t >= 1, "adam step counter starts at 1");
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let (nb1, nb2) = (T::lit(1.0 - cfg.beta1), T::lit(1.0 - cfg.beta2));
    for p in &mut store.params {
        let grads = p.grad.as_slice();
        let m = p.m.as_mut_slice();
        let v = p.v.as_mut_slice();
        for (k, w) in p.value.as_mut_slice().iter_mut().enumerate() {
            let g = grads[k];
            m[k] = b1 * m[k] + nb1 * g;
            v[k] = b2 * v[k] + nb2 * g * g;
            let mhat = m[k].acc() / c1;
            let vhat = v[k].acc() / c2;
            *w -= T::lit(lr * mhat / (vhat.sqrt() + cfg.eps));
        }
    }
}

/// Step schedule: `base · 0.5^⌊epoch / period⌋`.
pub fn learning_rate(base: f64, epoch: usize, halving_period: usize) -> f64 {
    base * 0.5f64.powi((epoch / halving_period.max(1)) as i32)
}
