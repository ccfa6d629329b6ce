//! Two-layer graph convolutional classifier with Top-K pooling, mean readout
//! and an MLP head, with hand-written reverse-mode gradients.
//!
//! All parameters live in one flat vector; [`TENSORS`] gives the layout.

mod io;
mod train;

pub use io::{embeddings_csv, Checkpoint, Tensor, CHECKPOINT_SCHEMA};
pub use train::{
    evaluate, train, Adam, Corpus, EpochStats, Evaluation, Sample, TrainConfig, TrainHistory,
};

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::EncodedGraph;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("dimension mismatch ({what}): expected {expected}, got {got}")]
    DimensionMismatch { what: String, expected: usize, got: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("empty batch")]
    EmptyBatch,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty training split: {0}")]
    EmptySplit(String),
    #[error("nothing to evaluate")]
    EmptyEval,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Tensor names in layout order.
pub const TENSORS: [&str; 9] = [
    "gcn1.weight",
    "gcn1.bias",
    "gcn2.weight",
    "gcn2.bias",
    "pool.score",
    "mlp1.weight",
    "mlp1.bias",
    "mlp2.weight",
    "mlp2.bias",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub hidden: usize,
    pub num_classes: usize,
    /// Top-K keep ratio; `None` disables pooling (mean over all nodes).
    pub pool_ratio: Option<f64>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        if self.feature_dim == 0 || self.hidden == 0 || self.num_classes == 0 {
            return Err(GnnError::InvalidConfig(format!("zero dimension in {self:?}")));
        }
        if let Some(r) = self.pool_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(GnnError::InvalidConfig(format!("pool ratio {r} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// `(rows, cols)` of every tensor, in [`TENSORS`] order.
    pub fn shapes(&self) -> [(usize, usize); 9] {
        let (f, h, k) = (self.feature_dim, self.hidden, self.num_classes);
        [(f, h), (1, h), (h, h), (1, h), (1, h), (h, h), (1, h), (h, k), (1, k)]
    }

    fn offsets(&self) -> [usize; 10] {
        let mut off = [0; 10];
        for (i, (r, c)) in self.shapes().iter().enumerate() {
            off[i + 1] = off[i] + r * c;
        }
        off
    }

    pub fn num_params(&self) -> usize {
        self.offsets()[9]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    offsets: [usize; 10],
    params: Vec<f64>,
}

/// Result of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    /// Row-major `N × H` output of the second convolution.
    pub node_embeddings: Vec<f64>,
    /// Pooling scores `σ(h·p/‖p‖)` (all ones without pooling).
    pub scores: Vec<f64>,
    /// Nodes kept by pooling, highest score first.
    pub kept: Vec<usize>,
    pub readout: Vec<f64>,
    pub logits: Vec<f64>,
}

struct Cache {
    a1: Vec<f64>,
    z1: Vec<f64>,
    a2: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    scores: Vec<f64>,
    kept: Vec<usize>,
    pnorm: f64,
    readout: Vec<f64>,
    z3: Vec<f64>,
    h3: Vec<f64>,
    logits: Vec<f64>,
}

/// Per-sample results of one batch.
pub(crate) struct BatchStep {
    pub losses: Vec<f64>,
    pub predictions: Vec<usize>,
    pub decay: f64,
    pub grad: Vec<f64>,
}

/// `a (n×k) · b (k×m) + bias`, row-major.
fn matmul_bias(a: &[f64], n: usize, k: usize, b: &[f64], m: usize, bias: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        out.extend_from_slice(bias);
        let row = &mut out[i * m..(i + 1) * m];
        for (t, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av != 0.0 {
                for (o, &bv) in row.iter_mut().zip(&b[t * m..(t + 1) * m]) {
                    *o += av * bv;
                }
            }
        }
    }
    out
}

/// `dw += aᵀ · dz`, `db += Σ_rows dz`.
fn accumulate_weight_grad(a: &[f64], dz: &[f64], n: usize, k: usize, m: usize, dw: &mut [f64], db: &mut [f64]) {
    for i in 0..n {
        let dzi = &dz[i * m..(i + 1) * m];
        for (d, &g) in db.iter_mut().zip(dzi) {
            *d += g;
        }
        for (t, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av != 0.0 {
                for (d, &g) in dw[t * m..(t + 1) * m].iter_mut().zip(dzi) {
                    *d += av * g;
                }
            }
        }
    }
}

/// `dz (n×m) · wᵀ` with `w` of shape `k×m`.
fn matmul_transposed(dz: &[f64], n: usize, m: usize, w: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * k];
    for i in 0..n {
        let dzi = &dz[i * m..(i + 1) * m];
        for t in 0..k {
            out[i * k + t] = dot(dzi, &w[t * m..(t + 1) * m]);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `−log softmax(logits)[label]`
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Index of the largest logit, first on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Number of nodes Top-K keeps out of `n`.
pub fn pool_keep(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).ceil() as usize).clamp(1, n.max(1))
}

impl Model {
    /// Glorot-uniform weights, zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Model, GnnError> {
        let mut model = Model::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, name) in TENSORS.iter().enumerate() {
            if name.ends_with(".bias") {
                continue;
            }
            let (r, c) = config.shapes()[i];
            // the score vector acts as an H×1 projection
            let (fan_in, fan_out) = if *name == "pool.score" { (c, 1) } else { (r, c) };
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut model.params[model.offsets[i]..model.offsets[i + 1]] {
                *p = rng.gen_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(config: ModelConfig) -> Result<Model, GnnError> {
        Model::from_params(config, vec![0.0; config.num_params()])
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Model, GnnError> {
        config.validate()?;
        if params.len() != config.num_params() {
            return Err(GnnError::DimensionMismatch {
                what: "parameter count".into(),
                expected: config.num_params(),
                got: params.len(),
            });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(GnnError::InvalidConfig(format!("parameter {i} is not finite")));
        }
        Ok(Model {
            offsets: config.offsets(),
            config,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Range of tensor `name` inside the flat parameter vector.
    pub fn tensor_range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let i = TENSORS.iter().position(|t| *t == name)?;
        Some(self.offsets[i]..self.offsets[i + 1])
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.tensor_range(name).map(|r| &self.params[r])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        self.tensor_range(name).map(|r| &mut self.params[r])
    }

    fn slice(&self, i: usize) -> &[f64] {
        &self.params[self.offsets[i]..self.offsets[i + 1]]
    }

    fn check_graph(&self, g: &EncodedGraph) -> Result<(), GnnError> {
        if g.num_nodes == 0 {
            return Err(GnnError::EmptyGraph);
        }
        if g.feature_dim() != self.config.feature_dim || g.features.len() != g.num_nodes * g.feature_dim() {
            return Err(GnnError::DimensionMismatch {
                what: "node feature width".into(),
                expected: self.config.feature_dim,
                got: g.feature_dim(),
            });
        }
        Ok(())
    }

    fn run(&self, g: &EncodedGraph) -> Result<Cache, GnnError> {
        self.check_graph(g)?;
        let (f, h, k) = (self.config.feature_dim, self.config.hidden, self.config.num_classes);
        let n = g.num_nodes;
        let a1 = g.norm_adj.aggregate(&g.features, f);
        let z1 = matmul_bias(&a1, n, f, self.slice(0), h, self.slice(1));
        let h1 = relu(&z1);
        let a2 = g.norm_adj.aggregate(&h1, h);
        let z2 = matmul_bias(&a2, n, h, self.slice(2), h, self.slice(3));
        let h2 = relu(&z2);

        let (scores, kept, pnorm) = match self.config.pool_ratio {
            Some(ratio) => {
                let p = self.slice(4);
                let pnorm = dot(p, p).sqrt();
                let scores: Vec<f64> = (0..n)
                    .map(|i| {
                        let u = if pnorm > 0.0 { dot(&h2[i * h..(i + 1) * h], p) / pnorm } else { 0.0 };
                        sigmoid(u)
                    })
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                order.truncate(pool_keep(ratio, n));
                (scores, order, pnorm)
            }
            None => (vec![1.0; n], (0..n).collect(), 0.0),
        };
        let mut readout = vec![0.0; h];
        for &i in &kept {
            for (r, &v) in readout.iter_mut().zip(&h2[i * h..(i + 1) * h]) {
                *r += scores[i] * v;
            }
        }
        let inv_k = 1.0 / kept.len() as f64;
        readout.iter_mut().for_each(|r| *r *= inv_k);

        let z3 = matmul_bias(&readout, 1, h, self.slice(5), h, self.slice(6));
        let h3 = relu(&z3);
        let logits = matmul_bias(&h3, 1, h, self.slice(7), k, self.slice(8));
        Ok(Cache {
            a1,
            z1,
            a2,
            z2,
            h2,
            scores,
            kept,
            pnorm,
            readout,
            z3,
            h3,
            logits,
        })
    }

    /// Adds the gradient of `dlogits · logits` to `grad`.
    fn backward(&self, g: &EncodedGraph, c: &Cache, dlogits: &[f64], grad: &mut [f64]) {
        let (f, h, k) = (self.config.feature_dim, self.config.hidden, self.config.num_classes);
        let n = g.num_nodes;
        let off = self.offsets;
        let mut parts: Vec<&mut [f64]> = Vec::with_capacity(9);
        let mut rest = grad;
        for i in 0..9 {
            let (head, tail) = rest.split_at_mut(off[i + 1] - off[i]);
            parts.push(head);
            rest = tail;
        }
        let [dw1, db1, dw2, db2, dp, dw3, db3, dw4, db4] = <[&mut [f64]; 9]>::try_from(parts).ok().unwrap();

        // head
        accumulate_weight_grad(&c.h3, dlogits, 1, h, k, dw4, db4);
        let dh3 = matmul_transposed(dlogits, 1, k, self.slice(7), h);
        let dz3: Vec<f64> = dh3.iter().zip(&c.z3).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
        accumulate_weight_grad(&c.readout, &dz3, 1, h, h, dw3, db3);
        let dr = matmul_transposed(&dz3, 1, h, self.slice(5), h);

        // readout and pooling
        let inv_k = 1.0 / c.kept.len() as f64;
        let mut dh2 = vec![0.0; n * h];
        let pooled = self.config.pool_ratio.is_some() && c.pnorm > 0.0;
        let p = self.slice(4);
        for &i in &c.kept {
            let hi = &c.h2[i * h..(i + 1) * h];
            let s = c.scores[i];
            let dhi = &mut dh2[i * h..(i + 1) * h];
            for (d, &r) in dhi.iter_mut().zip(&dr) {
                *d += s * inv_k * r;
            }
            if pooled {
                let du = inv_k * dot(hi, &dr) * s * (1.0 - s);
                let hp = dot(hi, p);
                let pn3 = c.pnorm * c.pnorm * c.pnorm;
                for j in 0..h {
                    dhi[j] += du * p[j] / c.pnorm;
                    dp[j] += du * (hi[j] / c.pnorm - hp * p[j] / pn3);
                }
            }
        }

        // second convolution
        let dz2: Vec<f64> = dh2.iter().zip(&c.z2).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
        accumulate_weight_grad(&c.a2, &dz2, n, h, h, dw2, db2);
        let da2 = matmul_transposed(&dz2, n, h, self.slice(2), h);
        let mut dh1 = vec![0.0; n * h];
        g.norm_adj.aggregate_transpose_into(&da2, h, &mut dh1);

        // first convolution
        let dz1: Vec<f64> = dh1.iter().zip(&c.z1).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
        accumulate_weight_grad(&c.a1, &dz1, n, f, h, dw1, db1);
    }

    pub fn forward(&self, g: &EncodedGraph) -> Result<Forward, GnnError> {
        let c = self.run(g)?;
        Ok(Forward {
            node_embeddings: c.h2,
            scores: c.scores,
            kept: c.kept,
            readout: c.readout,
            logits: c.logits,
        })
    }

    pub fn logits(&self, g: &EncodedGraph) -> Result<Vec<f64>, GnnError> {
        Ok(self.run(g)?.logits)
    }

    /// Which side of every piecewise boundary the computation is on: ReLU
    /// signs of all three hidden layers and the Top-K selection. Finite
    /// differences are only meaningful where this does not change.
    pub fn activation_pattern(&self, g: &EncodedGraph) -> Result<Vec<u64>, GnnError> {
        let c = self.run(g)?;
        let signs = c.z1.iter().chain(&c.z2).chain(&c.z3).map(|&z| (z > 0.0) as u64);
        Ok(signs.chain(std::iter::once(u64::MAX)).chain(c.kept.iter().map(|&i| i as u64)).collect())
    }

    fn check_batch(&self, batch: &[(&EncodedGraph, usize)]) -> Result<(), GnnError> {
        if batch.is_empty() {
            return Err(GnnError::EmptyBatch);
        }
        let classes = self.config.num_classes;
        if let Some(&(_, label)) = batch.iter().find(|(_, l)| *l >= classes) {
            return Err(GnnError::LabelOutOfRange { label, classes });
        }
        Ok(())
    }

    pub(crate) fn batch_step(&self, batch: &[(&EncodedGraph, usize)], weight_decay: f64) -> Result<BatchStep, GnnError> {
        self.check_batch(batch)?;
        let scale = 1.0 / batch.len() as f64;
        let per: Vec<(f64, usize, Vec<f64>)> = batch
            .par_iter()
            .map(|&(g, label)| {
                let c = self.run(g)?;
                let loss = cross_entropy(&c.logits, label);
                let mut dl = softmax(&c.logits);
                dl[label] -= 1.0;
                dl.iter_mut().for_each(|d| *d *= scale);
                let mut grad = vec![0.0; self.params.len()];
                self.backward(g, &c, &dl, &mut grad);
                Ok((loss, argmax(&c.logits), grad))
            })
            .collect::<Result<_, GnnError>>()?;
        let mut grad: Vec<f64> = self.params.iter().map(|&p| weight_decay * p).collect();
        let mut losses = Vec::with_capacity(per.len());
        let mut predictions = Vec::with_capacity(per.len());
        for (loss, pred, g) in per {
            losses.push(loss);
            predictions.push(pred);
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let decay = weight_decay * 0.5 * dot(&self.params, &self.params);
        Ok(BatchStep {
            losses,
            predictions,
            decay,
            grad,
        })
    }

    /// Mean cross-entropy plus `weight_decay·½‖θ‖²`, and its gradient.
    pub fn loss_and_grad(&self, batch: &[(&EncodedGraph, usize)], weight_decay: f64) -> Result<(f64, Vec<f64>), GnnError> {
        let step = self.batch_step(batch, weight_decay)?;
        let loss = step.losses.iter().sum::<f64>() / step.losses.len() as f64 + step.decay;
        Ok((loss, step.grad))
    }

    /// Loss only; used by finite-difference checks.
    pub fn loss(&self, batch: &[(&EncodedGraph, usize)], weight_decay: f64) -> Result<f64, GnnError> {
        self.check_batch(batch)?;
        let mut total = 0.0;
        for &(g, label) in batch {
            total += cross_entropy(&self.logits(g)?, label);
        }
        Ok(total / batch.len() as f64 + weight_decay * 0.5 * dot(&self.params, &self.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::random_circuit;
    use crate::encode::{encode, Direction, InverterMode, FEATURE_DIM};

    fn config(k: usize, pool: Option<f64>) -> ModelConfig {
        ModelConfig {
            feature_dim: FEATURE_DIM,
            hidden: 8,
            num_classes: k,
            pool_ratio: pool,
        }
    }

    fn graph(seed: u64) -> EncodedGraph {
        encode(&random_circuit(3, 2, 6, seed), Direction::Bidigraph, InverterMode::With)
    }

    #[test]
    fn zero_model_returns_output_bias() {
        let mut m = Model::zeros(config(3, Some(0.5))).unwrap();
        m.tensor_mut("mlp2.bias").unwrap().copy_from_slice(&[0.5, -1.0, 2.0]);
        for s in 0..3 {
            assert_eq!(m.logits(&graph(s)).unwrap(), vec![0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn uniform_logits_cost_ln2() {
        let m = Model::zeros(config(2, None)).unwrap();
        let g = graph(1);
        let (loss, _) = m.loss_and_grad(&[(&g, 1)], 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        let (dup, _) = m.loss_and_grad(&[(&g, 1), (&g, 1)], 0.0).unwrap();
        assert_eq!(loss, dup);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -3.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((cross_entropy(&[0.0, 0.0], 0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn pooling_keeps_ceiling() {
        assert_eq!(pool_keep(0.5, 7), 4);
        assert_eq!(pool_keep(0.5, 1), 1);
        assert_eq!(pool_keep(0.01, 10), 1);
        let m = Model::new(config(2, Some(0.3)), 4).unwrap();
        let g = graph(2);
        assert_eq!(m.forward(&g).unwrap().kept.len(), pool_keep(0.3, g.num_nodes));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for pool in [Some(0.5), None] {
            let m = Model::new(config(3, pool), 9).unwrap();
            let (g0, g1) = (graph(3), graph(4));
            let batch = [(&g0, 0), (&g1, 2)];
            let (_, grad) = m.loss_and_grad(&batch, 1e-3).unwrap();
            let base = [m.activation_pattern(&g0).unwrap(), m.activation_pattern(&g1).unwrap()];
            let eps = 1e-5;
            for i in 0..m.num_params() {
                let mut plus = m.clone();
                plus.params_mut()[i] += eps;
                let mut minus = m.clone();
                minus.params_mut()[i] -= eps;
                let stable = [&plus, &minus].iter().all(|mm| {
                    base[0] == mm.activation_pattern(&g0).unwrap() && base[1] == mm.activation_pattern(&g1).unwrap()
                });
                if !stable {
                    continue;
                }
                let num = (plus.loss(&batch, 1e-3).unwrap() - minus.loss(&batch, 1e-3).unwrap()) / (2.0 * eps);
                let rel = (grad[i] - num).abs() / grad[i].abs().max(num.abs()).max(1e-6);
                assert!(rel < 1e-4, "param {i}: analytic {} numeric {num}", grad[i]);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = Model::zeros(config(2, None)).unwrap();
        let g = graph(0);
        assert!(matches!(m.loss_and_grad(&[], 0.0), Err(GnnError::EmptyBatch)));
        assert!(matches!(m.loss_and_grad(&[(&g, 2)], 0.0), Err(GnnError::LabelOutOfRange { .. })));
        let other = Model::zeros(ModelConfig { feature_dim: 4, ..config(2, None) }).unwrap();
        assert!(matches!(other.logits(&g), Err(GnnError::DimensionMismatch { .. })));
    }
}
