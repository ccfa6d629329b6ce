use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, GnnError, Model, ModelConfig};
use crate::dataset::{Dataset, GroupKind, Split};
use crate::encode::{encode_with, Direction, EncodedGraph, FeatureSet, InverterMode, FEATURE_DIM};
use crate::optimizer::mix_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// `None` trains the plain GCN without pooling.
    pub pool_ratio: Option<f64>,
    /// Evaluate every this many epochs (and always after the last one).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            lr: 1e-3,
            weight_decay: 1e-5,
            batch_size: 16,
            epochs: 100,
            pool_ratio: Some(0.5),
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), GnnError> {
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(GnnError::InvalidConfig("batch size and eval interval must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.weight_decay >= 0.0) {
            return Err(GnnError::InvalidConfig("learning rate and weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Adam with L2 regularization folded into the gradient.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub record: usize,
    pub label: usize,
    pub kind: GroupKind,
    pub split: Split,
    pub graph: EncodedGraph,
}

/// Encoded dataset ready for training.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    pub num_classes: usize,
    pub direction: Direction,
    pub inverters: InverterMode,
    pub feature_set: FeatureSet,
}

impl Corpus {
    pub fn from_dataset(ds: &Dataset, direction: Direction, inverters: InverterMode) -> Corpus {
        Corpus::from_dataset_with(ds, direction, inverters, FeatureSet::default())
    }

    pub fn from_dataset_with(ds: &Dataset, direction: Direction, inverters: InverterMode, feature_set: FeatureSet) -> Corpus {
        let samples = ds
            .manifest
            .records
            .par_iter()
            .zip(ds.circuits.par_iter())
            .map(|(r, c)| {
                let mut graph = encode_with(c, direction, inverters, feature_set);
                graph.label = Some(r.label);
                Sample {
                    record: r.index,
                    label: r.label,
                    kind: r.kind,
                    split: r.split,
                    graph,
                }
            })
            .collect();
        Corpus {
            samples,
            num_classes: ds.manifest.num_classes(),
            direction,
            inverters,
            feature_set,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(FEATURE_DIM, |s| s.graph.feature_dim())
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.samples[i].split == split).collect()
    }

    /// Samples scored for `kind`: its eval records, or every record of that
    /// kind when none of them is held out (e.g. the training kind).
    pub fn kind_indices(&self, kind: GroupKind) -> Vec<usize> {
        let of_kind = |split: Option<Split>| -> Vec<usize> {
            (0..self.samples.len())
                .filter(|&i| self.samples[i].kind == kind && split.is_none_or(|s| self.samples[i].split == s))
                .collect()
        };
        let eval = of_kind(Some(Split::Eval));
        if eval.is_empty() {
            of_kind(None)
        } else {
            eval
        }
    }

    pub fn pairs(&self, indices: &[usize]) -> Vec<(&EncodedGraph, usize)> {
        indices.iter().map(|&i| (&self.samples[i].graph, self.samples[i].label)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    /// Accuracy per group kind in [`GroupKind::ALL`] order; `None` on epochs
    /// that were not evaluated or for kinds absent from the corpus.
    pub acc: [Option<f64>; 4],
}

impl EpochStats {
    pub fn acc(&self, kind: GroupKind) -> Option<f64> {
        self.acc[kind as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub seed: u64,
    pub config: TrainConfig,
    pub direction: Direction,
    pub inverters: InverterMode,
    pub feature_set: FeatureSet,
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// Accuracy at the last evaluated epoch.
    pub fn final_acc(&self, kind: GroupKind) -> Option<f64> {
        self.epochs.iter().rev().find_map(|e| e.acc(kind))
    }

    /// Best accuracy over evaluated epochs, with the (earliest) epoch reaching it.
    pub fn best_acc(&self, kind: GroupKind) -> Option<(usize, f64)> {
        self.epochs
            .iter()
            .filter_map(|e| e.acc(kind).map(|a| (e.epoch, a)))
            .fold(None, |best, (e, a)| match best {
                Some((_, b)) if b >= a => best,
                _ => Some((e, a)),
            })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,train_acc,acc_LE,acc_Neg,acc_Perm,acc_NP\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{}", e.epoch, e.loss, e.train_acc));
            for a in e.acc {
                s.push(',');
                if let Some(a) = a {
                    s.push_str(&a.to_string());
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `None` for classes with no records in the set.
    pub per_class: Vec<Option<f64>>,
    pub predictions: Vec<usize>,
    /// Readout vector per record.
    pub embeddings: Vec<Vec<f64>>,
}

pub fn evaluate(model: &Model, records: &[(&EncodedGraph, usize)]) -> Result<Evaluation, GnnError> {
    if records.is_empty() {
        return Err(GnnError::EmptyEval);
    }
    let outs: Vec<(usize, Vec<f64>)> = records
        .par_iter()
        .map(|&(g, _)| model.forward(g).map(|f| (argmax(&f.logits), f.readout)))
        .collect::<Result<_, _>>()?;
    let k = model.config().num_classes;
    let mut hits = vec![0usize; k];
    let mut totals = vec![0usize; k];
    for ((_, label), (pred, _)) in records.iter().zip(&outs) {
        if *label < k {
            totals[*label] += 1;
            hits[*label] += (pred == label) as usize;
        }
    }
    let correct = records.iter().zip(&outs).filter(|((_, l), (p, _))| p == l).count();
    let (predictions, embeddings) = outs.into_iter().unzip();
    Ok(Evaluation {
        accuracy: correct as f64 / records.len() as f64,
        per_class: (0..k).map(|c| (totals[c] > 0).then(|| hits[c] as f64 / totals[c] as f64)).collect(),
        predictions,
        embeddings,
    })
}

/// Trains on the corpus' `Train` split. Deterministic in `seed`: the
/// initialization and per-epoch shuffles come from fixed seeded streams and
/// gradients are summed in batch order.
pub fn train(corpus: &Corpus, cfg: &TrainConfig, seed: u64) -> Result<(Model, TrainHistory), GnnError> {
    cfg.validate()?;
    let train_idx = corpus.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(GnnError::EmptySplit("no training records".into()));
    }
    for class in 0..corpus.num_classes {
        let present = corpus.samples.iter().any(|s| s.label == class);
        if present && !train_idx.iter().any(|&i| corpus.samples[i].label == class) {
            return Err(GnnError::EmptySplit(format!("class {class} has no training records")));
        }
    }
    let model_cfg = ModelConfig {
        feature_dim: corpus.feature_dim(),
        hidden: cfg.hidden,
        num_classes: corpus.num_classes,
        pool_ratio: cfg.pool_ratio,
    };
    let mut model = Model::new(model_cfg, mix_seed(seed, 0))?;
    let mut adam = Adam::new(model.num_params(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let kind_sets: Vec<Vec<usize>> = GroupKind::ALL.iter().map(|&k| corpus.kind_indices(k)).collect();

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut positions: Vec<usize> = (0..train_idx.len()).collect();
    for epoch in 1..=cfg.epochs {
        positions.shuffle(&mut rng);
        let mut losses = vec![0.0; train_idx.len()];
        let mut correct = 0usize;
        let mut decay = 0.0;
        for chunk in positions.chunks(cfg.batch_size) {
            let idx: Vec<usize> = chunk.iter().map(|&p| train_idx[p]).collect();
            let step = model.batch_step(&corpus.pairs(&idx), cfg.weight_decay)?;
            for ((&p, &l), (&i, &pred)) in chunk.iter().zip(&step.losses).zip(idx.iter().zip(&step.predictions)) {
                losses[p] = l;
                correct += (pred == corpus.samples[i].label) as usize;
            }
            decay += step.decay * chunk.len() as f64;
            adam.step(model.params_mut(), &step.grad);
        }
        let n = train_idx.len() as f64;
        let mut stats = EpochStats {
            epoch,
            loss: (losses.iter().sum::<f64>() + decay) / n,
            train_acc: correct as f64 / n,
            acc: [None; 4],
        };
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            stats.acc = kind_accuracy(&model, corpus, &kind_sets)?;
        }
        epochs.push(stats);
    }
    let history = TrainHistory {
        seed,
        config: cfg.clone(),
        direction: corpus.direction,
        inverters: corpus.inverters,
        feature_set: corpus.feature_set,
        epochs,
    };
    Ok((model, history))
}

/// Accuracy per group kind (see [`Corpus::kind_indices`]).
fn kind_accuracy(model: &Model, corpus: &Corpus, sets: &[Vec<usize>]) -> Result<[Option<f64>; 4], GnnError> {
    let mut out = [None; 4];
    for (slot, set) in out.iter_mut().zip(sets) {
        if !set.is_empty() {
            *slot = Some(evaluate(model, &corpus.pairs(set))?.accuracy);
        }
    }
    Ok(out)
}
