//! Boolean-matching transforms: input/output permutation and negation.
//!
//! A [`MatchingTransform`] is kept in permute-then-negate normal form on both
//! sides. Applied to a circuit computing `f`, it yields `g` with
//!
//! ```text
//! x[input_perm[i]] = y[i] ^ input_neg[i]
//! g[j](y)          = f[output_perm[j]](x) ^ output_neg[j]
//! ```
//!
//! so input slot `i` of the result is the original input `input_perm[i]`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{Circuit, Lit, Node, TruthTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("dimension mismatch: transform is {expected:?} (inputs, outputs), circuit is {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid transform: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchingTransform {
    pub input_perm: Vec<usize>,
    pub input_neg: Vec<bool>,
    pub output_perm: Vec<usize>,
    pub output_neg: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    Neg,
    Perm,
    NegPerm,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    inv
}

fn mask_from_bits(bits: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| (bits >> i) & 1 == 1).collect()
}

impl MatchingTransform {
    /// The identity transform on `n` inputs and `m` outputs.
    pub fn identity(n: usize, m: usize) -> Self {
        MatchingTransform {
            input_perm: (0..n).collect(),
            input_neg: vec![false; n],
            output_perm: (0..m).collect(),
            output_neg: vec![false; m],
        }
    }

    /// Builds from permutations and bit masks (bit `i` negates slot `i`).
    pub fn from_masks(input_perm: Vec<usize>, input_neg: u64, output_perm: Vec<usize>, output_neg: u64) -> Self {
        let (n, m) = (input_perm.len(), output_perm.len());
        MatchingTransform {
            input_perm,
            input_neg: mask_from_bits(input_neg, n),
            output_perm,
            output_neg: mask_from_bits(output_neg, m),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.input_perm.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_perm.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.num_inputs(), self.num_outputs())
    }

    pub fn check(&self) -> Result<(), TransformError> {
        if !is_permutation(&self.input_perm) || !is_permutation(&self.output_perm) {
            return Err(TransformError::Invalid("permutations must be bijections".into()));
        }
        if self.input_neg.len() != self.input_perm.len() || self.output_neg.len() != self.output_perm.len() {
            return Err(TransformError::Invalid("mask length differs from permutation length".into()));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.num_inputs(), self.num_outputs())
    }

    pub fn has_negation(&self) -> bool {
        self.input_neg.iter().chain(&self.output_neg).any(|&b| b)
    }

    pub fn has_permutation(&self) -> bool {
        self.input_perm.iter().enumerate().any(|(i, &p)| i != p)
            || self.output_perm.iter().enumerate().any(|(i, &p)| i != p)
    }

    /// Inverse transform: `compose(&t.invert(), &t)` is the identity.
    pub fn invert(&self) -> MatchingTransform {
        let ip = invert_perm(&self.input_perm);
        let op = invert_perm(&self.output_perm);
        MatchingTransform {
            input_neg: ip.iter().map(|&k| self.input_neg[k]).collect(),
            output_neg: op.iter().map(|&k| self.output_neg[k]).collect(),
            input_perm: ip,
            output_perm: op,
        }
    }

    /// Output-side action on a table: row `j` becomes `rows[output_perm[j]] ^ output_neg[j]`,
    /// input-side re-indexing per the module docs.
    pub fn apply_table(&self, tt: &TruthTable) -> Result<TruthTable, TransformError> {
        let (n, m) = (tt.num_vars(), tt.num_funcs());
        if self.dims() != (n, m) {
            return Err(TransformError::DimensionMismatch {
                expected: self.dims(),
                got: (n, m),
            });
        }
        let neg_bits = self
            .input_neg
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
        let rows = TruthTable::from_fn(n, m, |y| {
            let mut x = 0usize;
            let y = y ^ neg_bits;
            for (i, &p) in self.input_perm.iter().enumerate() {
                x |= ((y >> i) & 1) << p;
            }
            (0..m)
                .map(|j| tt.bit(self.output_perm[j], x) ^ self.output_neg[j])
                .collect()
        });
        Ok(rows)
    }
}

/// `apply(c, compose(t2, t1))` computes the same function as `apply(apply(c, t1), t2)`.
pub fn compose(t2: &MatchingTransform, t1: &MatchingTransform) -> Result<MatchingTransform, TransformError> {
    if t2.dims() != t1.dims() {
        return Err(TransformError::DimensionMismatch {
            expected: t1.dims(),
            got: t2.dims(),
        });
    }
    Ok(MatchingTransform {
        input_perm: t2.input_perm.iter().map(|&k| t1.input_perm[k]).collect(),
        input_neg: (0..t2.num_inputs())
            .map(|k| t2.input_neg[k] ^ t1.input_neg[t2.input_perm[k]])
            .collect(),
        output_perm: t2.output_perm.iter().map(|&k| t1.output_perm[k]).collect(),
        output_neg: (0..t2.num_outputs())
            .map(|k| t2.output_neg[k] ^ t1.output_neg[t2.output_perm[k]])
            .collect(),
    })
}

/// Applies `t` to `c`. Input permutation reorders declaration slots; negations
/// toggle complement flags on input fan-out edges and output drivers.
pub fn apply(c: &Circuit, t: &MatchingTransform) -> Result<Circuit, TransformError> {
    t.check()?;
    if t.dims() != (c.num_inputs(), c.num_outputs()) {
        return Err(TransformError::DimensionMismatch {
            expected: t.dims(),
            got: (c.num_inputs(), c.num_outputs()),
        });
    }
    let mut parts = c.clone().into_parts();
    let mut flip = vec![false; parts.nodes.len()];
    for (slot, &neg) in t.input_neg.iter().enumerate() {
        if neg {
            flip[c.inputs()[t.input_perm[slot]]] = true;
        }
    }
    let toggle = |l: Lit| l.xor(flip[l.node()]);
    for node in parts.nodes.iter_mut() {
        if let Node::And(a, b) = *node {
            *node = Node::And(toggle(a), toggle(b));
        }
    }
    let outputs: Vec<Lit> = parts.outputs.iter().map(|&l| toggle(l)).collect();

    parts.inputs = t.input_perm.iter().map(|&k| c.inputs()[k]).collect();
    parts.input_names = t.input_perm.iter().map(|&k| c.input_names()[k].clone()).collect();
    parts.outputs = t
        .output_perm
        .iter()
        .zip(&t.output_neg)
        .map(|(&k, &neg)| outputs[k].xor(neg))
        .collect();
    parts.output_names = t.output_perm.iter().map(|&k| c.output_names()[k].clone()).collect();
    Ok(parts.build())
}

/// Seeded random non-identity transform of the requested kind.
///
/// `Neg` has identity permutations and at least one negated slot; `Perm` has
/// no negations and a non-trivial permutation whenever `n + m > 2`; `NegPerm`
/// draws everything freely but never returns the identity.
pub fn random_transform(n: usize, m: usize, kind: TransformKind, seed: u64) -> MatchingTransform {
    assert!(n >= 1 && m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = MatchingTransform::identity(n, m);
    let draw_masks = |rng: &mut ChaCha8Rng, t: &mut MatchingTransform| {
        t.input_neg = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        t.output_neg = (0..m).map(|_| rng.gen_bool(0.5)).collect();
    };
    let draw_perms = |rng: &mut ChaCha8Rng, t: &mut MatchingTransform| {
        t.input_perm.shuffle(rng);
        t.output_perm.shuffle(rng);
    };
    loop {
        let mut t = id.clone();
        match kind {
            TransformKind::Neg => {
                draw_masks(&mut rng, &mut t);
                if t.has_negation() {
                    return t;
                }
            }
            TransformKind::Perm => {
                draw_perms(&mut rng, &mut t);
                if t.has_permutation() || n + m <= 2 {
                    return t;
                }
            }
            TransformKind::NegPerm => {
                draw_perms(&mut rng, &mut t);
                draw_masks(&mut rng, &mut t);
                if !t.is_identity() {
                    return t;
                }
            }
        }
    }
}
