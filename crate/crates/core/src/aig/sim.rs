//! Bit-parallel simulation: exhaustive truth tables and random-vector signatures.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AigError, Circuit, Node};

pub const MAX_EXHAUSTIVE_INPUTS: usize = 16;

/// 1024 words of 64 random patterns each.
pub const DEFAULT_SIGNATURE_WORDS: usize = 1024;

const VAR_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Complete function table. Bit `k` of function `j` is output `j` under the
/// assignment where input `i` takes bit `i` of `k`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    num_vars: usize,
    funcs: Vec<Vec<u64>>,
}

pub fn words_for(num_vars: usize) -> usize {
    if num_vars <= 6 {
        1
    } else {
        1 << (num_vars - 6)
    }
}

pub(crate) fn tail_mask(num_vars: usize) -> u64 {
    if num_vars >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << num_vars)) - 1
    }
}

impl TruthTable {
    /// Wraps raw words; bits above `2^num_vars` are cleared.
    pub fn from_words(num_vars: usize, mut funcs: Vec<Vec<u64>>) -> Self {
        let w = words_for(num_vars);
        for f in &mut funcs {
            f.resize(w, 0);
            f[0] &= tail_mask(num_vars);
        }
        TruthTable { num_vars, funcs }
    }

    /// Builds a table from a per-assignment evaluator returning one bit per function.
    pub fn from_fn(num_vars: usize, num_funcs: usize, mut eval: impl FnMut(usize) -> Vec<bool>) -> Self {
        let mut funcs = vec![vec![0u64; words_for(num_vars)]; num_funcs];
        for k in 0..1usize << num_vars {
            let bits = eval(k);
            for (j, &b) in bits.iter().enumerate().take(num_funcs) {
                if b {
                    funcs[j][k / 64] |= 1 << (k % 64);
                }
            }
        }
        TruthTable { num_vars, funcs }
    }

    pub fn from_hex(num_vars: usize, hex: &[&str]) -> Option<Self> {
        let funcs = hex
            .iter()
            .map(|h| parse_hex_words(h, words_for(num_vars)))
            .collect::<Option<Vec<_>>>()?;
        Some(Self::from_words(num_vars, funcs))
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_funcs(&self) -> usize {
        self.funcs.len()
    }

    pub fn words(&self, func: usize) -> &[u64] {
        &self.funcs[func]
    }

    pub fn funcs(&self) -> &[Vec<u64>] {
        &self.funcs
    }

    pub fn bit(&self, func: usize, assignment: usize) -> bool {
        (self.funcs[func][assignment / 64] >> (assignment % 64)) & 1 == 1
    }

    /// Hex string of one function, most significant assignment first.
    pub fn to_hex(&self, func: usize) -> String {
        words_to_hex(&self.funcs[func], self.num_vars)
    }

    pub fn to_hex_all(&self) -> Vec<String> {
        (0..self.num_funcs()).map(|j| self.to_hex(j)).collect()
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({} vars: {:?})", self.num_vars, self.to_hex_all())
    }
}

pub(crate) fn words_to_hex(words: &[u64], num_vars: usize) -> String {
    let digits = ((1usize << num_vars) / 4).max(1);
    let mut s = String::with_capacity(digits);
    for w in words.iter().rev() {
        s.push_str(&format!("{w:016x}"));
    }
    s[s.len() - digits..].to_string()
}

fn parse_hex_words(hex: &str, nwords: usize) -> Option<Vec<u64>> {
    let hex = hex.trim_start_matches("0x");
    let mut words = vec![0u64; nwords];
    for (i, ch) in hex.chars().rev().enumerate() {
        let d = ch.to_digit(16)? as u64;
        let (w, sh) = (i / 16, (i % 16) * 4);
        if w >= nwords {
            if d != 0 {
                return None;
            }
            continue;
        }
        words[w] |= d << sh;
    }
    Some(words)
}

/// Functional fingerprint from random-vector simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub seed: u64,
    pub words: Vec<Vec<u64>>,
}

impl Signature {
    pub fn num_funcs(&self) -> usize {
        self.words.len()
    }
}

/// Simulates `c` on caller-provided input words; `inputs[i]` drives input slot `i`.
/// Returns one word vector per output.
pub fn simulate_words(c: &Circuit, inputs: &[Vec<u64>]) -> Vec<Vec<u64>> {
    assert_eq!(inputs.len(), c.num_inputs(), "one stimulus vector per input");
    let w = inputs.first().map_or(1, |v| v.len());
    let mut vals = vec![0u64; c.num_nodes() * w];
    for (slot, &id) in c.inputs().iter().enumerate() {
        vals[id * w..(id + 1) * w].copy_from_slice(&inputs[slot]);
    }
    for id in c.eval_order() {
        if let Node::And(a, b) = c.node(id) {
            let ma = if a.is_complemented() { u64::MAX } else { 0 };
            let mb = if b.is_complemented() { u64::MAX } else { 0 };
            let (ia, ib) = (a.node() * w, b.node() * w);
            for k in 0..w {
                vals[id * w + k] = (vals[ia + k] ^ ma) & (vals[ib + k] ^ mb);
            }
        }
        // ConstFalse stays zero
    }
    c.outputs()
        .iter()
        .map(|l| {
            let m = if l.is_complemented() { u64::MAX } else { 0 };
            vals[l.node() * w..(l.node() + 1) * w].iter().map(|v| v ^ m).collect()
        })
        .collect()
}

pub(crate) fn exhaustive_patterns(num_vars: usize) -> Vec<Vec<u64>> {
    let w = words_for(num_vars);
    (0..num_vars)
        .map(|i| {
            (0..w)
                .map(|k| {
                    if i < 6 {
                        VAR_MASKS[i]
                    } else if (k >> (i - 6)) & 1 == 1 {
                        u64::MAX
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn simulate_exhaustive(c: &Circuit) -> Result<TruthTable, AigError> {
    let n = c.num_inputs();
    if n > MAX_EXHAUSTIVE_INPUTS {
        return Err(AigError::TooManyInputs {
            got: n,
            max: MAX_EXHAUSTIVE_INPUTS,
        });
    }
    let outs = simulate_words(c, &exhaustive_patterns(n));
    Ok(TruthTable::from_words(n, outs))
}

/// Random stimulus words for `num_inputs` inputs. Input `i`'s words do not
/// depend on `num_inputs`.
pub fn stimulus(seed: u64, num_inputs: usize, words: usize) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_inputs)
        .map(|_| (0..words).map(|_| rng.next_u64()).collect())
        .collect()
}

pub fn simulate_random(c: &Circuit, seed: u64, words: usize) -> Signature {
    let words = words.max(1);
    Signature {
        seed,
        words: simulate_words(c, &stimulus(seed, c.num_inputs(), words)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::CircuitBuilder;

    #[test]
    fn and_gate_table() {
        let mut b = CircuitBuilder::new("and");
        let x = b.input("a");
        let y = b.input("b");
        let g = b.and(x, y);
        b.output(g, "f");
        let tt = simulate_exhaustive(&b.finish().unwrap()).unwrap();
        assert_eq!(tt.to_hex(0), "8");
        assert_eq!(tt.words(0), &[0x8]);
    }

    #[test]
    fn hex_is_msb_first_and_padded() {
        let tt = TruthTable::from_words(7, vec![vec![1, 0x8000_0000_0000_0000]]);
        let h = tt.to_hex(0);
        assert_eq!(h.len(), 32);
        assert_eq!(&h[..1], "8");
        assert_eq!(&h[31..], "1");
        assert_eq!(TruthTable::from_hex(7, &[&h]).unwrap(), tt);
        assert_eq!(TruthTable::from_words(1, vec![vec![2]]).to_hex(0), "2");
    }

    #[test]
    fn wide_input_patterns() {
        // input 7 toggles every other word
        let p = exhaustive_patterns(8);
        assert_eq!(p[7], vec![0, 0, u64::MAX, u64::MAX]);
        assert_eq!(p[6], vec![0, u64::MAX, 0, u64::MAX]);
    }

    #[test]
    fn too_many_inputs() {
        let mut b = CircuitBuilder::new("wide");
        let ins: Vec<_> = (0..17).map(|_| b.unnamed_input()).collect();
        b.unnamed_output(ins[0]);
        let err = simulate_exhaustive(&b.finish().unwrap()).unwrap_err();
        assert_eq!(err, AigError::TooManyInputs { got: 17, max: 16 });
    }

    #[test]
    fn identity_signature_is_the_stimulus() {
        let mut b = CircuitBuilder::new("");
        let x = b.unnamed_input();
        b.unnamed_output(x);
        let c = b.finish().unwrap();
        let sig = simulate_random(&c, 7, 16);
        assert_eq!(sig.words[0], stimulus(7, 1, 16)[0]);
        let mut b = CircuitBuilder::new("");
        let x = b.unnamed_input();
        b.unnamed_output(!x);
        let neg = simulate_random(&b.finish().unwrap(), 7, 16);
        assert!(neg.words[0].iter().zip(&sig.words[0]).all(|(a, b)| a != b));
    }
}
