//! Brute-force matching-equivalence oracle over the full input/output
//! permutation-negation group.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{simulate_exhaustive, AigError, Circuit, TruthTable};
use crate::transform::MatchingTransform;

/// Largest transform group the oracle will enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("dimension mismatch: {0:?} vs {1:?} (inputs, outputs)")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("transform space for n={n}, m={m} has {size} elements, budget is {budget}")]
    SearchBudgetExceeded { n: usize, m: usize, size: BigUint, budget: u64 },
    #[error(transparent)]
    Simulation(#[from] AigError),
}

/// `2^n · n! · 2^m · m!`
pub fn transform_space_size(n: usize, m: usize) -> BigUint {
    let fact = |k: usize| (1..=k as u64).fold(BigUint::from(1u32), |acc, i| acc * i);
    (BigUint::from(1u32) << (n + m)) * fact(n) * fact(m)
}

pub fn within_budget(n: usize, m: usize, budget: u64) -> bool {
    transform_space_size(n, m) <= BigUint::from(budget)
}

fn check_budget(n: usize, m: usize, budget: u64) -> Result<(), OracleError> {
    if within_budget(n, m, budget) {
        Ok(())
    } else {
        Err(OracleError::SearchBudgetExceeded {
            n,
            m,
            size: transform_space_size(n, m),
            budget,
        })
    }
}

/// Canonical representative of a matching class: the lexicographically
/// smallest concatenation of per-output hex tables over the whole group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalKey {
    pub n: usize,
    pub m: usize,
    pub key: String,
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}:{}", self.n, self.m, self.key)
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { return out };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Rows as bit vectors, each compared most-significant assignment first.
type Rows = Vec<Vec<u64>>;

/// Re-indexes every row by the input action: `new[y] = old[P(y ^ neg)]`,
/// where `P` sends bit `i` to bit `perm[i]`.
struct InputAction {
    n: usize,
    /// `index[z]` = `P(z)`
    index: Vec<usize>,
}

impl InputAction {
    fn new(perm: &[usize]) -> Self {
        let n = perm.len();
        let index = (0..1usize << n)
            .map(|z| (0..n).map(|i| ((z >> i) & 1) << perm[i]).sum())
            .collect();
        InputAction { n, index }
    }

    fn apply(&self, rows: &Rows, neg: usize) -> Rows {
        let size = 1usize << self.n;
        rows.iter()
            .map(|r| {
                let mut out = vec![0u64; r.len()];
                for y in 0..size {
                    let x = self.index[y ^ neg];
                    if (r[x / 64] >> (x % 64)) & 1 == 1 {
                        out[y / 64] |= 1 << (y % 64);
                    }
                }
                out
            })
            .collect()
    }
}

fn complement(row: &[u64], n: usize) -> Vec<u64> {
    let tail = if n >= 6 { u64::MAX } else { (1u64 << (1 << n)) - 1 };
    row.iter().map(|w| !w & tail).collect()
}

/// Numeric comparison, most significant word first.
fn row_cmp(a: &[u64], b: &[u64]) -> std::cmp::Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Output-side canonical form: each row replaced by the smaller of itself and
/// its complement, then rows sorted. Exact minimum over output negation and
/// permutation.
fn output_canonical(rows: &Rows, n: usize) -> Rows {
    let mut out: Rows = rows
        .iter()
        .map(|r| {
            let c = complement(r, n);
            if row_cmp(&c, r).is_lt() {
                c
            } else {
                r.clone()
            }
        })
        .collect();
    out.sort_by(|a, b| row_cmp(a, b));
    out
}

fn rows_cmp(a: &Rows, b: &Rows) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| row_cmp(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn table_rows(tt: &TruthTable) -> Rows {
    tt.funcs().to_vec()
}

pub fn canonical_key(c: &Circuit) -> Result<CanonicalKey, OracleError> {
    canonical_key_with_budget(c, DEFAULT_BUDGET)
}

pub fn canonical_key_with_budget(c: &Circuit, budget: u64) -> Result<CanonicalKey, OracleError> {
    let (n, m) = (c.num_inputs(), c.num_outputs());
    check_budget(n, m, budget)?;
    let rows = table_rows(&simulate_exhaustive(c)?);
    let mut best: Option<Rows> = None;
    for perm in permutations(n) {
        let act = InputAction::new(&perm);
        for neg in 0..1usize << n {
            let cand = output_canonical(&act.apply(&rows, neg), n);
            if best.as_ref().map_or(true, |b| rows_cmp(&cand, b).is_lt()) {
                best = Some(cand);
            }
        }
    }
    let best = best.expect("at least one transform");
    let tt = TruthTable::from_words(n, best);
    Ok(CanonicalKey {
        n,
        m,
        key: tt.to_hex_all().join(""),
    })
}

/// Finds `t` with `apply(c2, t)` functionally equal to `c1`. Candidates are
/// tried input-negation mask ascending, then input permutation in lexicographic
/// order, then output-negation mask, then output permutation; the first hit
/// is returned, so the identity wins whenever it works.
pub fn matching_equivalent(c1: &Circuit, c2: &Circuit) -> Result<Option<MatchingTransform>, OracleError> {
    matching_equivalent_with_budget(c1, c2, DEFAULT_BUDGET)
}

pub fn matching_equivalent_with_budget(
    c1: &Circuit,
    c2: &Circuit,
    budget: u64,
) -> Result<Option<MatchingTransform>, OracleError> {
    let dims = (c1.num_inputs(), c1.num_outputs());
    if dims != (c2.num_inputs(), c2.num_outputs()) {
        return Err(OracleError::DimensionMismatch(dims, (c2.num_inputs(), c2.num_outputs())));
    }
    let (n, m) = dims;
    check_budget(n, m, budget)?;
    let target = table_rows(&simulate_exhaustive(c1)?);
    let source = table_rows(&simulate_exhaustive(c2)?);
    let target_canon = output_canonical(&target, n);
    let perms_in = permutations(n);
    let actions: Vec<InputAction> = perms_in.iter().map(|p| InputAction::new(p)).collect();
    let perms_out = permutations(m);

    for ineg in 0..1usize << n {
        for (pi, act) in perms_in.iter().zip(&actions) {
            let moved = act.apply(&source, ineg);
            if output_canonical(&moved, n) != target_canon {
                continue;
            }
            let negated: Vec<Vec<u64>> = moved.iter().map(|r| complement(r, n)).collect();
            for oneg in 0..1usize << m {
                for po in &perms_out {
                    let ok = (0..m).all(|j| {
                        let row = if (oneg >> j) & 1 == 1 { &negated[po[j]] } else { &moved[po[j]] };
                        *row == target[j]
                    });
                    if ok {
                        return Ok(Some(MatchingTransform::from_masks(
                            pi.clone(),
                            ineg as u64,
                            po.clone(),
                            oneg as u64,
                        )));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Dense class labels in first-seen order. With `provenance` (one group id
/// per circuit) labels follow the generation record and no search is done;
/// otherwise circuits are grouped by canonical key.
pub fn label_dataset(circuits: &[Circuit], provenance: Option<&[usize]>) -> Result<Vec<usize>, OracleError> {
    let keys: Vec<String> = match provenance {
        Some(p) => {
            assert_eq!(p.len(), circuits.len(), "one provenance entry per circuit");
            p.iter().map(|g| g.to_string()).collect()
        }
        None => circuits
            .iter()
            .map(|c| canonical_key(c).map(|k| k.to_string()))
            .collect::<Result<_, _>>()?,
    };
    let mut seen: HashMap<String, usize> = HashMap::new();
    Ok(keys
        .into_iter()
        .map(|k| {
            let next = seen.len();
            *seen.entry(k).or_insert(next)
        })
        .collect())
}
