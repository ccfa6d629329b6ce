//! Reference helpers shared by the integration tests. Everything here is
//! written independently of the library's own simulator.

#![allow(dead_code)]

use boolclass::aig::{random_circuit, Circuit, Node};
use proptest::prelude::*;

/// Recursive per-assignment evaluation; input slot `i` takes bit `i` of `bits`.
pub fn eval(c: &Circuit, bits: usize) -> Vec<bool> {
    fn node(c: &Circuit, id: usize, bits: usize) -> bool {
        match c.node(id) {
            Node::ConstFalse => false,
            Node::Input => {
                let slot = c.inputs().iter().position(|&x| x == id).expect("declared input");
                bits >> slot & 1 == 1
            }
            Node::And(a, b) => {
                (node(c, a.node(), bits) ^ a.is_complemented()) && (node(c, b.node(), bits) ^ b.is_complemented())
            }
        }
    }
    c.outputs().iter().map(|l| node(c, l.node(), bits) ^ l.is_complemented()).collect()
}

/// `table[j][k]` = output `j` on assignment `k`.
pub fn table(c: &Circuit) -> Vec<Vec<bool>> {
    let rows: Vec<Vec<bool>> = (0..1usize << c.num_inputs()).map(|k| eval(c, k)).collect();
    (0..c.num_outputs()).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Lower-case hex of a 1-output table, most significant assignment first.
pub fn hex(bits: &[bool]) -> String {
    let digits = (bits.len() / 4).max(1);
    (0..digits)
        .rev()
        .map(|d| {
            let v = (0..4).filter(|&b| bits.get(d * 4 + b).copied().unwrap_or(false)).fold(0, |acc, b| acc | 1 << b);
            std::char::from_digit(v, 16).unwrap()
        })
        .collect()
}

/// SUM and C_out of a full adder from their textbook formulas.
pub fn full_adder(a: bool, b: bool, cin: bool) -> (bool, bool) {
    (cin ^ (a ^ b), (a && b) || (cin && (a ^ b)))
}

/// Random AIG with `1..=max_in` inputs, `1..=3` outputs and up to `max_ands` gates.
pub fn arb_circuit(max_in: usize, max_ands: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_in, 1..=3usize, 0..=max_ands, any::<u64>()).prop_map(|(n, m, a, s)| random_circuit(n, m, a, s))
}

/// Output of `apply(c, t)` on assignment `y`, evaluated on `c` directly: new
/// input slot `i` carries old input `input_perm[i]` (complemented when
/// `input_neg[i]`), new output `j` is old output `output_perm[j]`
/// (complemented when `output_neg[j]`).
pub fn eval_transformed(c: &Circuit, t: &boolclass::transform::MatchingTransform, y: usize) -> Vec<bool> {
    let mut x = 0usize;
    for i in 0..t.input_perm.len() {
        let v = (y >> i & 1 == 1) ^ t.input_neg[i];
        x |= (v as usize) << t.input_perm[i];
    }
    let out = eval(c, x);
    (0..t.output_perm.len()).map(|j| out[t.output_perm[j]] ^ t.output_neg[j]).collect()
}
