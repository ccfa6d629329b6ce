//! Replacement library: for every 3-input function realizable with at most
//! three ANDs, up to four structurally distinct implementations, smallest
//! first. Built once on first use by exhaustive enumeration.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::aig::Lit;

const MAX_ANDS: usize = 3;
const MAX_PER_FUNCTION: usize = 4;
const VARS: [u8; 3] = [0xAA, 0xCC, 0xF0];

/// Literals are `2*v + complement` with `v < 3` the inputs and `v >= 3` the
/// AND nodes in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LibImpl {
    pub ands: Vec<(u8, u8)>,
    pub output: u8,
}

impl LibImpl {
    fn value(&self) -> u8 {
        let mut vals: Vec<u8> = VARS.to_vec();
        let v = |vals: &[u8], l: u8| vals[(l >> 1) as usize] ^ if l & 1 == 1 { 0xFF } else { 0 };
        for &(a, b) in &self.ands {
            let x = v(&vals, a) & v(&vals, b);
            vals.push(x);
        }
        v(&vals, self.output)
    }

    /// Canonical expression string, insensitive to AND numbering and fan-in order.
    fn shape(&self) -> String {
        fn expr(imp: &LibImpl, l: u8) -> String {
            let neg = if l & 1 == 1 { "!" } else { "" };
            let v = (l >> 1) as usize;
            if v < 3 {
                return format!("{neg}x{v}");
            }
            let (a, b) = imp.ands[v - 3];
            let (mut x, mut y) = (expr(imp, a), expr(imp, b));
            if y < x {
                std::mem::swap(&mut x, &mut y);
            }
            format!("{neg}({x}&{y})")
        }
        expr(self, self.output)
    }

    /// Builds the implementation over `vars` (three literals) using `and`.
    pub fn instantiate(&self, vars: &[Lit], mut and: impl FnMut(Lit, Lit) -> Lit) -> Lit {
        let mut lits: Vec<Lit> = vars[..3].to_vec();
        let get = |lits: &[Lit], l: u8| lits[(l >> 1) as usize].xor(l & 1 == 1);
        for &(a, b) in &self.ands {
            let g = and(get(&lits, a), get(&lits, b));
            lits.push(g);
        }
        get(&lits, self.output)
    }
}

fn enumerate(ands: &mut Vec<(u8, u8)>, found: &mut Vec<LibImpl>) {
    let nvars = 3 + ands.len() as u8;
    let outputs = if ands.is_empty() { 0..6 } else { 2 * (nvars - 1)..2 * nvars };
    for output in outputs {
        let imp = LibImpl { ands: ands.clone(), output };
        // every AND must feed the output cone
        let mut used = vec![false; ands.len()];
        let mut stack = vec![output];
        while let Some(l) = stack.pop() {
            let v = (l >> 1) as usize;
            if v >= 3 && !used[v - 3] {
                used[v - 3] = true;
                stack.extend([ands[v - 3].0, ands[v - 3].1]);
            }
        }
        if used.iter().all(|&u| u) {
            found.push(imp);
        }
    }
    if ands.len() == MAX_ANDS {
        return;
    }
    for a in 0..2 * nvars {
        for b in a + 1..2 * nvars {
            if a >> 1 != b >> 1 {
                ands.push((a, b));
                enumerate(ands, found);
                ands.pop();
            }
        }
    }
}

fn library() -> &'static HashMap<u8, Vec<LibImpl>> {
    static LIB: OnceLock<HashMap<u8, Vec<LibImpl>>> = OnceLock::new();
    LIB.get_or_init(|| {
        let mut found = Vec::new();
        enumerate(&mut Vec::new(), &mut found);
        found.sort_by_key(|i| i.ands.len()); // stable: enumeration order within a size
        let mut lib: HashMap<u8, Vec<LibImpl>> = HashMap::new();
        let mut seen = HashSet::new();
        for imp in found {
            let entry = lib.entry(imp.value()).or_default();
            if entry.len() < MAX_PER_FUNCTION && seen.insert(imp.shape()) {
                entry.push(imp);
            }
        }
        lib
    })
}

/// Stored implementations of the 8-bit truth table `func` (variable `i` is
/// bit `i` of the assignment index). Empty if the function needs more than
/// three ANDs.
pub fn library_implementations(func: u8) -> &'static [LibImpl] {
    library().get(&func).map_or(&[], |v| v.as_slice())
}

/// Every function the library covers, ascending.
pub fn library_functions() -> Vec<u8> {
    let mut f: Vec<u8> = library().keys().copied().collect();
    f.sort_unstable();
    f
}
