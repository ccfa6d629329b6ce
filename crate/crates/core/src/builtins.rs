//! Built-in benchmark designs, addressable by id (`fulladder1`, `rca4`,
//! `random:8:4:60:1`, ...).

use thiserror::Error;

use crate::aig::{random_circuit, Circuit, CircuitBuilder, Lit};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuiltinError {
    #[error("unknown builtin design {0:?}")]
    Unknown(String),
    #[error("bad parameter in builtin design {0:?}")]
    BadParameter(String),
}

/// Ten functionally distinct designs used for the default dataset.
pub const DEFAULT_DESIGNS: [&str; 10] = [
    "fulladder1",
    "rca2",
    "rca3",
    "mul2",
    "cmp3",
    "parity6",
    "mux2",
    "dec3",
    "random:7:3:40:1",
    "random:8:4:70:2",
];

pub fn builtin(id: &str) -> Result<Circuit, BuiltinError> {
    let bad = || BuiltinError::BadParameter(id.to_string());
    if let Some(rest) = id.strip_prefix("random:") {
        let p: Vec<u64> = rest
            .split(':')
            .map(|s| s.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [n, m, ands, seed] = p[..] else { return Err(bad()) };
        if n == 0 || m == 0 || n > 64 || m > 64 || ands > 100_000 {
            return Err(bad());
        }
        return Ok(random_circuit(n as usize, m as usize, ands as usize, seed).with_name(id));
    }
    let sized = |prefix: &str, lo: usize, hi: usize| -> Option<Result<usize, BuiltinError>> {
        let k = id.strip_prefix(prefix)?;
        Some(k.parse().ok().filter(|k| (lo..=hi).contains(k)).ok_or_else(bad))
    };
    let c = match id {
        "fulladder1" => full_adder_1(),
        "fulladder2" => full_adder_2(),
        "fig6_f" => fig6_f(),
        "fig6_g" => fig6_g(),
        _ => {
            if let Some(k) = sized("rca", 1, 32) {
                ripple_carry_adder(k?)
            } else if let Some(k) = sized("mul", 1, 8) {
                multiplier(k?)
            } else if let Some(k) = sized("cmp", 1, 32) {
                comparator(k?)
            } else if let Some(k) = sized("parity", 2, 64) {
                parity(k?)
            } else if let Some(k) = sized("mux", 1, 5) {
                mux(k?)
            } else if let Some(k) = sized("dec", 1, 6) {
                decoder(k?)
            } else {
                return Err(BuiltinError::Unknown(id.to_string()));
            }
        }
    };
    Ok(c.with_name(id))
}

fn done(b: CircuitBuilder) -> Circuit {
    b.finish().expect("builtin designs are well formed")
}

/// Full adder over inputs (A, B, C_in) with outputs (SUM, C_out), 8 ANDs:
/// XOR(A,B) is shared between SUM and C_out; C_out = A·B + C_in·(A⊕B).
pub fn full_adder_1() -> Circuit {
    let mut b = CircuitBuilder::new("fulladder1");
    let (x, y, cin) = (b.input("A"), b.input("B"), b.input("C_in"));
    let p = b.and(x, !y);
    let q = b.and(!x, y);
    let xnor = b.and(!p, !q);
    let a1 = b.and(x, y);
    let a2 = b.and(cin, !xnor);
    let r = b.and(!cin, xnor);
    let sum = b.and(!a2, !r);
    let co = b.and(!a1, !a2);
    b.output(sum, "SUM");
    b.output(!co, "C_out");
    done(b)
}

/// Same function as [`full_adder_1`] with C_out = A·B + C_in·(A+B).
pub fn full_adder_2() -> Circuit {
    let mut b = CircuitBuilder::new("fulladder2");
    let (x, y, cin) = (b.input("A"), b.input("B"), b.input("C_in"));
    let p = b.and(x, !y);
    let q = b.and(!x, y);
    let xnor = b.and(!p, !q);
    let a1 = b.and(x, y);
    let a2 = b.and(cin, !xnor);
    let r = b.and(!cin, xnor);
    let sum = b.and(!a2, !r);
    let nor = b.and(!x, !y);
    let c2 = b.and(cin, !nor);
    let co = b.and(!a1, !c2);
    b.output(sum, "SUM");
    b.output(!co, "C_out");
    done(b)
}

/// f = x1·x2 + x3
pub fn fig6_f() -> Circuit {
    let mut b = CircuitBuilder::new("fig6_f");
    let (x1, x2, x3) = (b.input("x1"), b.input("x2"), b.input("x3"));
    let t = b.and(x1, x2);
    let f = b.or(t, x3);
    b.output(f, "f");
    done(b)
}

/// g = ¬x1 + x2·¬x3
pub fn fig6_g() -> Circuit {
    let mut b = CircuitBuilder::new("fig6_g");
    let (x1, x2, x3) = (b.input("x1"), b.input("x2"), b.input("x3"));
    let t = b.and(x2, !x3);
    let g = b.or(!x1, t);
    b.output(g, "g");
    done(b)
}

fn full_add(b: &mut CircuitBuilder, x: Lit, y: Lit, c: Lit) -> (Lit, Lit) {
    let t = b.xor(x, y);
    let s = b.xor(t, c);
    let g = b.and(x, y);
    let p = b.and(c, t);
    let co = b.or(g, p);
    (s, co)
}

fn half_add(b: &mut CircuitBuilder, x: Lit, y: Lit) -> (Lit, Lit) {
    let s = b.xor(x, y);
    let c = b.and(x, y);
    (s, c)
}

/// `k`-bit ripple-carry adder: inputs a0.., b0.., cin; outputs s0.., cout.
pub fn ripple_carry_adder(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("rca{k}"));
    let a: Vec<Lit> = (0..k).map(|i| b.input(format!("a{i}"))).collect();
    let bb: Vec<Lit> = (0..k).map(|i| b.input(format!("b{i}"))).collect();
    let mut carry = b.input("cin");
    for i in 0..k {
        let (s, c) = full_add(&mut b, a[i], bb[i], carry);
        b.output(s, format!("s{i}"));
        carry = c;
    }
    b.output(carry, "cout");
    done(b)
}

/// `k`×`k` array multiplier with a 2k-bit product.
pub fn multiplier(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("mul{k}"));
    let a: Vec<Lit> = (0..k).map(|i| b.input(format!("a{i}"))).collect();
    let x: Vec<Lit> = (0..k).map(|i| b.input(format!("b{i}"))).collect();
    // columns of partial-product bits, reduced by carry-save addition
    let mut cols: Vec<Vec<Lit>> = vec![Vec::new(); 2 * k];
    for i in 0..k {
        for j in 0..k {
            let pp = b.and(a[i], x[j]);
            cols[i + j].push(pp);
        }
    }
    let mut product = Vec::with_capacity(2 * k);
    for w in 0..2 * k {
        while cols[w].len() > 1 {
            let (s, c) = if cols[w].len() >= 3 {
                let (p, q, r) = (cols[w].remove(0), cols[w].remove(0), cols[w].remove(0));
                full_add(&mut b, p, q, r)
            } else {
                let (p, q) = (cols[w].remove(0), cols[w].remove(0));
                half_add(&mut b, p, q)
            };
            cols[w].push(s);
            if w + 1 < 2 * k {
                cols[w + 1].push(c);
            }
        }
        let bit = match cols[w].first() {
            Some(&l) => l,
            None => b.constant(false),
        };
        product.push(bit);
    }
    for (w, l) in product.into_iter().enumerate() {
        b.output(l, format!("p{w}"));
    }
    done(b)
}

/// Unsigned `k`-bit comparator with outputs lt, eq, gt.
pub fn comparator(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("cmp{k}"));
    let a: Vec<Lit> = (0..k).map(|i| b.input(format!("a{i}"))).collect();
    let x: Vec<Lit> = (0..k).map(|i| b.input(format!("b{i}"))).collect();
    // scan from the most significant bit
    let mut eq: Option<Lit> = None;
    let mut gt: Option<Lit> = None;
    for i in (0..k).rev() {
        let g = b.and(a[i], !x[i]);
        let e = b.xor(a[i], x[i]);
        let e = !e;
        let g = match eq {
            Some(eq) => b.and(eq, g),
            None => g,
        };
        gt = Some(match gt {
            Some(prev) => b.or(prev, g),
            None => g,
        });
        eq = Some(match eq {
            Some(prev) => b.and(prev, e),
            None => e,
        });
    }
    let (eq, gt) = (eq.unwrap(), gt.unwrap());
    let lt = b.and(!eq, !gt);
    b.output(lt, "lt");
    b.output(eq, "eq");
    b.output(gt, "gt");
    done(b)
}

/// Balanced XOR tree over `k` inputs.
pub fn parity(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("parity{k}"));
    let mut layer: Vec<Lit> = (0..k).map(|i| b.input(format!("x{i}"))).collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        for pair in layer.chunks(2) {
            next.push(match *pair {
                [p, q] => b.xor(p, q),
                [p] => p,
                _ => unreachable!(),
            });
        }
        layer = next;
    }
    b.output(layer[0], "p");
    done(b)
}

/// 2^k-to-1 multiplexer: select bits s0.., then data d0...
pub fn mux(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("mux{k}"));
    let s: Vec<Lit> = (0..k).map(|i| b.input(format!("s{i}"))).collect();
    let mut layer: Vec<Lit> = (0..1 << k).map(|i| b.input(format!("d{i}"))).collect();
    for &sel in &s {
        layer = layer.chunks(2).map(|p| b.mux(sel, p[1], p[0])).collect();
    }
    b.output(layer[0], "y");
    done(b)
}

/// `k`-to-2^k one-hot decoder.
pub fn decoder(k: usize) -> Circuit {
    let mut b = CircuitBuilder::new(format!("dec{k}"));
    let x: Vec<Lit> = (0..k).map(|i| b.input(format!("x{i}"))).collect();
    for v in 0..1usize << k {
        let mut acc = x[0].xor((v & 1) == 0);
        for (i, &xi) in x.iter().enumerate().skip(1) {
            acc = b.and(acc, xi.xor((v >> i) & 1 == 0));
        }
        b.output(acc, format!("y{v}"));
    }
    done(b)
}
