//! AIGER ASCII (`aag`) reader and writer, combinational subset.
//!
//! Variables are mapped densely: the constant node is created only when
//! literal 0/1 is referenced, inputs follow in declaration order, then AND
//! nodes in file order.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{AigError, Circuit, Lit, Node, NodeId};

enum Def {
    Input,
    And(u64, u64),
}

fn parse_num(tok: &str, line: usize) -> Result<u64, AigError> {
    tok.parse::<u64>().map_err(|_| AigError::MalformedBody {
        line,
        msg: format!("expected an unsigned integer, found {tok:?}"),
    })
}

fn looks_like_symbol_or_comment(line: &str) -> bool {
    matches!(line.chars().next(), Some('i' | 'o' | 'l' | 'b' | 'c' | 'j' | 'f'))
}

pub fn parse_aag(text: &str) -> Result<Circuit, AigError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines
        .next()
        .ok_or_else(|| AigError::MalformedHeader("empty input".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.first() {
        Some(&"aag") => {}
        Some(&"aig") => return Err(AigError::MalformedHeader("binary AIGER is not supported".into())),
        _ => return Err(AigError::MalformedHeader(format!("expected 'aag', found {header:?}"))),
    }
    if toks.len() < 6 {
        return Err(AigError::MalformedHeader(format!(
            "expected 'aag M I L O A', found {header:?}"
        )));
    }
    let mut fields = [0u64; 5];
    for (f, tok) in fields.iter_mut().zip(&toks[1..6]) {
        *f = tok
            .parse()
            .map_err(|_| AigError::MalformedHeader(format!("bad header field {tok:?}")))?;
    }
    let [max_var, n_in, n_latch, n_out, n_and] = fields;
    if toks.len() > 6 && toks[6..].iter().any(|t| t.parse::<u64>().map_or(true, |v| v != 0)) {
        return Err(AigError::MalformedHeader(
            "AIGER 1.9 bad/constraint/justice/fairness sections are not supported".into(),
        ));
    }
    if n_latch > 0 {
        return Err(AigError::LatchesUnsupported(n_latch as usize));
    }
    if max_var < n_in + n_latch + n_and {
        return Err(AigError::MalformedHeader(format!(
            "M = {max_var} is smaller than I + L + A = {}",
            n_in + n_latch + n_and
        )));
    }

    let max_lit = 2 * max_var + 1;
    let mut defs: HashMap<u64, Def> = HashMap::new();
    let mut input_vars = Vec::with_capacity(n_in as usize);
    let mut and_vars = Vec::with_capacity(n_and as usize);
    let mut output_lits = Vec::with_capacity(n_out as usize);

    let mut take = |what: &str, idx: u64, total: u64| {
        lines.next().filter(|(_, l)| !l.is_empty()).ok_or_else(|| {
            AigError::MalformedHeader(format!("header claims {what}={total} but only {idx} lines present"))
        })
    };

    for k in 0..n_in {
        let (ln, line) = take("I", k, n_in)?;
        let lit = parse_num(line, ln)?;
        if lit < 2 || lit & 1 == 1 || lit > max_lit {
            return Err(AigError::MalformedBody { line: ln, msg: format!("invalid input literal {lit}") });
        }
        if defs.insert(lit >> 1, Def::Input).is_some() {
            return Err(AigError::MalformedBody { line: ln, msg: format!("variable {} defined twice", lit >> 1) });
        }
        input_vars.push(lit >> 1);
    }
    for k in 0..n_out {
        let (ln, line) = take("O", k, n_out)?;
        if looks_like_symbol_or_comment(line) {
            return Err(AigError::MalformedHeader(format!("header claims O={n_out} but only {k} lines present")));
        }
        let lit = parse_num(line, ln)?;
        if lit > max_lit {
            return Err(AigError::DanglingReference(format!("output literal {lit} exceeds 2M+1 = {max_lit}")));
        }
        output_lits.push(lit);
    }
    for k in 0..n_and {
        let (ln, line) = take("A", k, n_and)?;
        if looks_like_symbol_or_comment(line) {
            return Err(AigError::MalformedHeader(format!("header claims A={n_and} but only {k} AND lines present")));
        }
        let nums = line
            .split_whitespace()
            .map(|t| parse_num(t, ln))
            .collect::<Result<Vec<_>, _>>()?;
        let [lhs, r0, r1] = nums[..] else {
            return Err(AigError::MalformedBody { line: ln, msg: "AND line needs three literals".into() });
        };
        if lhs < 2 || lhs & 1 == 1 || lhs > max_lit {
            return Err(AigError::MalformedBody { line: ln, msg: format!("invalid AND literal {lhs}") });
        }
        for r in [r0, r1] {
            if r > max_lit {
                return Err(AigError::DanglingReference(format!("literal {r} exceeds 2M+1 = {max_lit}")));
            }
        }
        if defs.insert(lhs >> 1, Def::And(r0, r1)).is_some() {
            return Err(AigError::MalformedBody { line: ln, msg: format!("variable {} defined twice", lhs >> 1) });
        }
        and_vars.push(lhs >> 1);
    }

    let mut name = String::new();
    let mut input_names = vec![None; n_in as usize];
    let mut output_names = vec![None; n_out as usize];
    while let Some((ln, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        if line == "c" || line.starts_with("c ") {
            if let Some((_, first)) = lines.next() {
                name = first.to_string();
            }
            break;
        }
        let (head, sym) = line.split_once(' ').unwrap_or((line, ""));
        let (kind, idx) = head.split_at(1);
        let idx: usize = idx.parse().map_err(|_| AigError::MalformedBody {
            line: ln,
            msg: format!("bad symbol table entry {line:?}"),
        })?;
        let slot = match kind {
            "i" => input_names.get_mut(idx),
            "o" => output_names.get_mut(idx),
            _ => None,
        };
        match slot {
            Some(s) => *s = Some(sym.to_string()),
            None => {
                return Err(AigError::MalformedBody { line: ln, msg: format!("bad symbol table entry {line:?}") })
            }
        }
    }

    // dense node numbering
    let uses_const = output_lits
        .iter()
        .copied()
        .chain(and_vars.iter().flat_map(|v| match defs[v] {
            Def::And(a, b) => [a, b],
            Def::Input => [2, 2],
        }))
        .any(|l| l < 2);
    let mut node_of: HashMap<u64, NodeId> = HashMap::new();
    let mut nodes = Vec::new();
    if uses_const {
        node_of.insert(0, 0);
        nodes.push(Node::ConstFalse);
    }
    let mut inputs = Vec::new();
    for &v in &input_vars {
        node_of.insert(v, nodes.len());
        inputs.push(nodes.len());
        nodes.push(Node::Input);
    }
    for &v in &and_vars {
        node_of.insert(v, nodes.len());
        nodes.push(Node::ConstFalse); // placeholder, filled below
    }
    let lit_of = |l: u64| -> Result<Lit, AigError> {
        node_of
            .get(&(l >> 1))
            .map(|&id| Lit::new(id, l & 1 == 1))
            .ok_or_else(|| AigError::DanglingReference(format!("literal {l} refers to undefined variable {}", l >> 1)))
    };
    for &v in &and_vars {
        if let Def::And(a, b) = defs[&v] {
            nodes[node_of[&v]] = Node::And(lit_of(a)?, lit_of(b)?);
        }
    }
    let outputs = output_lits.iter().map(|&l| lit_of(l)).collect::<Result<Vec<_>, _>>()?;

    Circuit::from_parts_unchecked(name, nodes, inputs, outputs)
        .with_names(input_names, output_names)
        .checked()
}

pub fn write_aag(c: &Circuit) -> String {
    let n = c.normalized();
    let mut var = vec![0u64; n.num_nodes()];
    let mut next = 1u64;
    for &i in n.inputs() {
        var[i] = next;
        next += 1;
    }
    let and_ids: Vec<NodeId> = (0..n.num_nodes()).filter(|&id| n.node(id).is_and()).collect();
    for &id in &and_ids {
        var[id] = next;
        next += 1;
    }
    let lit = |l: Lit| 2 * var[l.node()] + l.is_complemented() as u64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "aag {} {} 0 {} {}",
        n.num_inputs() + and_ids.len(),
        n.num_inputs(),
        n.num_outputs(),
        and_ids.len()
    );
    for &i in n.inputs() {
        let _ = writeln!(out, "{}", 2 * var[i]);
    }
    for &l in n.outputs() {
        let _ = writeln!(out, "{}", lit(l));
    }
    for &id in &and_ids {
        if let Node::And(a, b) = n.node(id) {
            let _ = writeln!(out, "{} {} {}", 2 * var[id], lit(a), lit(b));
        }
    }
    for (k, name) in n.input_names().iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "i{k} {name}");
        }
    }
    for (k, name) in n.output_names().iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "o{k} {name}");
        }
    }
    if !n.name().is_empty() {
        let _ = writeln!(out, "c\n{}", n.name());
    }
    out
}
