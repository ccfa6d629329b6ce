//! And-Inverter Graph data model.
//!
//! A [`Circuit`] is a DAG of two-input AND nodes whose edges carry an optional
//! complement flag. Primary inputs are `Input` nodes listed in declaration
//! order; primary outputs are complementable literals. There is no explicit
//! inverter node kind: explicit inverters only exist in the graph views built
//! by [`crate::encode`].

mod aiger;
mod random;
mod sim;
mod topo;

use std::fmt;
use std::ops::Not;

use thiserror::Error;

pub use aiger::{parse_aag, write_aag};
pub use random::random_circuit;
pub use sim::{
    simulate_exhaustive, simulate_random, simulate_words, stimulus, Signature, TruthTable,
    DEFAULT_SIGNATURE_WORDS, MAX_EXHAUSTIVE_INPUTS,
};
pub use topo::{depth, levels, topo_order, TopoMethod};

/// Dense node index.
pub type NodeId = usize;

/// A node reference with a complement flag, packed AIGER style as `2 * node + complemented`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(node: NodeId, complemented: bool) -> Self {
        Lit(((node as u32) << 1) | complemented as u32)
    }

    pub fn node(self) -> NodeId {
        (self.0 >> 1) as NodeId
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    /// Returns the literal complemented iff `flip` is set.
    pub fn xor(self, flip: bool) -> Self {
        Lit(self.0 ^ flip as u32)
    }

    pub fn regular(self) -> Self {
        Lit(self.0 & !1)
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_complemented() {
            write!(f, "!n{}", self.node())
        } else {
            write!(f, "n{}", self.node())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    ConstFalse,
    Input,
    And(Lit, Lit),
}

impl Node {
    pub fn fanins(&self) -> impl Iterator<Item = Lit> {
        let pair = match *self {
            Node::And(a, b) => [Some(a), Some(b)],
            _ => [None, None],
        };
        pair.into_iter().flatten()
    }

    pub fn is_and(&self) -> bool {
        matches!(self, Node::And(..))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AigError {
    #[error("malformed AIGER header: {0}")]
    MalformedHeader(String),
    #[error("malformed AIGER body at line {line}: {msg}")]
    MalformedBody { line: usize, msg: String },
    #[error("latches are not supported (L = {0})")]
    LatchesUnsupported(usize),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("combinational cycle through node {0}")]
    CycleDetected(NodeId),
    #[error("exhaustive simulation supports at most {max} inputs, circuit has {got}")]
    TooManyInputs { got: usize, max: usize },
    #[error("invalid circuit: {0:?}")]
    Invalid(Vec<Violation>),
}

/// A broken [`Circuit`] invariant, as reported by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DanglingReference { node: NodeId, target: NodeId },
    DanglingOutput { output: usize, target: NodeId },
    CycleDetected { node: NodeId },
    DuplicateConst { node: NodeId },
    UndeclaredInput { node: NodeId },
    BadInputSlot { slot: usize, node: NodeId },
    NoInputs,
    NoOutputs,
    NameCountMismatch,
}

impl From<Vec<Violation>> for AigError {
    fn from(v: Vec<Violation>) -> Self {
        match v.first() {
            Some(Violation::CycleDetected { node }) if v.len() == 1 => AigError::CycleDetected(*node),
            Some(Violation::DanglingReference { node, target }) if v.len() == 1 => {
                AigError::DanglingReference(format!("node {node} references missing node {target}"))
            }
            _ => AigError::Invalid(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    name: String,
    nodes: Vec<Node>,
    inputs: Vec<NodeId>,
    outputs: Vec<Lit>,
    input_names: Vec<Option<String>>,
    output_names: Vec<Option<String>>,
}

impl Circuit {
    /// Builds a circuit and checks every invariant.
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<Node>,
        inputs: Vec<NodeId>,
        outputs: Vec<Lit>,
    ) -> Result<Self, AigError> {
        let c = Self::from_parts_unchecked(name, nodes, inputs, outputs);
        c.checked()
    }

    /// Builds a circuit without validation. Use [`Circuit::validate`] to inspect it.
    pub fn from_parts_unchecked(
        name: impl Into<String>,
        nodes: Vec<Node>,
        inputs: Vec<NodeId>,
        outputs: Vec<Lit>,
    ) -> Self {
        let input_names = vec![None; inputs.len()];
        let output_names = vec![None; outputs.len()];
        Circuit {
            name: name.into(),
            nodes,
            inputs,
            outputs,
            input_names,
            output_names,
        }
    }

    pub(crate) fn checked(self) -> Result<Self, AigError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(violations.into())
        }
    }

    pub fn with_names(
        mut self,
        input_names: Vec<Option<String>>,
        output_names: Vec<Option<String>>,
    ) -> Self {
        self.input_names = input_names;
        self.output_names = output_names;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_ands(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_and()).count()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id]
    }

    /// Input nodes in declaration order.
    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    pub fn input_names(&self) -> &[Option<String>] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[Option<String>] {
        &self.output_names
    }

    /// Display name of input slot `i` (`x{i}` when unnamed).
    pub fn input_label(&self, i: usize) -> String {
        self.input_names[i].clone().unwrap_or_else(|| format!("x{i}"))
    }

    /// Display name of output slot `j` (`y{j}` when unnamed).
    pub fn output_label(&self, j: usize) -> String {
        self.output_names[j].clone().unwrap_or_else(|| format!("y{j}"))
    }

    pub fn find_input(&self, name: &str) -> Option<usize> {
        self.input_names.iter().position(|n| n.as_deref() == Some(name))
    }

    pub fn find_output(&self, name: &str) -> Option<usize> {
        self.output_names.iter().position(|n| n.as_deref() == Some(name))
    }

    pub fn const_node(&self) -> Option<NodeId> {
        self.nodes.iter().position(|n| matches!(n, Node::ConstFalse))
    }

    /// Reports every broken invariant; an empty list means the circuit is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        if self.inputs.is_empty() {
            out.push(Violation::NoInputs);
        }
        if self.outputs.is_empty() {
            out.push(Violation::NoOutputs);
        }
        if self.input_names.len() != self.inputs.len()
            || self.output_names.len() != self.outputs.len()
        {
            out.push(Violation::NameCountMismatch);
        }
        let mut seen_const = false;
        let mut declared = vec![0usize; n];
        for (slot, &id) in self.inputs.iter().enumerate() {
            if id >= n || self.nodes[id] != Node::Input {
                out.push(Violation::BadInputSlot { slot, node: id });
            } else {
                declared[id] += 1;
            }
        }
        let mut dangling = false;
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::ConstFalse => {
                    if seen_const {
                        out.push(Violation::DuplicateConst { node: id });
                    }
                    seen_const = true;
                }
                Node::Input => {
                    if declared[id] != 1 {
                        out.push(Violation::UndeclaredInput { node: id });
                    }
                }
                Node::And(a, b) => {
                    for l in [a, b] {
                        if l.node() >= n {
                            out.push(Violation::DanglingReference {
                                node: id,
                                target: l.node(),
                            });
                            dangling = true;
                        }
                    }
                }
            }
        }
        for (j, l) in self.outputs.iter().enumerate() {
            if l.node() >= n {
                out.push(Violation::DanglingOutput {
                    output: j,
                    target: l.node(),
                });
            }
        }
        if !dangling {
            if let Some(node) = self.find_cycle() {
                out.push(Violation::CycleDetected { node });
            }
        }
        out
    }

    fn find_cycle(&self) -> Option<NodeId> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        for root in 0..self.nodes.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (id, ref mut next)) = stack.last_mut() {
                let fanins: Vec<Lit> = self.nodes[id].fanins().collect();
                if *next < fanins.len() {
                    let child = fanins[*next].node();
                    *next += 1;
                    match state[child] {
                        0 => {
                            state[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => return Some(child),
                        _ => {}
                    }
                } else {
                    state[id] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Nodes in an order where every AND follows both of its fan-ins.
    /// Returns `0..n` when node ids are already topologically sorted.
    pub fn eval_order(&self) -> Vec<NodeId> {
        let sorted = self.nodes.iter().enumerate().all(|(id, node)| node.fanins().all(|l| l.node() < id));
        if sorted {
            return (0..self.nodes.len()).collect();
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut done = vec![false; self.nodes.len()];
        for root in 0..self.nodes.len() {
            if done[root] {
                continue;
            }
            let mut stack = vec![(root, false)];
            while let Some((id, expanded)) = stack.pop() {
                if done[id] {
                    continue;
                }
                if expanded {
                    done[id] = true;
                    order.push(id);
                } else {
                    stack.push((id, true));
                    let fanins: Vec<Lit> = self.nodes[id].fanins().collect();
                    for l in fanins.into_iter().rev() {
                        if !done[l.node()] {
                            stack.push((l.node(), false));
                        }
                    }
                }
            }
        }
        order
    }

    /// Fan-out count of every node, counting PO references.
    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            for l in node.fanins() {
                counts[l.node()] += 1;
            }
        }
        for l in &self.outputs {
            counts[l.node()] += 1;
        }
        counts
    }

    /// Dense renumbering: constant (if any) first, then inputs in declaration
    /// order, then AND nodes in topological order. Names are kept.
    pub fn normalized(&self) -> Circuit {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(self.nodes.len());
        if let Some(c) = self.const_node() {
            map[c] = nodes.len();
            nodes.push(Node::ConstFalse);
        }
        let mut inputs = Vec::with_capacity(self.inputs.len());
        for &i in &self.inputs {
            map[i] = nodes.len();
            inputs.push(nodes.len());
            nodes.push(Node::Input);
        }
        for id in self.eval_order() {
            if let Node::And(a, b) = self.nodes[id] {
                map[id] = nodes.len();
                nodes.push(Node::And(remap(a, &map), remap(b, &map)));
            }
        }
        let outputs = self.outputs.iter().map(|&l| remap(l, &map)).collect();
        Circuit {
            name: self.name.clone(),
            nodes,
            inputs,
            outputs,
            input_names: self.input_names.clone(),
            output_names: self.output_names.clone(),
        }
    }

    /// Drops AND and constant nodes unreachable from any output, keeping the
    /// relative order of the survivors. Inputs are always kept.
    pub fn swept(&self) -> Circuit {
        let mut live = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.outputs.iter().map(|l| l.node()).collect();
        while let Some(id) = stack.pop() {
            if live[id] {
                continue;
            }
            live[id] = true;
            stack.extend(self.nodes[id].fanins().map(|l| l.node()));
        }
        for &i in &self.inputs {
            live[i] = true;
        }
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for id in 0..self.nodes.len() {
            if live[id] {
                map[id] = nodes.len();
                nodes.push(self.nodes[id]);
            }
        }
        for node in nodes.iter_mut() {
            if let Node::And(a, b) = *node {
                *node = Node::And(remap(a, &map), remap(b, &map));
            }
        }
        Circuit {
            name: self.name.clone(),
            nodes,
            inputs: self.inputs.iter().map(|&i| map[i]).collect(),
            outputs: self.outputs.iter().map(|&l| remap(l, &map)).collect(),
            input_names: self.input_names.clone(),
            output_names: self.output_names.clone(),
        }
    }

    /// Structural identity up to dense topological renumbering; names are ignored.
    pub fn structurally_equal(&self, other: &Circuit) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.nodes == b.nodes && a.inputs == b.inputs && a.outputs == b.outputs
    }

    pub(crate) fn into_parts(self) -> CircuitParts {
        CircuitParts {
            name: self.name,
            nodes: self.nodes,
            inputs: self.inputs,
            outputs: self.outputs,
            input_names: self.input_names,
            output_names: self.output_names,
        }
    }
}

/// Owned fields of a [`Circuit`], for crate-internal rewriting.
pub(crate) struct CircuitParts {
    pub name: String,
    pub nodes: Vec<Node>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<Lit>,
    pub input_names: Vec<Option<String>>,
    pub output_names: Vec<Option<String>>,
}

impl CircuitParts {
    pub fn build(self) -> Circuit {
        Circuit {
            name: self.name,
            nodes: self.nodes,
            inputs: self.inputs,
            outputs: self.outputs,
            input_names: self.input_names,
            output_names: self.output_names,
        }
    }
}

fn remap(l: Lit, map: &[usize]) -> Lit {
    Lit::new(map[l.node()], l.is_complemented())
}

/// Incremental construction of a [`Circuit`]. No hashing or simplification is done.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    name: String,
    nodes: Vec<Node>,
    inputs: Vec<NodeId>,
    input_names: Vec<Option<String>>,
    outputs: Vec<Lit>,
    output_names: Vec<Option<String>>,
    const_node: Option<NodeId>,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        CircuitBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, name: impl Into<String>) -> Lit {
        self.push_input(Some(name.into()))
    }

    pub fn unnamed_input(&mut self) -> Lit {
        self.push_input(None)
    }

    fn push_input(&mut self, name: Option<String>) -> Lit {
        let id = self.nodes.len();
        self.nodes.push(Node::Input);
        self.inputs.push(id);
        self.input_names.push(name);
        Lit::new(id, false)
    }

    pub fn constant(&mut self, value: bool) -> Lit {
        let id = *self.const_node.get_or_insert_with(|| {
            self.nodes.push(Node::ConstFalse);
            self.nodes.len() - 1
        });
        Lit::new(id, value)
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let id = self.nodes.len();
        self.nodes.push(Node::And(a, b));
        Lit::new(id, false)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    /// Three-AND XOR: `!(!(a & !b) & !(!a & b))`.
    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let p = self.and(a, !b);
        let q = self.and(!a, b);
        self.or(p, q)
    }

    pub fn mux(&mut self, sel: Lit, then: Lit, otherwise: Lit) -> Lit {
        let t = self.and(sel, then);
        let e = self.and(!sel, otherwise);
        self.or(t, e)
    }

    pub fn output(&mut self, lit: Lit, name: impl Into<String>) {
        self.outputs.push(lit);
        self.output_names.push(Some(name.into()));
    }

    pub fn unnamed_output(&mut self, lit: Lit) {
        self.outputs.push(lit);
        self.output_names.push(None);
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn finish(self) -> Result<Circuit, AigError> {
        Circuit {
            name: self.name,
            nodes: self.nodes,
            inputs: self.inputs,
            outputs: self.outputs,
            input_names: self.input_names,
            output_names: self.output_names,
        }
        .checked()
    }
}
