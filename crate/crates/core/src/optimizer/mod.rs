//! Function-preserving rewrite passes and the random recipe driver used to
//! build logic-equivalent groups.
//!
//! Every pass rebuilds the graph in topological order and finishes with a
//! sweep, so dead logic never survives a pass.

mod library;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{Circuit, Lit, Node, NodeId};

pub use library::{library_functions, library_implementations, LibImpl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PassKind {
    Strash,
    ConstProp,
    DoubleNegElim,
    Balance,
    DeMorganRewrite,
    LocalRewrite,
}

impl PassKind {
    pub const ALL: [PassKind; 6] = [
        PassKind::Strash,
        PassKind::ConstProp,
        PassKind::DoubleNegElim,
        PassKind::Balance,
        PassKind::DeMorganRewrite,
        PassKind::LocalRewrite,
    ];
}

/// A replayable optimization script.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptRecipe {
    pub seed: u64,
    pub length: usize,
    pub passes: Vec<PassKind>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptError {
    #[error("recipe length bounds must satisfy 1 <= min <= max, got [{0}, {1}]")]
    BadLength(usize, usize),
    #[error("no structurally distinct result after {0} recipes")]
    NoStructuralChange(usize),
}

pub const DEFAULT_MIN_LEN: usize = 2;
pub const DEFAULT_MAX_LEN: usize = 10;
const MAX_ATTEMPTS: usize = 8;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Incremental graph construction shared by all passes.
struct Rebuild {
    nodes: Vec<Node>,
    level: Vec<usize>,
    const_id: Option<NodeId>,
    hash: Option<HashMap<(Lit, Lit), Lit>>,
    simplify: bool,
}

impl Rebuild {
    /// Starts a rebuild of `c`; returns the builder and a map with every input
    /// (and the constant, if present) already translated.
    fn start(c: &Circuit, hash: bool, simplify: bool) -> (Self, Vec<Option<Lit>>) {
        let mut rb = Rebuild {
            nodes: Vec::with_capacity(c.num_nodes()),
            level: Vec::with_capacity(c.num_nodes()),
            const_id: None,
            hash: hash.then(HashMap::new),
            simplify,
        };
        let mut map = vec![None; c.num_nodes()];
        for &i in c.inputs() {
            map[i] = Some(rb.push(Node::Input, 0));
        }
        if let Some(k) = c.const_node() {
            map[k] = Some(rb.constant(false));
        }
        (rb, map)
    }

    fn push(&mut self, node: Node, level: usize) -> Lit {
        self.nodes.push(node);
        self.level.push(level);
        Lit::new(self.nodes.len() - 1, false)
    }

    fn constant(&mut self, value: bool) -> Lit {
        let id = match self.const_id {
            Some(id) => id,
            None => {
                let l = self.push(Node::ConstFalse, 0);
                self.const_id = Some(l.node());
                l.node()
            }
        };
        Lit::new(id, value)
    }

    fn is_const(&self, l: Lit) -> Option<bool> {
        (Some(l.node()) == self.const_id).then(|| l.is_complemented())
    }

    fn level_of(&self, l: Lit) -> usize {
        self.level[l.node()]
    }

    fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if self.simplify {
            if self.is_const(a) == Some(false) || self.is_const(b) == Some(false) || a == !b {
                return self.constant(false);
            }
            if self.is_const(a) == Some(true) || a == b {
                return b;
            }
            if self.is_const(b) == Some(true) {
                return a;
            }
        }
        let (a, b) = if a.raw() <= b.raw() { (a, b) } else { (b, a) };
        if let Some(h) = &self.hash {
            if let Some(&l) = h.get(&(a, b)) {
                return l;
            }
        }
        let lvl = self.level_of(a).max(self.level_of(b)) + 1;
        let l = self.push(Node::And(a, b), lvl);
        if let Some(h) = &mut self.hash {
            h.insert((a, b), l);
        }
        l
    }

    fn finish(self, c: &Circuit, outputs: Vec<Lit>) -> Circuit {
        let inputs = c.inputs().iter().enumerate().map(|(slot, _)| slot).collect();
        Circuit::from_parts_unchecked(c.name().to_string(), self.nodes, inputs, outputs)
            .with_names(c.input_names().to_vec(), c.output_names().to_vec())
            .swept()
    }
}

fn translate(map: &[Option<Lit>], l: Lit) -> Lit {
    map[l.node()].expect("fan-in translated before use").xor(l.is_complemented())
}

/// Rebuilds `c` node by node, letting `f` produce each AND's replacement.
fn rebuild_with(
    c: &Circuit,
    hash: bool,
    simplify: bool,
    mut f: impl FnMut(&mut Rebuild, Lit, Lit) -> Lit,
) -> Circuit {
    let (mut rb, mut map) = Rebuild::start(c, hash, simplify);
    for id in c.eval_order() {
        if let Node::And(a, b) = c.node(id) {
            let (a, b) = (translate(&map, a), translate(&map, b));
            map[id] = Some(f(&mut rb, a, b));
        }
    }
    let outs = c.outputs().iter().map(|&l| translate(&map, l)).collect();
    rb.finish(c, outs)
}

/// Structural hashing: merges AND nodes with identical (order-normalized) fan-ins.
pub fn pass_strash(c: &Circuit) -> Circuit {
    rebuild_with(c, true, false, |rb, a, b| rb.and(a, b))
}

/// Constant propagation plus the idempotent and contradiction laws:
/// x∧0 = 0, x∧1 = x, x∧x = x, x∧¬x = 0.
pub fn pass_const_prop(c: &Circuit) -> Circuit {
    rebuild_with(c, false, true, |rb, a, b| rb.and(a, b))
}

/// Collapses buffers (AND(l, l) and AND(l, 1)) so complement flags along a
/// buffer chain fold into a single edge, cancelling in pairs.
pub fn pass_double_neg(c: &Circuit) -> Circuit {
    rebuild_with(c, false, false, |rb, a, b| {
        if a == b || rb.is_const(b) == Some(true) {
            a
        } else if rb.is_const(a) == Some(true) {
            b
        } else {
            rb.and(a, b)
        }
    })
}

/// Re-associates maximal single-fanout, non-complemented AND trees into
/// level-balanced trees. Never increases depth.
pub fn pass_balance(c: &Circuit) -> Circuit {
    let fanout = c.fanout_counts();
    let expandable = |l: Lit| !l.is_complemented() && c.node(l.node()).is_and() && fanout[l.node()] == 1;
    let mut absorbed = vec![false; c.num_nodes()];
    for node in c.nodes() {
        if let Node::And(a, b) = *node {
            for l in [a, b] {
                if expandable(l) {
                    absorbed[l.node()] = true;
                }
            }
        }
    }

    let (mut rb, mut map) = Rebuild::start(c, false, false);
    for id in c.eval_order() {
        if !c.node(id).is_and() || absorbed[id] {
            continue;
        }
        let mut leaves = Vec::new();
        let mut stack: Vec<Lit> = c.node(id).fanins().collect();
        while let Some(l) = stack.pop() {
            if expandable(l) {
                stack.extend(c.node(l.node()).fanins());
            } else {
                leaves.push(translate(&map, l));
            }
        }
        map[id] = Some(balanced_and(&mut rb, leaves));
    }
    let outs = c.outputs().iter().map(|&l| translate(&map, l)).collect();
    rb.finish(c, outs)
}

fn balanced_and(rb: &mut Rebuild, mut leaves: Vec<Lit>) -> Lit {
    leaves.sort_by_key(|l| l.raw());
    leaves.dedup();
    if leaves.windows(2).any(|w| w[0] == !w[1]) || leaves.iter().any(|&l| rb.is_const(l) == Some(false)) {
        return rb.constant(false);
    }
    leaves.retain(|&l| rb.is_const(l) != Some(true));
    if leaves.is_empty() {
        return rb.constant(true);
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize, u32)>> = leaves
        .iter()
        .enumerate()
        .map(|(seq, &l)| Reverse((rb.level_of(l), seq, l.raw())))
        .collect();
    let mut seq = leaves.len();
    let lit = |raw: u32| Lit::new((raw >> 1) as NodeId, raw & 1 == 1);
    loop {
        let Reverse((_, _, x)) = heap.pop().unwrap();
        let Some(Reverse((_, _, y))) = heap.pop() else {
            return lit(x);
        };
        let g = rb.and(lit(x), lit(y));
        heap.push(Reverse((rb.level_of(g), seq, g.raw())));
        seq += 1;
    }
}

#[derive(Clone, Copy, Debug)]
enum Site {
    /// AND(¬m, c), m = AND(a, b)  →  ¬AND(¬AND(c, ¬a), ¬AND(c, ¬b))
    Distribute { m: NodeId, c: Lit },
    /// AND(¬p, ¬q), p = AND(x, c), q = AND(y, c)  →  ¬AND(c, ¬AND(¬x, ¬y))
    Factor { c: Lit, x: Lit, y: Lit },
    /// AND(¬a, ¬b)  →  AND(AND(¬a, ¬a), AND(¬b, ¬b)), explicit inverter buffers
    Buffer,
}

fn demorgan_sites(c: &Circuit, id: NodeId) -> Vec<Site> {
    let Node::And(a, b) = c.node(id) else { return Vec::new() };
    let mut sites = Vec::new();
    for (neg, other) in [(a, b), (b, a)] {
        if neg.is_complemented() && c.node(neg.node()).is_and() {
            sites.push(Site::Distribute { m: neg.node(), c: other });
        }
    }
    if a.is_complemented() && b.is_complemented() {
        if let (Node::And(p0, p1), Node::And(q0, q1)) = (c.node(a.node()), c.node(b.node())) {
            for (pc, px) in [(p0, p1), (p1, p0)] {
                for (qc, qy) in [(q0, q1), (q1, q0)] {
                    if pc == qc {
                        sites.push(Site::Factor { c: pc, x: px, y: qy });
                    }
                }
            }
        }
        sites.push(Site::Buffer);
    }
    sites
}

/// De Morgan rewriting at randomly chosen sites: distributes an AND over a
/// complemented AND into the OR-of-ANDs dual, factors the dual back, or makes
/// the inverters of a NOR pattern explicit. At most `1 + #AND/8` sites.
pub fn pass_demorgan(c: &Circuit, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(NodeId, Vec<Site>)> = (0..c.num_nodes())
        .map(|id| (id, demorgan_sites(c, id)))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    candidates.shuffle(&mut rng);
    candidates.truncate(1 + c.num_ands() / 8);
    let mut chosen: HashMap<NodeId, Site> = HashMap::new();
    for (id, sites) in candidates {
        chosen.insert(id, *sites.choose(&mut rng).unwrap());
    }

    let (mut rb, mut map) = Rebuild::start(c, false, false);
    for id in c.eval_order() {
        let Node::And(a, b) = c.node(id) else { continue };
        let lit = match chosen.get(&id) {
            None => rb.and(translate(&map, a), translate(&map, b)),
            Some(Site::Distribute { m, c: other }) => {
                let Node::And(ma, mb) = c.node(*m) else { unreachable!() };
                let o = translate(&map, *other);
                let l = rb.and(o, !translate(&map, ma));
                let r = rb.and(o, !translate(&map, mb));
                !rb.and(!l, !r)
            }
            Some(Site::Factor { c: common, x, y }) => {
                let k = translate(&map, *common);
                let s = rb.and(!translate(&map, *x), !translate(&map, *y));
                !rb.and(k, !s)
            }
            Some(Site::Buffer) => {
                let (a, b) = (translate(&map, a), translate(&map, b));
                let ia = rb.and(a, a);
                let ib = rb.and(b, b);
                rb.and(ia, ib)
            }
        };
        map[id] = Some(lit);
    }
    let outs = c.outputs().iter().map(|&l| translate(&map, l)).collect();
    rb.finish(c, outs)
}

/// A cone of 2–3 AND nodes rooted at `root` with at most three leaves.
struct Cone {
    root: NodeId,
    members: Vec<NodeId>,
    leaves: Vec<NodeId>,
}

fn cone_leaves(c: &Circuit, members: &[NodeId]) -> Vec<NodeId> {
    let mut leaves = Vec::new();
    for &m in members {
        for l in c.node(m).fanins() {
            if !members.contains(&l.node()) && !leaves.contains(&l.node()) {
                leaves.push(l.node());
            }
        }
    }
    leaves
}

fn grow_cone(c: &Circuit, root: NodeId, fanout: &[usize], taken: &[bool], rng: &mut ChaCha8Rng) -> Option<Cone> {
    let mut members = vec![root];
    while members.len() < 3 {
        let mut options: Vec<NodeId> = members
            .iter()
            .flat_map(|&m| c.node(m).fanins())
            .map(|l| l.node())
            .filter(|&u| c.node(u).is_and() && fanout[u] == 1 && !taken[u] && !members.contains(&u))
            .collect();
        options.dedup();
        options.retain(|&u| {
            let mut trial = members.clone();
            trial.push(u);
            cone_leaves(c, &trial).len() <= 3
        });
        let Some(&u) = options.choose(rng) else { break };
        members.push(u);
        if rng.gen_bool(0.5) {
            break;
        }
    }
    let leaves = cone_leaves(c, &members);
    (members.len() >= 2 && leaves.len() <= 3).then_some(Cone { root, members, leaves })
}

/// Truth table of the cone's root over its leaves (leaf `i` is variable `i`).
fn cone_function(c: &Circuit, cone: &Cone) -> u8 {
    const VARS: [u8; 3] = [0xAA, 0xCC, 0xF0];
    fn eval(c: &Circuit, cone: &Cone, id: NodeId) -> u8 {
        if let Some(i) = cone.leaves.iter().position(|&l| l == id) {
            return VARS[i];
        }
        let Node::And(a, b) = c.node(id) else { unreachable!("non-leaf cone node is an AND") };
        let v = |l: Lit| eval(c, cone, l.node()) ^ if l.is_complemented() { 0xFF } else { 0 };
        v(a) & v(b)
    }
    eval(c, cone, cone.root)
}

/// Replaces random 2–3 node cones with a randomly chosen equivalent
/// implementation from the precomputed library of 3-input functions.
pub fn pass_local_rewrite(c: &Circuit, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fanout = c.fanout_counts();
    let mut roots: Vec<NodeId> = (0..c.num_nodes()).filter(|&id| c.node(id).is_and()).collect();
    roots.shuffle(&mut rng);
    let budget = (c.num_ands() / 6).max(1);

    let mut taken = vec![false; c.num_nodes()];
    let mut cones: HashMap<NodeId, (Vec<NodeId>, &'static LibImpl)> = HashMap::new();
    for root in roots {
        if cones.len() >= budget {
            break;
        }
        if taken[root] {
            continue;
        }
        let Some(cone) = grow_cone(c, root, &fanout, &taken, &mut rng) else { continue };
        let func = cone_function(c, &cone);
        let impls = library_implementations(func);
        let Some(imp) = impls.choose(&mut rng) else { continue };
        for &m in &cone.members {
            taken[m] = true;
        }
        cones.insert(root, (cone.leaves, imp));
    }

    let (mut rb, mut map) = Rebuild::start(c, false, false);
    for id in c.eval_order() {
        let Node::And(a, b) = c.node(id) else { continue };
        if let Some((leaves, imp)) = cones.get(&id) {
            let vars: Vec<Lit> = (0..3)
                .map(|i| {
                    let leaf = leaves.get(i).copied().unwrap_or(leaves[0]);
                    translate(&map, Lit::new(leaf, false))
                })
                .collect();
            map[id] = Some(imp.instantiate(&vars, |x, y| rb.and(x, y)));
        } else if taken[id] {
            // interior of a replaced cone; only its root is consumed
        } else {
            map[id] = Some(rb.and(translate(&map, a), translate(&map, b)));
        }
    }
    let outs = c.outputs().iter().map(|&l| translate(&map, l)).collect();
    rb.finish(c, outs)
}

pub fn run_pass(c: &Circuit, pass: PassKind, seed: u64) -> Circuit {
    match pass {
        PassKind::Strash => pass_strash(c),
        PassKind::ConstProp => pass_const_prop(c),
        PassKind::DoubleNegElim => pass_double_neg(c),
        PassKind::Balance => pass_balance(c),
        PassKind::DeMorganRewrite => pass_demorgan(c, seed),
        PassKind::LocalRewrite => pass_local_rewrite(c, seed),
    }
}

/// Draws a recipe: length uniform in `[min_len, max_len]`, passes uniform.
pub fn draw_recipe(seed: u64, min_len: usize, max_len: usize) -> OptRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = rng.gen_range(min_len..=max_len);
    let passes = (0..length).map(|_| *PassKind::ALL.choose(&mut rng).unwrap()).collect();
    OptRecipe { seed, length, passes }
}

pub fn apply_recipe(c: &Circuit, recipe: &OptRecipe) -> Circuit {
    recipe
        .passes
        .iter()
        .enumerate()
        .fold(c.clone(), |acc, (i, &p)| run_pass(&acc, p, mix_seed(recipe.seed, i as u64)))
}

/// Applies a seed-derived recipe, retrying with fresh recipes (up to 8) while
/// the result is structurally identical to `c`.
pub fn random_optimize(
    c: &Circuit,
    seed: u64,
    min_len: usize,
    max_len: usize,
) -> Result<(Circuit, OptRecipe), OptError> {
    if min_len == 0 || min_len > max_len {
        return Err(OptError::BadLength(min_len, max_len));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let recipe = draw_recipe(mix_seed(seed, attempt as u64), min_len, max_len);
        let out = apply_recipe(c, &recipe);
        if !out.structurally_equal(c) {
            return Ok((out, recipe));
        }
    }
    Err(OptError::NoStructuralChange(MAX_ATTEMPTS))
}
