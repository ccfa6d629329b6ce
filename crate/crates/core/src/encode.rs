//! Graph preprocessing for the classifier: explicit-inverter views, 2-degree
//! node dropping, edge direction, node features and normalized adjacency.

use serde::{Deserialize, Serialize};

use crate::aig::{Circuit, Lit, Node};

pub const FEATURE_DIM: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Edges point from fan-in to fan-out.
    Digraph,
    /// Edges point from fan-out to fan-in.
    Reverse,
    /// Both directions.
    Bidigraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverterMode {
    With,
    Without,
}

/// Which ten per-node features to compute (see [`node_features`]).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    /// kind one-hot, in-degree/max, out-degree/max, level/depth, inverter
    /// fan-in and fan-out fractions, constant 1.
    Basic,
    /// As `Basic` but with distance-to-sink/depth in place of in-degree/max
    /// and graph scale `ln(1+N)/8` in place of the constant.
    #[default]
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExplicitKind {
    Const,
    Input,
    And,
    Inverter,
    Output,
}

/// Circuit with inversions as nodes. Edges are stored as per-node fan-in lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitGraph {
    pub kinds: Vec<ExplicitKind>,
    pub fanins: Vec<Vec<usize>>,
}

impl ExplicitGraph {
    pub fn num_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn count(&self, kind: ExplicitKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    pub fn num_edges(&self) -> usize {
        self.fanins.iter().map(Vec::len).sum()
    }

    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_nodes()];
        for f in &self.fanins {
            for &u in f {
                out[u] += 1;
            }
        }
        out
    }

    /// Longest path from a source, in edges.
    pub fn levels(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut fanouts = vec![Vec::new(); n];
        let mut pending: Vec<usize> = self.fanins.iter().map(Vec::len).collect();
        for (v, ins) in self.fanins.iter().enumerate() {
            for &u in ins {
                fanouts[u].push(v);
            }
        }
        let mut lvl = vec![0usize; n];
        let mut ready: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
        while let Some(u) = ready.pop() {
            for &v in &fanouts[u] {
                lvl[v] = lvl[v].max(lvl[u] + 1);
                pending[v] -= 1;
                if pending[v] == 0 {
                    ready.push(v);
                }
            }
        }
        lvl
    }

    /// Longest path to a sink, in edges.
    pub fn reverse_levels(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut pending = self.fanout_counts();
        let mut rlvl = vec![0usize; n];
        let mut ready: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
        while let Some(v) = ready.pop() {
            for &u in &self.fanins[v] {
                rlvl[u] = rlvl[u].max(rlvl[v] + 1);
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.push(u);
                }
            }
        }
        rlvl
    }
}

/// One inverter node per complemented edge (AND fan-ins and PO drivers).
/// Node order: constant, inputs, ANDs, inverters, outputs.
pub fn materialize_inverters(c: &Circuit) -> ExplicitGraph {
    let c = c.normalized();
    let inv_base = c.num_nodes();
    let mut inv_src = Vec::new();
    let mut wire = |l: Lit| {
        if l.is_complemented() {
            inv_src.push(l.node());
            inv_base + inv_src.len() - 1
        } else {
            l.node()
        }
    };
    let mut kinds = Vec::new();
    let mut fanins = Vec::new();
    for node in c.nodes() {
        let (kind, ins) = match *node {
            Node::ConstFalse => (ExplicitKind::Const, Vec::new()),
            Node::Input => (ExplicitKind::Input, Vec::new()),
            Node::And(a, b) => (ExplicitKind::And, vec![wire(a), wire(b)]),
        };
        kinds.push(kind);
        fanins.push(ins);
    }
    let out_src: Vec<usize> = c.outputs().iter().map(|&l| wire(l)).collect();
    for src in inv_src {
        kinds.push(ExplicitKind::Inverter);
        fanins.push(vec![src]);
    }
    for src in out_src {
        kinds.push(ExplicitKind::Output);
        fanins.push(vec![src]);
    }
    ExplicitGraph { kinds, fanins }
}

/// Removes every node with exactly one fan-in and one fan-out, wiring its
/// predecessor straight to its successor. Complement information is lost.
pub fn drop_two_degree(g: &ExplicitGraph) -> ExplicitGraph {
    let fanout = g.fanout_counts();
    let dropped: Vec<bool> = (0..g.num_nodes())
        .map(|v| g.fanins[v].len() == 1 && fanout[v] == 1)
        .collect();
    let mut map = vec![usize::MAX; g.num_nodes()];
    let mut next = 0;
    for v in 0..g.num_nodes() {
        if !dropped[v] {
            map[v] = next;
            next += 1;
        }
    }
    let source = |mut u: usize| {
        while dropped[u] {
            u = g.fanins[u][0];
        }
        map[u]
    };
    let mut kinds = Vec::with_capacity(next);
    let mut fanins = Vec::with_capacity(next);
    for v in (0..g.num_nodes()).filter(|&v| !dropped[v]) {
        kinds.push(g.kinds[v]);
        fanins.push(g.fanins[v].iter().map(|&u| source(u)).collect());
    }
    ExplicitGraph { kinds, fanins }
}

/// Symmetric-normalized adjacency with self-loops in compressed-row form:
/// row `v` lists `(u, c_uv)` for every message `u → v`, self first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormAdj {
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub weight: Vec<f64>,
}

impl NormAdj {
    /// `c_uv = 1/√((d_u+1)(d_v+1))`, `d` the in-degree along `edges`.
    pub fn new(num_nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut deg = vec![0usize; num_nodes];
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            deg[v] += 1;
            incoming[v].push(u);
        }
        let mut row_ptr = Vec::with_capacity(num_nodes + 1);
        let mut col = Vec::with_capacity(num_nodes + edges.len());
        let mut weight = Vec::with_capacity(num_nodes + edges.len());
        row_ptr.push(0);
        let c = |u: usize, v: usize| 1.0 / (((deg[u] + 1) * (deg[v] + 1)) as f64).sqrt();
        for v in 0..num_nodes {
            col.push(v);
            weight.push(c(v, v));
            for &u in &incoming[v] {
                col.push(u);
                weight.push(c(u, v));
            }
            row_ptr.push(col.len());
        }
        NormAdj { row_ptr, col, weight }
    }

    pub fn row(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[v]..self.row_ptr[v + 1];
        self.col[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    /// `out = Â · x` for a row-major matrix with `width` columns.
    pub fn aggregate(&self, x: &[f64], width: usize) -> Vec<f64> {
        let n = self.row_ptr.len() - 1;
        let mut out = vec![0.0; n * width];
        for v in 0..n {
            let dst = &mut out[v * width..(v + 1) * width];
            for (u, c) in self.row(v) {
                for (d, s) in dst.iter_mut().zip(&x[u * width..(u + 1) * width]) {
                    *d += c * s;
                }
            }
        }
        out
    }

    /// `out += Âᵀ · dy`, the adjoint of [`NormAdj::aggregate`].
    pub fn aggregate_transpose_into(&self, dy: &[f64], width: usize, out: &mut [f64]) {
        let n = self.row_ptr.len() - 1;
        for v in 0..n {
            let src = &dy[v * width..(v + 1) * width];
            for (u, c) in self.row(v) {
                for (d, s) in out[u * width..(u + 1) * width].iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedGraph {
    pub num_nodes: usize,
    /// Message-passing edges `(src, dst)` before self-loops.
    pub edges: Vec<(usize, usize)>,
    /// Row-major `num_nodes × FEATURE_DIM`.
    pub features: Vec<f64>,
    pub norm_adj: NormAdj,
    pub direction: Direction,
    pub inverters: InverterMode,
    pub feature_set: FeatureSet,
    pub label: Option<usize>,
}

impl EncodedGraph {
    pub fn feature_dim(&self) -> usize {
        if self.num_nodes == 0 {
            FEATURE_DIM
        } else {
            self.features.len() / self.num_nodes
        }
    }

    pub fn feature_row(&self, v: usize) -> &[f64] {
        let f = self.feature_dim();
        &self.features[v * f..(v + 1) * f]
    }

    /// Same graph with node `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> EncodedGraph {
        let f = self.feature_dim();
        let mut features = vec![0.0; self.features.len()];
        for v in 0..self.num_nodes {
            features[perm[v] * f..(perm[v] + 1) * f].copy_from_slice(self.feature_row(v));
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        EncodedGraph {
            num_nodes: self.num_nodes,
            norm_adj: NormAdj::new(self.num_nodes, &edges),
            edges,
            features,
            direction: self.direction,
            inverters: self.inverters,
            feature_set: self.feature_set,
            label: self.label,
        }
    }
}

/// Per-node features, row-major `N × FEATURE_DIM`: one-hot {PI, AND,
/// Inverter, PO} (the constant node gets zeros), slot 4, out-degree / max,
/// level / depth, fraction of fan-ins from inverters, fraction of fan-outs
/// into inverters, slot 9.
///
/// `Basic` fills slot 4 with in-degree / max and slot 9 with 1. `Extended`
/// uses distance to the farthest sink / depth and `ln(1+N)/8`: in-degree is
/// nearly constant in an AIG, and with a mean readout a constant column
/// leaves repeated structures of different size (rca2 vs rca3) looking alike.
pub fn node_features(g: &ExplicitGraph, set: FeatureSet) -> Vec<f64> {
    let n = g.num_nodes();
    let fanout = g.fanout_counts();
    let mut inv_out = vec![0usize; n];
    for v in 0..n {
        if g.kinds[v] == ExplicitKind::Inverter {
            for &u in &g.fanins[v] {
                inv_out[u] += 1;
            }
        }
    }
    let levels = g.levels();
    let rlevels = g.reverse_levels();
    let scale = ((n + 1) as f64).ln() / 8.0;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let max_in = g.fanins.iter().map(Vec::len).max().unwrap_or(0);
    let max_out = fanout.iter().copied().max().unwrap_or(0);
    let depth = levels.iter().copied().max().unwrap_or(0);
    let mut x = Vec::with_capacity(n * FEATURE_DIM);
    for v in 0..n {
        let onehot = match g.kinds[v] {
            ExplicitKind::Input => [1.0, 0.0, 0.0, 0.0],
            ExplicitKind::And => [0.0, 1.0, 0.0, 0.0],
            ExplicitKind::Inverter => [0.0, 0.0, 1.0, 0.0],
            ExplicitKind::Output => [0.0, 0.0, 0.0, 1.0],
            ExplicitKind::Const => [0.0; 4],
        };
        let inv_in = g.fanins[v].iter().filter(|&&u| g.kinds[u] == ExplicitKind::Inverter).count();
        x.extend_from_slice(&onehot);
        x.push(match set {
            FeatureSet::Basic => ratio(g.fanins[v].len(), max_in),
            FeatureSet::Extended => ratio(rlevels[v], depth),
        });
        x.push(ratio(fanout[v], max_out));
        x.push(ratio(levels[v], depth));
        x.push(ratio(inv_in, g.fanins[v].len()));
        x.push(ratio(inv_out[v], fanout[v]));
        x.push(match set {
            FeatureSet::Basic => 1.0,
            FeatureSet::Extended => scale,
        });
    }
    x
}

pub fn encode_explicit(g: &ExplicitGraph, direction: Direction, inverters: InverterMode, set: FeatureSet) -> EncodedGraph {
    let mut edges = Vec::with_capacity(g.num_edges() * 2);
    for (v, ins) in g.fanins.iter().enumerate() {
        for &u in ins {
            match direction {
                Direction::Digraph => edges.push((u, v)),
                Direction::Reverse => edges.push((v, u)),
                Direction::Bidigraph => {
                    edges.push((u, v));
                    edges.push((v, u));
                }
            }
        }
    }
    EncodedGraph {
        num_nodes: g.num_nodes(),
        norm_adj: NormAdj::new(g.num_nodes(), &edges),
        edges,
        features: node_features(g, set),
        direction,
        inverters,
        feature_set: set,
        label: None,
    }
}

/// [`encode_with`] using the default feature set.
pub fn encode(c: &Circuit, direction: Direction, inverters: InverterMode) -> EncodedGraph {
    encode_with(c, direction, inverters, FeatureSet::default())
}

pub fn encode_with(c: &Circuit, direction: Direction, inverters: InverterMode, set: FeatureSet) -> EncodedGraph {
    let explicit = materialize_inverters(c);
    let g = match inverters {
        InverterMode::With => explicit,
        InverterMode::Without => drop_two_degree(&explicit),
    };
    encode_explicit(&g, direction, inverters, set)
}
