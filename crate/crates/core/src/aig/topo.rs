use std::collections::VecDeque;

use super::{Circuit, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopoMethod {
    Bfs,
    Dfs,
}

/// Topological order of all nodes. Sources (the constant, then inputs in
/// declaration order) seed the traversal; a node is emitted once all of its
/// fan-in edges have been emitted. BFS uses a FIFO frontier, DFS a LIFO one.
/// Ties are broken by ascending node id.
pub fn topo_order(c: &Circuit, method: TopoMethod) -> Vec<NodeId> {
    let n = c.num_nodes();
    let mut fanouts: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut pending = vec![0usize; n];
    for (id, node) in c.nodes().iter().enumerate() {
        for l in node.fanins() {
            fanouts[l.node()].push(id);
            pending[id] += 1;
        }
    }
    // fan-out lists are built in ascending id order already

    let mut seeds: Vec<NodeId> = c.const_node().into_iter().collect();
    seeds.extend_from_slice(c.inputs());

    let mut order = Vec::with_capacity(n);
    match method {
        TopoMethod::Bfs => {
            let mut queue: VecDeque<NodeId> = seeds.into_iter().collect();
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &v in &fanouts[u] {
                    pending[v] -= 1;
                    if pending[v] == 0 {
                        queue.push_back(v);
                    }
                }
            }
        }
        TopoMethod::Dfs => {
            let mut stack: Vec<NodeId> = seeds.into_iter().rev().collect();
            while let Some(u) = stack.pop() {
                order.push(u);
                let mut ready = Vec::new();
                for &v in &fanouts[u] {
                    pending[v] -= 1;
                    if pending[v] == 0 {
                        ready.push(v);
                    }
                }
                stack.extend(ready.into_iter().rev());
            }
        }
    }
    order
}

/// Logic level of every node: sources are 0, an AND is one above its deepest fan-in.
pub fn levels(c: &Circuit) -> Vec<usize> {
    let mut lvl = vec![0usize; c.num_nodes()];
    for id in c.eval_order() {
        lvl[id] = c
            .node(id)
            .fanins()
            .map(|l| lvl[l.node()] + 1)
            .max()
            .unwrap_or(0);
    }
    lvl
}

/// Largest level among output drivers.
pub fn depth(c: &Circuit) -> usize {
    let lvl = levels(c);
    c.outputs().iter().map(|l| lvl[l.node()]).max().unwrap_or(0)
}
