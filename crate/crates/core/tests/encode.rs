mod common;

use boolclass::aig::{Circuit, CircuitBuilder, Node};
use boolclass::builtins::full_adder_1;
use boolclass::encode::{
    drop_two_degree, encode, encode_with, materialize_inverters, Direction, EncodedGraph, ExplicitKind, FeatureSet,
    InverterMode, NormAdj, FEATURE_DIM,
};
use boolclass::transform::{apply, random_transform, MatchingTransform, TransformKind};
use common::arb_circuit;
use proptest::collection::vec;
use proptest::prelude::*;

fn complemented_edges(c: &Circuit) -> usize {
    let ands: usize = c
        .nodes()
        .iter()
        .map(|n| match n {
            Node::And(a, b) => a.is_complemented() as usize + b.is_complemented() as usize,
            _ => 0,
        })
        .sum();
    ands + c.outputs().iter().filter(|l| l.is_complemented()).count()
}

fn sorted_edges(g: &EncodedGraph) -> Vec<(usize, usize)> {
    let mut e = g.edges.clone();
    e.sort_unstable();
    e
}

/// Dense `Â` straight from the degree formula.
fn dense_adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut deg = vec![0.0; n];
    for &(_, v) in edges {
        deg[v] += 1.0;
    }
    let mut a = vec![vec![0.0; n]; n];
    for v in 0..n {
        a[v][v] += 1.0 / (deg[v] + 1.0);
    }
    for &(u, v) in edges {
        a[v][u] += 1.0 / ((deg[u] + 1.0) * (deg[v] + 1.0) as f64).sqrt();
    }
    a
}

#[test]
fn single_and_counts() {
    let mut b = CircuitBuilder::new("and");
    let (x, y) = (b.input("a"), b.input("b"));
    let g = b.and(x, y);
    b.output(g, "y");
    let c = b.finish().unwrap();
    let d = encode(&c, Direction::Digraph, InverterMode::With);
    assert_eq!((d.num_nodes, d.edges.len()), (4, 3));
    assert_eq!(encode(&c, Direction::Bidigraph, InverterMode::With).edges.len(), 6);
    assert_eq!(materialize_inverters(&c).count(ExplicitKind::Inverter), 0);

    // AND(a, ¬b): one inverter
    let mut b = CircuitBuilder::new("andn");
    let (x, y) = (b.input("a"), b.input("b"));
    let g = b.and(x, !y);
    b.output(g, "y");
    let c = b.finish().unwrap();
    assert_eq!(materialize_inverters(&c).count(ExplicitKind::Inverter), 1);
    assert_eq!(encode(&c, Direction::Digraph, InverterMode::With).num_nodes, 5);
}

#[test]
fn full_adder_node_counts() {
    let fa = full_adder_1();
    let inv = complemented_edges(&fa);
    let g = encode(&fa, Direction::Bidigraph, InverterMode::With);
    assert_eq!(g.num_nodes, 3 + 8 + inv + 2);
    assert_eq!(encode(&fa, Direction::Bidigraph, InverterMode::Without).num_nodes, 3 + 8 + 2);

    let e = apply(&fa, &MatchingTransform::from_masks(vec![0, 1, 2], 0b010, vec![0, 1], 0b01)).unwrap();
    let ge = materialize_inverters(&e);
    assert_eq!(ge.count(ExplicitKind::Inverter), materialize_inverters(&fa).count(ExplicitKind::Inverter) + 2);
    // dropping the inverters of (e) gives the graph of (a)
    assert_eq!(drop_two_degree(&ge), drop_two_degree(&materialize_inverters(&fa)));
}

#[test]
fn two_node_path_weights() {
    let a = NormAdj::new(2, &[(0, 1)]);
    let rows: Vec<Vec<(usize, f64)>> = (0..2).map(|v| a.row(v).collect()).collect();
    assert_eq!(rows[0], [(0, 1.0)]);
    assert_eq!(rows[1][0], (1, 0.5));
    assert_eq!(rows[1][1].0, 0);
    assert!((rows[1][1].1 - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    let b = NormAdj::new(2, &[(0, 1), (1, 0)]);
    let w: Vec<f64> = (0..2).flat_map(|v| b.row(v).map(|x| x.1).collect::<Vec<_>>()).collect();
    assert_eq!(w, [0.5, 0.5, 0.5, 0.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn negation_is_invisible_without_inverters(c in arb_circuit(6, 30), seed in any::<u64>()) {
        let t = random_transform(c.num_inputs(), c.num_outputs(), TransformKind::Neg, seed);
        let d = apply(&c, &t).unwrap();
        for dir in [Direction::Digraph, Direction::Reverse, Direction::Bidigraph] {
            let (a, b) = (encode(&c, dir, InverterMode::Without), encode(&d, dir, InverterMode::Without));
            prop_assert_eq!(a.num_nodes, b.num_nodes);
            prop_assert_eq!(sorted_edges(&a), sorted_edges(&b));
            prop_assert_eq!(&a.features, &b.features);
            let (wa, wb) = (encode(&c, dir, InverterMode::With), encode(&d, dir, InverterMode::With));
            let delta = complemented_edges(&d) as i64 - complemented_edges(&c) as i64;
            prop_assert_eq!(wb.num_nodes as i64 - wa.num_nodes as i64, delta);
        }
    }

    #[test]
    fn direction_edge_counts(c in arb_circuit(6, 30)) {
        for inv in [InverterMode::With, InverterMode::Without] {
            let d = encode(&c, Direction::Digraph, inv);
            let r = encode(&c, Direction::Reverse, inv);
            let b = encode(&c, Direction::Bidigraph, inv);
            prop_assert_eq!(b.edges.len(), 2 * d.edges.len());
            let flipped: Vec<(usize, usize)> = d.edges.iter().map(|&(u, v)| (v, u)).collect();
            let mut flipped_sorted = flipped.clone();
            flipped_sorted.sort_unstable();
            prop_assert_eq!(sorted_edges(&r), flipped_sorted);
            let mut both = d.edges.clone();
            both.extend(flipped);
            both.sort_unstable();
            prop_assert_eq!(sorted_edges(&b), both);
        }
    }

    #[test]
    fn features_are_bounded(c in arb_circuit(6, 30)) {
        for set in [FeatureSet::Basic, FeatureSet::Extended] {
            let g = encode_with(&c, Direction::Bidigraph, InverterMode::With, set);
            prop_assert_eq!(g.feature_dim(), FEATURE_DIM);
            prop_assert_eq!(g.features.len(), g.num_nodes * FEATURE_DIM);
            for v in 0..g.num_nodes {
                let row = g.feature_row(v);
                prop_assert!(row.iter().all(|x| x.is_finite() && *x >= 0.0 && *x <= 1.0));
                prop_assert!(row[..4].iter().sum::<f64>() <= 1.0);
            }
        }
    }

    #[test]
    fn sparse_aggregation_matches_dense(
        (n, edges, x) in (1..=8usize).prop_flat_map(|n| (
            Just(n),
            vec((0..n, 0..n), 0..20).prop_map(|e| e.into_iter().filter(|(u, v)| u != v).collect::<Vec<_>>()),
            vec(-2.0..2.0f64, n * 3),
        ))
    ) {
        let a = NormAdj::new(n, &edges);
        let dense = dense_adj(n, &edges);
        let y = a.aggregate(&x, 3);
        let mut back = vec![0.0; n * 3];
        a.aggregate_transpose_into(&x, 3, &mut back);
        for v in 0..n {
            for k in 0..3 {
                let expect: f64 = (0..n).map(|u| dense[v][u] * x[u * 3 + k]).sum();
                let expect_t: f64 = (0..n).map(|u| dense[u][v] * x[u * 3 + k]).sum();
                prop_assert!((y[v * 3 + k] - expect).abs() < 1e-12);
                prop_assert!((back[v * 3 + k] - expect_t).abs() < 1e-12);
            }
        }
    }
}
