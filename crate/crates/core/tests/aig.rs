mod common;

use boolclass::aig::{
    depth, levels, parse_aag, random_circuit, simulate_exhaustive, simulate_random, topo_order, write_aag, AigError,
    Circuit, CircuitBuilder, TopoMethod, DEFAULT_SIGNATURE_WORDS,
};
use boolclass::builtins::{full_adder_1, full_adder_2};
use boolclass::transform::{apply, MatchingTransform};
use common::{arb_circuit, full_adder, hex, table};
use proptest::prelude::*;

fn assert_matches_reference(c: &Circuit) {
    let tt = simulate_exhaustive(c).unwrap();
    for (j, col) in table(c).iter().enumerate() {
        for (k, &bit) in col.iter().enumerate() {
            assert_eq!(tt.bit(j, k), bit, "output {j}, assignment {k}");
        }
        assert_eq!(tt.to_hex(j), hex(col));
    }
}

#[test]
fn full_adder_tables_match_formulas() {
    for c in [full_adder_1(), full_adder_2()] {
        let sum: Vec<bool> = (0..8).map(|k| full_adder(k & 1 == 1, k & 2 != 0, k & 4 != 0).0).collect();
        let cout: Vec<bool> = (0..8).map(|k| full_adder(k & 1 == 1, k & 2 != 0, k & 4 != 0).1).collect();
        let tt = simulate_exhaustive(&c).unwrap();
        assert_eq!(tt.to_hex(0), hex(&sum));
        assert_eq!(tt.to_hex(1), hex(&cout));
        assert_eq!(tt.to_hex_all(), ["96", "e8"]);
        assert_matches_reference(&c);
    }
}

/// Fig. 6 writes tables with x1 as the most significant variable, i.e. the
/// inputs declared as (x3, x2, x1).
#[test]
fn fig6_tables_with_x1_most_significant() {
    let mut b = CircuitBuilder::new("f");
    let (x3, x2, x1) = (b.input("x3"), b.input("x2"), b.input("x1"));
    let t = b.and(x1, x2);
    let f = b.or(t, x3);
    b.output(f, "f");
    let f = b.finish().unwrap();

    let mut b = CircuitBuilder::new("g");
    let (x3, x2, x1) = (b.input("x3"), b.input("x2"), b.input("x1"));
    let t = b.and(x2, !x3);
    let g = b.or(!x1, t);
    b.output(g, "g");
    let g = b.finish().unwrap();

    // slot 0 = x3, slot 2 = x1
    let f_ref: Vec<bool> = (0..8).map(|k| (k & 4 != 0 && k & 2 != 0) || k & 1 != 0).collect();
    let g_ref: Vec<bool> = (0..8).map(|k| k & 4 == 0 || (k & 2 != 0 && k & 1 == 0)).collect();
    assert_eq!(hex(&f_ref), "ea");
    assert_eq!(hex(&g_ref), "4f");
    assert_eq!(simulate_exhaustive(&f).unwrap().to_hex(0), "ea");
    assert_eq!(simulate_exhaustive(&g).unwrap().to_hex(0), "4f");
    assert_matches_reference(&f);
    assert_matches_reference(&g);
}

#[test]
fn reference_interpreter_agrees_on_200_circuits() {
    for seed in 0..200u64 {
        let n = 1 + seed as usize % 8;
        let c = random_circuit(n, 1 + seed as usize % 3, 5 + seed as usize % 30, seed);
        assert_matches_reference(&c);
    }
}

#[test]
fn parse_examples() {
    let c = parse_aag("aag 1 1 0 1 0\n2\n2\n").unwrap();
    assert_eq!((c.num_inputs(), c.num_outputs(), c.num_ands()), (1, 1, 0));
    assert_eq!(simulate_exhaustive(&c).unwrap().to_hex(0), "2");
    assert_eq!(write_aag(&c), "aag 1 1 0 1 0\n2\n2\n");

    let err = parse_aag("aag 5 2 0 1 3\n2\n4\n10\n6 2 4\n8 3 5\n").unwrap_err();
    assert!(matches!(err, AigError::MalformedHeader(_)), "{err:?}");

    let fa = full_adder_1();
    let back = parse_aag(&write_aag(&fa)).unwrap();
    assert!(back.structurally_equal(&fa));
    assert_eq!((back.num_inputs(), back.num_outputs(), back.num_ands()), (3, 2, 8));
}

#[test]
fn hundred_random_eight_input_round_trips() {
    for seed in 0..100 {
        let c = random_circuit(8, 3, 40, seed);
        let back = parse_aag(&write_aag(&c)).unwrap();
        assert!(back.structurally_equal(&c), "seed {seed}");
    }
}

#[test]
fn signatures() {
    let (a, b) = (full_adder_1(), full_adder_2());
    assert_eq!(simulate_random(&a, 11, DEFAULT_SIGNATURE_WORDS), simulate_random(&b, 11, DEFAULT_SIGNATURE_WORDS));

    let neg = apply(&a, &MatchingTransform::from_masks(vec![0, 1, 2], 0, vec![0, 1], 0b01)).unwrap();
    let (sa, sn) = (simulate_random(&a, 11, 64), simulate_random(&neg, 11, 64));
    assert!(sa.words[0].iter().zip(&sn.words[0]).all(|(x, y)| x == &!y));
    assert_eq!(sa.words[1], sn.words[1]);
}

#[test]
fn fig2_bfs_prefix_follows_declaration_order() {
    let fa = full_adder_1();
    let order = topo_order(&fa, TopoMethod::Bfs);
    let names: Vec<String> = order[..3].iter().map(|&id| {
        let slot = fa.inputs().iter().position(|&x| x == id).unwrap();
        fa.input_label(slot)
    }).collect();
    assert_eq!(names, ["A", "B", "C_in"]);
}

proptest! {
    #[test]
    fn aag_round_trip(c in arb_circuit(8, 40)) {
        let back = parse_aag(&write_aag(&c)).unwrap();
        prop_assert!(back.structurally_equal(&c));
        prop_assert_eq!(simulate_exhaustive(&back).unwrap(), simulate_exhaustive(&c).unwrap());
    }

    #[test]
    fn exhaustive_matches_reference(c in arb_circuit(6, 25)) {
        let tt = simulate_exhaustive(&c).unwrap();
        for (j, col) in table(&c).iter().enumerate() {
            prop_assert_eq!(tt.to_hex(j), hex(col));
        }
    }

    #[test]
    fn topo_orders_respect_fanins(c in arb_circuit(8, 40)) {
        for method in [TopoMethod::Bfs, TopoMethod::Dfs] {
            let order = topo_order(&c, method);
            let mut pos = vec![usize::MAX; c.num_nodes()];
            for (i, &id) in order.iter().enumerate() {
                prop_assert_eq!(pos[id], usize::MAX, "node listed twice");
                pos[id] = i;
            }
            prop_assert_eq!(order.len(), c.num_nodes());
            for (id, node) in c.nodes().iter().enumerate() {
                for l in node.fanins() {
                    prop_assert!(pos[l.node()] < pos[id]);
                }
            }
        }
    }

    #[test]
    fn levels_are_longest_paths(c in arb_circuit(8, 40)) {
        let lvl = levels(&c);
        for (id, node) in c.nodes().iter().enumerate() {
            let expect = node.fanins().map(|l| lvl[l.node()] + 1).max().unwrap_or(0);
            prop_assert_eq!(lvl[id], expect);
        }
        prop_assert!(depth(&c) <= c.num_ands());
    }

    #[test]
    fn signature_agrees_with_exhaustive_table(c in arb_circuit(6, 25), seed in any::<u64>()) {
        // Every random pattern must produce the value the full table gives.
        let sig = simulate_random(&c, seed, 4);
        let stim = boolclass::aig::stimulus(seed, c.num_inputs(), 4);
        let cols = table(&c);
        for w in 0..4 {
            for bit in 0..64 {
                let k = (0..c.num_inputs()).fold(0usize, |acc, i| acc | ((stim[i][w] >> bit & 1) as usize) << i);
                for j in 0..c.num_outputs() {
                    prop_assert_eq!(sig.words[j][w] >> bit & 1 == 1, cols[j][k]);
                }
            }
        }
    }
}
