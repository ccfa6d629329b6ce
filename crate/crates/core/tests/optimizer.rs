mod common;

use boolclass::aig::{depth, random_circuit, simulate_random, Circuit, Lit, Node, DEFAULT_SIGNATURE_WORDS};
use boolclass::builtins::{full_adder_1, full_adder_2};
use boolclass::optimizer::{
    apply_recipe, draw_recipe, pass_balance, pass_const_prop, pass_demorgan, pass_local_rewrite, pass_strash,
    random_optimize, run_pass, PassKind,
};
use common::{arb_circuit, table};
use proptest::prelude::*;

fn lit(n: usize, c: bool) -> Lit {
    Lit::new(n, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn recipes_preserve_function(c in arb_circuit(8, 60), seed in any::<u64>(), len in 1..=10usize) {
        let recipe = draw_recipe(seed, len, len);
        prop_assert_eq!(recipe.passes.len(), len);
        let out = apply_recipe(&c, &recipe);
        prop_assert!(out.validate().is_empty());
        prop_assert_eq!(table(&out), table(&c));
        prop_assert!(apply_recipe(&c, &recipe).structurally_equal(&out));
    }

    #[test]
    fn each_pass_is_sound(c in arb_circuit(8, 60), seed in any::<u64>()) {
        for pass in PassKind::ALL {
            let out = run_pass(&c, pass, seed);
            prop_assert!(out.validate().is_empty(), "{:?}", pass);
            prop_assert_eq!(table(&out), table(&c), "{:?}", pass);
        }
    }

    #[test]
    fn balance_never_deepens(c in arb_circuit(8, 60)) {
        prop_assert!(depth(&pass_balance(&c)) <= depth(&c));
    }

    #[test]
    fn strash_is_idempotent(c in arb_circuit(8, 60)) {
        let once = pass_strash(&c);
        prop_assert!(once.num_ands() <= c.num_ands());
        prop_assert_eq!(pass_strash(&once).num_ands(), once.num_ands());
    }
}

#[test]
fn strash_merges_a_duplicated_gate() {
    // 1,2 inputs; 3 and 4 both AND(1,2); 5 = AND(3,4)
    let nodes = vec![
        Node::ConstFalse,
        Node::Input,
        Node::Input,
        Node::And(lit(1, false), lit(2, false)),
        Node::And(lit(1, false), lit(2, false)),
        Node::And(lit(3, false), lit(4, true)),
    ];
    let c = Circuit::new("dup", nodes, vec![1, 2], vec![lit(5, false), lit(4, false)]).unwrap();
    let s = pass_strash(&c);
    assert!(s.num_ands() < c.num_ands());
    assert_eq!(table(&s), table(&c));
    assert_eq!(pass_strash(&full_adder_1()).num_ands(), full_adder_1().num_ands());
}

#[test]
fn left_chain_balances_to_depth_two() {
    let nodes = vec![
        Node::ConstFalse,
        Node::Input,
        Node::Input,
        Node::Input,
        Node::Input,
        Node::And(lit(1, false), lit(2, false)),
        Node::And(lit(5, false), lit(3, false)),
        Node::And(lit(6, false), lit(4, false)),
    ];
    let c = Circuit::new("chain", nodes, vec![1, 2, 3, 4], vec![lit(7, false)]).unwrap();
    assert_eq!(depth(&c), 3);
    let b = pass_balance(&c);
    assert_eq!(depth(&b), 2);
    assert_eq!(table(&b), table(&c));
    assert_eq!(depth(&pass_balance(&b)), 2);
}

#[test]
fn constants_propagate() {
    // AND(x, 0) and AND(x, ¬0)
    let nodes = vec![
        Node::ConstFalse,
        Node::Input,
        Node::And(lit(1, false), lit(0, false)),
        Node::And(lit(1, false), lit(0, true)),
    ];
    let c = Circuit::new("k", nodes, vec![1], vec![lit(2, false), lit(3, false)]).unwrap();
    let p = pass_const_prop(&c);
    assert_eq!(p.num_ands(), 0);
    assert_eq!(table(&p), vec![vec![false, false], vec![false, true]]);
}

#[test]
fn demorgan_and_rewrite_relate_fig2_adders() {
    let (a, b) = (full_adder_1(), full_adder_2());
    for seed in 0..20 {
        assert_eq!(table(&pass_demorgan(&b, seed)), table(&a));
        assert_eq!(table(&pass_local_rewrite(&b, seed)), table(&a));
    }
}

#[test]
fn local_rewrite_500_applications() {
    for seed in 0..500u64 {
        let c = random_circuit(8, 2, 20 + (seed % 40) as usize, seed);
        let out = pass_local_rewrite(&c, seed);
        assert_eq!(table(&out), table(&c), "seed {seed}");
        assert!(pass_local_rewrite(&c, seed).structurally_equal(&out));
    }
}

#[test]
fn random_optimize_full_adder() {
    let fa = full_adder_1();
    let mut outs: Vec<Circuit> = Vec::new();
    for seed in 0..30 {
        let (out, recipe) = random_optimize(&fa, seed, 2, 10).unwrap();
        assert!(!out.structurally_equal(&fa));
        assert!((2..=10).contains(&recipe.passes.len()));
        assert_eq!(boolclass::aig::simulate_exhaustive(&out).unwrap().to_hex_all(), ["96", "e8"]);
        assert_eq!(random_optimize(&fa, seed, 2, 10).unwrap().0, out);
        outs.push(out);
    }
    let sig = simulate_random(&fa, 3, DEFAULT_SIGNATURE_WORDS);
    assert!(outs.iter().all(|c| simulate_random(c, 3, DEFAULT_SIGNATURE_WORDS) == sig));
}
