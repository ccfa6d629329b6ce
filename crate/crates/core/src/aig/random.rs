use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, CircuitBuilder, Lit};

/// Random AIG with `num_ands` AND nodes before sweeping. Fan-ins favour recent
/// nodes so depth grows with size; outputs prefer nodes nobody else consumes.
pub fn random_circuit(num_inputs: usize, num_outputs: usize, num_ands: usize, seed: u64) -> Circuit {
    assert!(num_inputs >= 1 && num_outputs >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new(format!("random_{num_inputs}x{num_outputs}x{num_ands}_{seed}"));
    let mut pool: Vec<Lit> = (0..num_inputs).map(|i| b.input(format!("x{i}"))).collect();
    let mut used = vec![false; num_inputs + num_ands];

    for _ in 0..num_ands {
        let pick = |rng: &mut ChaCha8Rng, pool: &[Lit]| -> usize {
            if pool.len() > 4 && rng.gen_bool(0.5) {
                rng.gen_range(pool.len().saturating_sub(6)..pool.len())
            } else {
                rng.gen_range(0..pool.len())
            }
        };
        let i = pick(&mut rng, &pool);
        let mut j = pick(&mut rng, &pool);
        if pool.len() > 1 {
            while j == i {
                j = rng.gen_range(0..pool.len());
            }
        }
        used[i] = true;
        used[j] = true;
        let a = pool[i].xor(rng.gen_bool(0.5));
        let c = pool[j].xor(rng.gen_bool(0.5));
        let g = b.and(a, c);
        pool.push(g);
    }

    let mut candidates: Vec<usize> = (num_inputs..pool.len()).rev().filter(|&k| !used[k]).collect();
    if candidates.is_empty() {
        candidates.push(pool.len() - 1);
    }
    for j in 0..num_outputs {
        let k = if j < candidates.len() {
            candidates[j]
        } else {
            rng.gen_range(0..pool.len())
        };
        let lit = pool[k].xor(rng.gen_bool(0.5));
        b.output(lit, format!("y{j}"));
    }
    b.finish().expect("random circuits are well formed").swept()
}
