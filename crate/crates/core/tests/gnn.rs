use boolclass::aig::random_circuit;
use boolclass::dataset::{GroupKind, Split};
use boolclass::encode::{encode, Direction, EncodedGraph, FeatureSet, InverterMode, NormAdj};
use boolclass::gnn::{
    cross_entropy, evaluate, pool_keep, softmax, train, Checkpoint, Corpus, GnnError, Model, ModelConfig, Sample,
    TrainConfig,
};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64, rng: &mut ChaCha8Rng) -> EncodedGraph {
    let n = rng.gen_range(2..=5);
    let c = random_circuit(n, rng.gen_range(1..=2), rng.gen_range(1..=8), seed);
    let dir = [Direction::Digraph, Direction::Reverse, Direction::Bidigraph][rng.gen_range(0..3)];
    let inv = [InverterMode::With, InverterMode::Without][rng.gen_range(0..2)];
    encode(&c, dir, inv)
}

fn matvec(x: &[f64], w: &[f64], b: &[f64], cols: usize) -> Vec<f64> {
    (0..cols).map(|j| b[j] + x.iter().enumerate().map(|(i, xi)| xi * w[i * cols + j]).sum::<f64>()).collect()
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

/// Straightforward per-node forward pass with a dense adjacency built from
/// the edge list.
fn reference_logits(m: &Model, g: &EncodedGraph) -> Vec<f64> {
    let cfg = *m.config();
    let (f, n) = (cfg.feature_dim, g.num_nodes);
    let mut deg = vec![0.0; n];
    for &(_, v) in &g.edges {
        deg[v] += 1.0;
    }
    let mut adj = vec![vec![0.0; n]; n];
    for v in 0..n {
        adj[v][v] += 1.0 / (deg[v] + 1.0);
    }
    for &(u, v) in &g.edges {
        adj[v][u] += 1.0 / ((deg[u] + 1.0f64) * (deg[v] + 1.0)).sqrt();
    }
    let conv = |x: &[Vec<f64>], w: &str, b: &str, cols: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|v| {
                let width = x[0].len();
                let agg: Vec<f64> = (0..width).map(|k| (0..n).map(|u| adj[v][u] * x[u][k]).sum()).collect();
                relu(matvec(&agg, m.tensor(w).unwrap(), m.tensor(b).unwrap(), cols))
            })
            .collect()
    };
    let x: Vec<Vec<f64>> = (0..n).map(|v| g.features[v * f..(v + 1) * f].to_vec()).collect();
    let h1 = conv(&x, "gcn1.weight", "gcn1.bias", cfg.hidden);
    let h2 = conv(&h1, "gcn2.weight", "gcn2.bias", cfg.hidden);

    let (scores, kept): (Vec<f64>, Vec<usize>) = match cfg.pool_ratio {
        None => (vec![1.0; n], (0..n).collect()),
        Some(r) => {
            let p = m.tensor("pool.score").unwrap();
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s: Vec<f64> =
                h2.iter().map(|h| 1.0 / (1.0 + (-h.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / norm).exp())).collect();
            let k = ((r * n as f64).ceil() as usize).clamp(1, n);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
            idx.truncate(k);
            (s, idx)
        }
    };
    let readout: Vec<f64> = (0..cfg.hidden)
        .map(|j| kept.iter().map(|&i| scores[i] * h2[i][j]).sum::<f64>() / kept.len() as f64)
        .collect();
    let h3 = relu(matvec(&readout, m.tensor("mlp1.weight").unwrap(), m.tensor("mlp1.bias").unwrap(), cfg.hidden));
    matvec(&h3, m.tensor("mlp2.weight").unwrap(), m.tensor("mlp2.bias").unwrap(), cfg.num_classes)
}

fn model(g: &EncodedGraph, hidden: usize, k: usize, pool: Option<f64>, seed: u64) -> Model {
    Model::new(ModelConfig { feature_dim: g.feature_dim(), hidden, num_classes: k, pool_ratio: pool }, seed).unwrap()
}

/// Largest relative error between the analytic gradient and central
/// differences, skipping coordinates whose stencil crosses a ReLU or Top-K
/// boundary. Returns (max error, checked, skipped).
fn gradient_check(m: &Model, batch: &[(&EncodedGraph, usize)], wd: f64, coords: &[usize]) -> (f64, usize, usize) {
    let eps = 1e-4;
    let (_, grad) = m.loss_and_grad(batch, wd).unwrap();
    let pattern = |mm: &Model| batch.iter().map(|(g, _)| mm.activation_pattern(g).unwrap()).collect::<Vec<_>>();
    let base = pattern(m);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for &i in coords {
        let mut plus = m.clone();
        plus.params_mut()[i] += eps;
        let mut minus = m.clone();
        minus.params_mut()[i] -= eps;
        if pattern(&plus) != base || pattern(&minus) != base {
            skipped += 1;
            continue;
        }
        let num = (plus.loss(batch, wd).unwrap() - minus.loss(batch, wd).unwrap()) / (2.0 * eps);
        worst = worst.max((grad[i] - num).abs() / grad[i].abs().max(num.abs()).max(1e-6));
        checked += 1;
    }
    (worst, checked, skipped)
}

#[test]
fn gradients_match_finite_differences_h16() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for case in 0..50u64 {
        let (g0, g1) = (graph(case, &mut rng), graph(case + 1000, &mut rng));
        let pool = [Some(0.5), Some(0.3), None][case as usize % 3];
        let m = model(&g0, 16, 4, pool, case);
        let batch = [(&g0, rng.gen_range(0..4)), (&g1, rng.gen_range(0..4))];
        let coords: Vec<usize> = (0..m.num_params()).collect();
        let (w, c, s) = gradient_check(&m, &batch, 1e-3, &coords);
        worst = worst.max(w);
        checked += c;
        skipped += s;
    }
    assert!(worst < 1e-4, "max relative error {worst}");
    assert!(skipped * 20 < checked, "{skipped} skipped of {}", checked + skipped);
}

#[test]
fn gradients_match_finite_differences_h64() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let g = graph(7, &mut rng);
    let m = model(&g, 64, 3, Some(0.5), 7);
    let coords: Vec<usize> = (0..m.num_params()).step_by(3).collect();
    let (worst, checked, skipped) = gradient_check(&m, &[(&g, 2)], 1e-5, &coords);
    assert!(worst < 1e-4, "max relative error {worst}");
    assert!(skipped * 20 < checked);
}

#[test]
fn single_node_layer_is_dense() {
    let g = EncodedGraph {
        num_nodes: 1,
        edges: vec![],
        features: vec![0.3, -0.1, 0.7, 0.0, 1.0, 0.2, 0.5, 0.0, 0.9, 1.0],
        norm_adj: NormAdj::new(1, &[]),
        direction: Direction::Digraph,
        inverters: InverterMode::With,
        feature_set: FeatureSet::Basic,
        label: None,
    };
    let m = model(&g, 5, 3, None, 2);
    let fw = m.forward(&g).unwrap();
    let h1 = relu(matvec(&g.features, m.tensor("gcn1.weight").unwrap(), m.tensor("gcn1.bias").unwrap(), 5));
    let h2 = relu(matvec(&h1, m.tensor("gcn2.weight").unwrap(), m.tensor("gcn2.bias").unwrap(), 5));
    for (a, b) in fw.node_embeddings.iter().zip(&h2) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(fw.readout.len(), 5);
}

#[test]
fn zero_model_logits_are_the_output_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (a, b) = (graph(1, &mut rng), graph(2, &mut rng));
    let mut m = Model::zeros(ModelConfig { feature_dim: 10, hidden: 4, num_classes: 3, pool_ratio: Some(0.5) }).unwrap();
    m.tensor_mut("mlp2.bias").unwrap().copy_from_slice(&[0.5, -1.0, 2.0]);
    assert_eq!(m.logits(&a).unwrap(), [0.5, -1.0, 2.0]);
    assert_eq!(m.logits(&b).unwrap(), [0.5, -1.0, 2.0]);

    // constant prediction on a balanced 4-class set scores 1/4
    let m4 = Model::zeros(ModelConfig { feature_dim: 10, hidden: 4, num_classes: 4, pool_ratio: None }).unwrap();
    let gs: Vec<EncodedGraph> = (0..8).map(|s| graph(s, &mut rng)).collect();
    let records: Vec<(&EncodedGraph, usize)> = gs.iter().enumerate().map(|(i, g)| (g, i % 4)).collect();
    assert_eq!(evaluate(&m4, &records).unwrap().accuracy, 0.25);
    assert!(matches!(evaluate(&m4, &[]), Err(GnnError::EmptyEval)));
}

#[test]
fn uniform_two_class_loss_is_ln2() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = graph(3, &mut rng);
    let m = Model::zeros(ModelConfig { feature_dim: 10, hidden: 4, num_classes: 2, pool_ratio: Some(0.5) }).unwrap();
    assert!((m.loss(&[(&g, 1)], 0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    let m = model(&g, 8, 2, Some(0.5), 4);
    let single = m.loss(&[(&g, 1)], 1e-3).unwrap();
    let double = m.loss(&[(&g, 1), (&g, 1)], 1e-3).unwrap();
    assert!((single - double).abs() < 1e-12);
}

fn toy_corpus() -> Corpus {
    // class 0: tiny circuits, class 1: large ones
    let mut samples = Vec::new();
    for i in 0..8u64 {
        let (c, label) = if i % 2 == 0 { (random_circuit(2, 1, 1, i), 0) } else { (random_circuit(6, 3, 30, i), 1) };
        samples.push(Sample {
            record: i as usize,
            label,
            kind: GroupKind::LE,
            split: Split::Train,
            graph: encode(&c, Direction::Bidigraph, InverterMode::With),
        });
    }
    Corpus {
        samples,
        num_classes: 2,
        direction: Direction::Bidigraph,
        inverters: InverterMode::With,
        feature_set: FeatureSet::default(),
    }
}

#[test]
fn toy_training_converges_and_repeats() {
    let cfg = TrainConfig { weight_decay: 0.0, batch_size: 8, ..TrainConfig::default() };
    let (m, h) = train(&toy_corpus(), &cfg, 9).unwrap();
    let rises = h.epochs[..10].windows(2).filter(|w| w[1].loss > w[0].loss).count();
    assert!(rises <= 2, "loss rose {rises} times in the first 10 epochs");
    assert_eq!(h.epochs.len(), 100);
    assert_eq!(h.epochs.last().unwrap().train_acc, 1.0);
    let corpus = toy_corpus();
    let all: Vec<usize> = (0..corpus.samples.len()).collect();
    assert_eq!(evaluate(&m, &corpus.pairs(&all)).unwrap().accuracy, 1.0);

    let (m2, h2) = train(&toy_corpus(), &cfg, 9).unwrap();
    assert_eq!(m2, m);
    assert_eq!(h2.to_csv(), h.to_csv());

    let frozen = TrainConfig { lr: 0.0, epochs: 4, ..cfg };
    let (_, hf) = train(&toy_corpus(), &frozen, 9).unwrap();
    assert!(hf.epochs.windows(2).all(|w| w[0].loss == w[1].loss));
}

#[test]
fn checkpoint_rejects_other_feature_width() {
    let (m, _) = train(&toy_corpus(), &TrainConfig { epochs: 2, ..TrainConfig::default() }, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    Checkpoint::new(&m, &TrainConfig::default(), 1, Direction::Bidigraph, InverterMode::With, FeatureSet::Extended)
        .save(&path)
        .unwrap();
    let back = Checkpoint::load(&path).unwrap().to_model().unwrap();
    assert_eq!(back, m);
    let mut g = toy_corpus().samples[0].graph.clone();
    g.features.truncate(g.num_nodes * 9);
    assert!(matches!(back.logits(&g), Err(GnnError::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_reference(seed in any::<u64>(), pool in prop::option::of(0.1..1.0f64), hidden in 1..12usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph(seed, &mut rng);
        let m = model(&g, hidden, 3, pool, seed);
        let fw = m.forward(&g).unwrap();
        let reference = reference_logits(&m, &g);
        for (a, b) in fw.logits.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        prop_assert_eq!(fw.kept.len(), pool.map_or(g.num_nodes, |r| pool_keep(r, g.num_nodes)));
        prop_assert!(fw.scores.iter().all(|&s| s > 0.0 && s <= 1.0));
    }

    #[test]
    fn logits_ignore_node_order(seed in any::<u64>(), pool in prop::option::of(0.2..0.9f64)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph(seed, &mut rng);
        let m = model(&g, 16, 4, pool, seed);
        let base = m.logits(&g).unwrap();
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..g.num_nodes).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let l = m.logits(&g.relabeled(&perm)).unwrap();
            for (a, b) in base.iter().zip(&l) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in vec(-50.0..50.0f64, 1..8), label in 0..8usize) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let label = label % logits.len();
        prop_assert!((cross_entropy(&logits, label) + p[label].ln()).abs() < 1e-9 || p[label] < 1e-300);
    }

    #[test]
    fn pool_keep_is_ceiling(ratio in 0.01..1.0f64, n in 1..500usize) {
        let k = pool_keep(ratio, n);
        prop_assert!(k >= 1 && k <= n);
        prop_assert!(k as f64 >= ratio * n as f64 - 1e-9);
        prop_assert!(k == 1 || ((k - 1) as f64) < ratio * n as f64);
    }
}
