//! Worked examples on the small bundled contexts, checked against a
//! brute-force oracle that works on plain boolean rows.

use std::collections::{BTreeSet, HashSet};

use fca2vec::closure2vec::{self, Distance, TargetScale};
use fca2vec::eval::{
    edge_features, intra_cluster_ratio, kmeans, negative_sample_edges, Clustering,
};
use fca2vec::fc2vec::{self, EmbeddingTable, Example};
use fca2vec::lattice::{self, canonical_base, covering_relation, enumerate_concepts, Concept};
use fca2vec::nn::{self, Activation, DenseNet, Layer, Loss};
use fca2vec::rudolph::{self, ClosureNet};
use fca2vec::{fixtures, BitSet, EmptyPolicy, Execution, FormalContext};

/// Incidence rows as bools.
fn table(ctx: &FormalContext) -> Vec<Vec<bool>> {
    (0..ctx.n_objects())
        .map(|g| {
            (0..ctx.n_attributes())
                .map(|m| ctx.incident(g, m))
                .collect()
        })
        .collect()
}

fn oracle_closure(t: &[Vec<bool>], m: usize, b: &BTreeSet<usize>) -> BTreeSet<usize> {
    let rows: Vec<&Vec<bool>> = t.iter().filter(|r| b.iter().all(|&a| r[a])).collect();
    (0..m).filter(|&a| rows.iter().all(|r| r[a])).collect()
}

fn oracle_intents(ctx: &FormalContext) -> BTreeSet<BTreeSet<usize>> {
    let t = table(ctx);
    let m = ctx.n_attributes();
    (0..1u64 << m)
        .map(|mask| {
            let b: BTreeSet<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            oracle_closure(&t, m, &b)
        })
        .collect()
}

fn set(width: usize, items: &[usize]) -> BitSet {
    BitSet::from_indices(width, items.iter().copied())
}

fn as_set(b: &BitSet) -> BTreeSet<usize> {
    b.iter().collect()
}

// Objects a..h are 0..7, attributes "1".."9" are 0..8.

#[test]
fn derivations_on_living_beings() {
    let ctx = fixtures::living_beings();
    let afg = set(8, &[0, 5, 6]);
    assert_eq!(ctx.derive_attrs(&afg).unwrap(), set(9, &[3, 4, 5]));
    assert_eq!(ctx.derive_objs(&set(9, &[3, 4, 5])).unwrap(), afg);
    assert!(ctx.derive_attrs(&BitSet::empty(8)).unwrap().is_full());
    assert!(ctx.derive_objs(&BitSet::empty(9)).unwrap().is_full());
}

#[test]
fn derivations_and_closures_on_figure2() {
    let ctx = fixtures::figure2();
    assert_eq!(ctx.derive_attrs(&set(3, &[0, 2])).unwrap(), set(3, &[1]));
    assert_eq!(ctx.derive_objs(&set(3, &[0])).unwrap(), set(3, &[1]));
    assert_eq!(
        ctx.closure_attrs(&set(3, &[0, 1])).unwrap(),
        set(3, &[0, 1, 2])
    );
    assert_eq!(ctx.closure_attrs(&set(3, &[2])).unwrap(), set(3, &[2]));
    assert_eq!(ctx.closure_attrs(&set(3, &[0])).unwrap(), set(3, &[0, 2]));
    let t = table(&ctx);
    for mask in 0..8u64 {
        let b = BitSet::from_mask(3, mask);
        assert_eq!(
            as_set(&ctx.closure_attrs(&b).unwrap()),
            oracle_closure(&t, 3, &as_set(&b))
        );
    }
}

#[test]
fn closure_hamming_distance() {
    let ctx = fixtures::figure2();
    assert_eq!(ctx.chd(&set(3, &[0]), &set(3, &[1])).unwrap(), 3);
    assert_eq!(ctx.chd(&set(3, &[0]), &set(3, &[0, 2])).unwrap(), 0);
    let lb = fixtures::living_beings();
    let a = set(9, &[1, 7]);
    assert_eq!(lb.chd(&a, &a).unwrap(), 0);
}

#[test]
fn dual_context() {
    let ctx = fixtures::figure2();
    let d = ctx.dualize();
    assert_eq!((d.n_objects(), d.n_attributes()), (3, 3));
    assert_eq!(d.dualize(), ctx);
    assert_eq!(enumerate_concepts(&ctx).len(), 6);
    assert_eq!(enumerate_concepts(&d).len(), 6);
}

#[test]
fn burmeister_round_trip_and_errors() {
    let ctx = fixtures::figure2();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.cxt");
    fca2vec::context::save_burmeister(&ctx, &p).unwrap();
    assert_eq!(
        fca2vec::context::load_burmeister(&p, EmptyPolicy::Reject).unwrap(),
        ctx
    );

    let x = fca2vec::context::parse_burmeister("B\n\n1\n3\n\ng\n1\n2\n3\nX.X\n", EmptyPolicy::Drop)
        .unwrap();
    assert_eq!(x.row(0), &set(x.n_attributes(), &[0, 1]));
    let err = fca2vec::context::parse_burmeister(
        "B\n\n2\n3\n\na\nb\n1\n2\n3\nX.X\nX.\n",
        EmptyPolicy::Reject,
    )
    .unwrap_err()
    .to_string();
    assert!(err.contains("line"), "{err}");
}

#[test]
fn nominal_scaling_one_column() {
    let t = fca2vec::context::NominalTable::new(
        vec!["c".into()],
        vec![vec!["n".into()], vec!["y".into()], vec!["n".into()]],
    )
    .unwrap();
    let ctx = fca2vec::context::scale_nominal(&t, Default::default(), EmptyPolicy::Reject).unwrap();
    assert_eq!(ctx.n_attributes(), 2);
    assert_eq!(ctx.n_objects(), 3);
}

#[test]
fn concepts_match_brute_force() {
    for ctx in [fixtures::figure2(), fixtures::living_beings()] {
        let got: BTreeSet<BTreeSet<usize>> = enumerate_concepts(&ctx)
            .iter()
            .map(|c| as_set(&c.intent))
            .collect();
        assert_eq!(got, oracle_intents(&ctx));
    }
    let intents: Vec<BTreeSet<usize>> = enumerate_concepts(&fixtures::figure2())
        .iter()
        .map(|c| as_set(&c.intent))
        .collect();
    let want: Vec<BTreeSet<usize>> = [
        vec![],
        vec![1],
        vec![2],
        vec![0, 2],
        vec![1, 2],
        vec![0, 1, 2],
    ]
    .into_iter()
    .map(|v| v.into_iter().collect())
    .collect();
    let got: BTreeSet<_> = intents.into_iter().collect();
    assert_eq!(got, want.into_iter().collect());
    assert_eq!(enumerate_concepts(&fixtures::living_beings()).len(), 19);
}

/// Transitive reduction of extent inclusion, by definition.
fn oracle_covers(concepts: &[Concept]) -> BTreeSet<(usize, usize)> {
    let lt = |a: usize, b: usize| concepts[a].extent.is_proper_subset(&concepts[b].extent);
    let n = concepts.len();
    let mut out = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if lt(a, b) && !(0..n).any(|c| lt(a, c) && lt(c, b)) {
                out.insert((a, b));
            }
        }
    }
    out
}

#[test]
fn covering_relation_small_cases() {
    for ctx in [fixtures::figure2(), fixtures::living_beings()] {
        let c = enumerate_concepts(&ctx);
        let got: BTreeSet<_> = covering_relation(&c).unwrap().into_iter().collect();
        assert_eq!(got, oracle_covers(&c));
    }
    assert_eq!(
        covering_relation(&enumerate_concepts(&fixtures::figure2()))
            .unwrap()
            .len(),
        7
    );

    let chain = FormalContext::from_strings(&["XXX", "XX.", "X.."]).unwrap();
    assert_eq!(
        covering_relation(&enumerate_concepts(&chain))
            .unwrap()
            .len(),
        2
    );

    // top, bottom and three incomparable atoms
    let anti = FormalContext::from_strings(&["X..", ".X.", "..X"]).unwrap();
    let c = enumerate_concepts(&anti);
    assert_eq!(c.len(), 5);
    let covers = covering_relation(&c).unwrap();
    assert_eq!(covers.len(), 6);
    for (lo, hi) in covers {
        assert!(c[lo].extent.is_empty() || c[hi].extent.is_full());
    }
}

#[test]
fn concept_order() {
    let c = enumerate_concepts(&fixtures::figure2());
    let top = c.iter().find(|x| x.intent.is_empty()).unwrap();
    let bottom = c.iter().find(|x| x.intent.is_full()).unwrap();
    assert!(lattice::concept_order_leq(bottom, top));
    assert!(lattice::concept_order_leq(top, top));
    let three = c.iter().find(|x| x.intent == set(3, &[2])).unwrap();
    assert!(lattice::concept_order_leq(bottom, three));
}

#[test]
fn canonical_base_of_figure2() {
    let ctx = fixtures::figure2();
    let base = canonical_base(&ctx);
    assert_eq!(base.len(), 1);
    assert_eq!(base[0].premise, set(3, &[0]));
    assert_eq!(base[0].conclusion, set(3, &[0, 2]));
    assert_eq!(lattice::base_text(&ctx, &base), "1 -> 3\n");
}

#[test]
fn canonical_base_is_complete_on_living_beings() {
    let ctx = fixtures::living_beings();
    let base = canonical_base(&ctx);
    let t = table(&ctx);
    for mask in 0..1u64 << 9 {
        let b = BitSet::from_mask(9, mask);
        assert_eq!(
            as_set(&lattice::implication_closure(&base, &b)),
            oracle_closure(&t, 9, &as_set(&b))
        );
    }
}

#[test]
fn dense_net_basics() {
    let id = DenseNet::new(vec![Layer {
        in_dim: 2,
        out_dim: 2,
        weights: vec![1.0, 0.0, 0.0, 1.0],
        bias: None,
        activation: Activation::Identity,
    }])
    .unwrap();
    assert_eq!(id.forward(&[0.3, -2.0]).unwrap(), vec![0.3, -2.0]);
    assert_eq!(nn::softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    let affine = DenseNet::new(vec![Layer {
        in_dim: 1,
        out_dim: 1,
        weights: vec![2.0],
        bias: Some(vec![1.0]),
        activation: Activation::Identity,
    }])
    .unwrap();
    assert_eq!(affine.forward(&[3.0]).unwrap(), vec![7.0]);
}

#[test]
fn one_hot_vectors() {
    // 0-based: the first basis vector is index 0
    assert_eq!(nn::one_hot(0, 3), vec![1.0, 0.0, 0.0]);
    assert_eq!(nn::one_hot(2, 3), vec![0.0, 0.0, 1.0]);
    let sum: Vec<f64> = (0..4).fold(vec![0.0; 4], |acc, i| {
        acc.iter()
            .zip(nn::one_hot(i, 4))
            .map(|(a, b)| a + b)
            .collect()
    });
    assert_eq!(sum, vec![1.0; 4]);
}

#[test]
fn training_schedule_and_descent() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let layer = Layer::random(1, 1, true, Activation::Identity, nn::Init::Glorot, &mut rng);
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
        .map(|i| (vec![i as f64 / 10.0], vec![0.3 * i as f64]))
        .collect();
    let cfg = nn::TrainConfig {
        epochs: 50,
        lr0: 0.01,
        lr_schedule: nn::LrSchedule::Constant,
        batch_size: 1,
        loss: Loss::Mse,
        seed: 1,
        shuffle: true,
    };
    let mut net = DenseNet::new(vec![layer.clone()]).unwrap();
    let losses = nn::train(&mut net, &data, &cfg).unwrap();
    assert!(losses.last().unwrap() < &losses[0]);

    let mut still = DenseNet::new(vec![layer]).unwrap();
    let before = still.clone();
    let zero = nn::TrainConfig {
        epochs: 1,
        lr0: 0.0,
        ..cfg.clone()
    };
    nn::train(&mut still, &data, &zero).unwrap();
    assert_eq!(still, before);

    let decay = nn::TrainConfig {
        lr_schedule: nn::LrSchedule::LinearDecayToZero,
        epochs: 2,
        lr0: 0.8,
        ..cfg
    };
    let sgd = nn::Sgd::new(&decay, 10);
    assert_eq!(sgd.total_steps(), 20);
    assert!((sgd.lr_at(10) - 0.4).abs() < 1e-12);
}

#[test]
fn gradient_checks() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let cases = [
        (vec![(3, 2, Activation::Identity)], Loss::Mse),
        (vec![(3, 2, Activation::Sigmoid)], Loss::Mse),
        (
            vec![(3, 4, Activation::Relu), (4, 2, Activation::Identity)],
            Loss::Mse,
        ),
        (
            vec![(3, 2, Activation::Identity), (2, 3, Activation::Softmax)],
            Loss::CrossEntropy,
        ),
    ];
    for (layers, loss) in cases {
        let net = DenseNet::new(
            layers
                .iter()
                .map(|&(i, o, a)| Layer::random(i, o, true, a, nn::Init::Glorot, &mut rng))
                .collect(),
        )
        .unwrap();
        let out = net.output_dim();
        let target = if loss == Loss::CrossEntropy {
            nn::one_hot(1, out)
        } else {
            vec![0.25; out]
        };
        let err = nn::gradient_check(&net, &[0.4, -0.7, 0.9], &target, loss).unwrap();
        assert!(err < 1e-4, "{layers:?}: {err}");
    }
}

#[test]
fn rudolph_net_examples() {
    let ctx = fixtures::figure2();
    let net = ClosureNet::build(&ctx);
    assert_eq!(net.forward(&set(3, &[0])).unwrap(), set(3, &[0, 2]));
    assert_eq!(
        net.forward(&BitSet::empty(3)).unwrap(),
        ctx.closure_attrs(&BitSet::empty(3)).unwrap()
    );
    let v = rudolph::verify_closure_net(&ctx, &net, 0, 0, Execution::Sequential).unwrap();
    assert!(v.passed() && v.exhaustive);
    assert_eq!(v.tested, 8);

    let lb = fixtures::living_beings();
    let lnet = ClosureNet::build(&lb);
    assert_eq!(
        lnet.hidden(&set(9, &[3, 4, 5])).unwrap(),
        set(8, &[0, 5, 6])
    );

    let mut broken = lnet.clone();
    broken.flip_weight(0, 3);
    let v = rudolph::verify_closure_net(&lb, &broken, 0, 0, Execution::default()).unwrap();
    let b = v.counterexample.expect("mutation must be detected");
    assert!(
        broken.forward(&b).unwrap() != lb.closure_attrs(&b).unwrap()
            || broken.hidden(&b).unwrap() != lb.derive_objs(&b).unwrap()
    );
}

#[test]
fn affine_residual_examples() {
    let r = rudolph::best_affine_fit_residual(&fixtures::figure2()).unwrap();
    assert!(r >= 0.2, "{r}");
    assert!(rudolph::best_affine_fit_residual(&fixtures::contranominal(4)).unwrap() < 1e-8);
    let perm = fixtures::figure2().restrict(&[2, 0, 1], &[0, 1, 2]);
    assert!((rudolph::best_affine_fit_residual(&perm).unwrap() - r).abs() < 1e-8);
}

#[test]
fn chd_samples_on_figure2() {
    let ctx = fixtures::figure2();
    let s = closure2vec::generate_chd_samples(&ctx, 1, TargetScale::Plain, 0, Execution::default());
    assert_eq!(s.len(), 4);
    assert!(s.iter().all(|x| (0.0..=1.0).contains(&x.z)));
    // {1} against {1,2}: closures {1,3} and {1,2,3} differ in one place
    let d = ctx.chd(&set(3, &[0]), &set(3, &[0, 1])).unwrap();
    assert_eq!(d as f64 / 3.0, 1.0 / 3.0);
}

#[test]
fn siamese_distance_examples() {
    assert_eq!(Distance::Euclidean.between(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    let ctx = fixtures::living_beings();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
    let model =
        closure2vec::SiameseModel::new(9, 8, 3, Distance::Euclidean, nn::Init::Glorot, &mut rng)
            .unwrap();
    let (a, b) = (set(9, &[1, 2]), set(9, &[4]));
    assert_eq!(model.embed(&a).unwrap().len(), 3);
    assert_eq!(model.embed(&a).unwrap(), model.embed(&a).unwrap());
    assert_eq!(model.pair_distance(&a, &a).unwrap(), 0.0);
    assert_eq!(
        model.pair_distance(&a, &b).unwrap(),
        model.pair_distance(&b, &a).unwrap()
    );
    let _ = ctx;
}

#[test]
fn target_context_pairs_on_living_beings() {
    let ctx = fixtures::living_beings();
    let concepts = enumerate_concepts(&ctx);
    let pairs = fc2vec::target_context_pairs(&ctx, &concepts);
    let afg = set(8, &[0, 5, 6]);
    for (t, rest) in [(0, [5, 6]), (5, [0, 6]), (6, [0, 5])] {
        assert!(pairs
            .iter()
            .any(|p| p.target == t && p.context == set(8, &rest)));
    }
    let extents = fc2vec::qualifying_extents(8, &concepts);
    assert!(extents.contains(&afg));
    assert!(extents.iter().all(|e| e.len() > 1 && e.len() < 8));

    let fig = fixtures::figure2();
    let fc = enumerate_concepts(&fig);
    let want: usize = fc
        .iter()
        .map(|c| c.extent.len())
        .filter(|&k| k > 1 && k < 3)
        .sum();
    assert_eq!(fc2vec::target_context_pairs(&fig, &fc).len(), want);
}

#[test]
fn skip_gram_examples_on_living_beings() {
    let ctx = fixtures::living_beings();
    let extents = fc2vec::qualifying_extents(8, &enumerate_concepts(&ctx));
    let ex = fc2vec::sg_examples(&extents, 0);
    // target f (index 5) with context {a, g}
    assert!(ex.contains(&Example::SkipGram {
        input: 5,
        target: 0
    }));
    let fg = ex
        .iter()
        .filter(|e| {
            **e == Example::SkipGram {
                input: 5,
                target: 6,
            }
        })
        .count();
    assert!(fg >= 2, "{fg}");
    let total: usize = extents.iter().map(|e| e.len() * (e.len() - 1)).sum();
    assert_eq!(ex.len(), total);
}

#[test]
fn cbow_examples_on_living_beings() {
    let ctx = fixtures::living_beings();
    let concepts = enumerate_concepts(&ctx);
    let extents = fc2vec::qualifying_extents(8, &concepts);
    let ex = fc2vec::cbow_examples(&extents, 0);
    let want = Example::Cbow {
        context: set(8, &[0, 6]),
        target: 5,
    };
    let e = ex.iter().find(|e| **e == want).unwrap();
    let v = e.input_vector(8);
    assert_eq!(v[0], 0.5);
    assert_eq!(v[6], 0.5);
    assert_eq!(
        ex.len(),
        fc2vec::target_context_pairs(&ctx, &concepts).len()
    );
    assert_eq!(ex.iter().collect::<HashSet<_>>().len(), ex.len());
}

#[test]
fn link_features_and_negatives() {
    let t = EmbeddingTable::new(
        vec!["x".into(), "y".into()],
        vec![vec![1.0, 2.0], vec![3.0, -1.0]],
    )
    .unwrap();
    assert_eq!(edge_features(&t, (0, 1)), vec![3.0, -2.0]);
    assert_eq!(edge_features(&t, (1, 0)), edge_features(&t, (0, 1)));
    assert_eq!(edge_features(&t, (0, 0)), vec![1.0, 4.0]);

    let forbidden: HashSet<(usize, usize)> = [(0, 1), (1, 2)].into_iter().collect();
    let neg = negative_sample_edges(5, &forbidden, 2, 1).unwrap();
    assert_eq!(neg.len(), 2);
    assert!(neg.iter().all(|e| !forbidden.contains(e) && e.0 < e.1));
    let complete: HashSet<(usize, usize)> = (0..4)
        .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
        .collect();
    assert!(negative_sample_edges(4, &complete, 1, 0).is_err());
}

#[test]
fn kmeans_examples() {
    let pts = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.0],
        vec![10.0, 10.0],
        vec![10.0, 10.1],
    ];
    let one = kmeans(&pts, 1, 0).unwrap();
    assert!((one.centroids[0][0] - 5.025).abs() < 1e-12);
    let all = kmeans(&pts, 4, 0).unwrap();
    assert_eq!(all.inertia, 0.0);
    let two = kmeans(&pts, 2, 0).unwrap().clustering.assignment;
    assert_eq!(two[0], two[1]);
    assert_eq!(two[2], two[3]);
    assert_ne!(two[0], two[2]);
}

#[test]
fn intra_cluster_ratio_examples() {
    let base = canonical_base(&fixtures::figure2());
    assert_eq!(
        intra_cluster_ratio(&base, &Clustering::new(vec![0, 1, 0], 2).unwrap()),
        1.0
    );
    assert_eq!(
        intra_cluster_ratio(&base, &Clustering::new(vec![0, 0, 1], 2).unwrap()),
        0.0
    );
    assert_eq!(
        intra_cluster_ratio(&[], &Clustering::new(vec![0, 0, 1], 2).unwrap()),
        0.0
    );
    let lb = canonical_base(&fixtures::living_beings());
    assert_eq!(
        intra_cluster_ratio(&lb, &Clustering::new(vec![0; 9], 1).unwrap()),
        1.0
    );
    let singles = Clustering::new((0..9).collect(), 9).unwrap();
    let small = lb.iter().filter(|i| i.attributes().len() == 1).count() as f64 / lb.len() as f64;
    assert_eq!(intra_cluster_ratio(&lb, &singles), small);
}

#[test]
fn naive_clustering_groups_identical_columns() {
    let ctx = FormalContext::from_strings(&["XX.", "XX.", "..X", "X.X"]).unwrap();
    let ctx = ctx.restrict(&[0, 1, 2], &[0, 1, 2]);
    let c = fca2vec::eval::naive_clustering(&ctx, 2, 0).unwrap();
    assert_eq!(c.assignment.len(), 3);
    assert_eq!(c.assignment[0], c.assignment[1]);
}
