use std::collections::HashSet;

use proptest::prelude::*;

use fca2vec::closure2vec::{self, TargetScale};
use fca2vec::fc2vec;
use fca2vec::lattice::{self, canonical_base, enumerate_concepts};
use fca2vec::nn::{self, Activation, DenseNet, Layer};
use fca2vec::{fixtures, BitSet, Execution, FormalContext};

fn context() -> impl Strategy<Value = FormalContext> {
    (1usize..8, 1usize..8, 0.1f64..0.9, any::<u64>())
        .prop_map(|(g, m, p, s)| fixtures::random_context(g, m, p, s))
}

fn subset(m: usize) -> impl Strategy<Value = BitSet> {
    proptest::collection::vec(any::<bool>(), m).prop_map(|b| BitSet::from_bools(&b))
}

fn ctx_and_sets() -> impl Strategy<Value = (FormalContext, BitSet, BitSet)> {
    context().prop_flat_map(|c| {
        let m = c.n_attributes();
        (Just(c), subset(m), subset(m))
    })
}

proptest! {
    #[test]
    fn closure_is_a_closure_operator((ctx, a, b) in ctx_and_sets()) {
        let ca = ctx.closure_attrs(&a).unwrap();
        prop_assert!(a.is_subset(&ca));
        prop_assert_eq!(ctx.closure_attrs(&ca).unwrap(), ca.clone());
        let ab = a.union(&b);
        prop_assert!(ca.is_subset(&ctx.closure_attrs(&ab).unwrap()));
    }

    #[test]
    fn chd_is_a_pseudometric((ctx, a, b) in ctx_and_sets()) {
        prop_assert_eq!(ctx.chd(&a, &a).unwrap(), 0);
        prop_assert_eq!(ctx.chd(&a, &b).unwrap(), ctx.chd(&b, &a).unwrap());
        let c = a.intersection(&b);
        prop_assert!(ctx.chd(&a, &b).unwrap() <= ctx.chd(&a, &c).unwrap() + ctx.chd(&c, &b).unwrap());
    }

    #[test]
    fn concepts_are_closed_lectic_and_complete(ctx in context()) {
        let concepts = enumerate_concepts(&ctx);
        for c in &concepts {
            prop_assert_eq!(ctx.derive_attrs(&c.extent).unwrap(), c.intent.clone());
            prop_assert_eq!(ctx.derive_objs(&c.intent).unwrap(), c.extent.clone());
        }
        for w in concepts.windows(2) {
            prop_assert_eq!(w[0].intent.lectic_cmp(&w[1].intent), std::cmp::Ordering::Less);
        }
        let m = ctx.n_attributes();
        let all: HashSet<BitSet> = (0..1u64 << m)
            .map(|x| ctx.closure_attrs(&BitSet::from_mask(m, x)).unwrap())
            .collect();
        prop_assert_eq!(all.len(), concepts.len());
        prop_assert_eq!(enumerate_concepts(&ctx.dualize()).len(), concepts.len());
    }

    #[test]
    fn covers_agree_across_methods(ctx in context()) {
        let concepts = enumerate_concepts(&ctx);
        let mut a = lattice::covering_relation_with(&concepts, Execution::Sequential).unwrap();
        let mut b = lattice::covering_relation_in(&ctx, &concepts, Execution::default()).unwrap();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn canonical_base_is_sound_and_complete(ctx in context()) {
        let base = canonical_base(&ctx);
        let m = ctx.n_attributes();
        for imp in &base {
            prop_assert!(imp.holds_in(&ctx));
            prop_assert!(imp.premise.is_proper_subset(&imp.conclusion));
        }
        for x in 0..1u64 << m {
            let s = BitSet::from_mask(m, x);
            prop_assert_eq!(lattice::implication_closure(&base, &s), ctx.closure_attrs(&s).unwrap());
        }
    }

    #[test]
    fn cbow_examples_are_unique(ctx in context(), seed in any::<u64>()) {
        let extents = fc2vec::qualifying_extents(ctx.n_objects(), &enumerate_concepts(&ctx));
        let ex = fc2vec::cbow_examples(&extents, seed);
        prop_assert_eq!(ex.iter().collect::<HashSet<_>>().len(), ex.len());
    }

    #[test]
    fn chd_samples_are_normalised(ctx in context(), t in 0usize..4, seed in any::<u64>()) {
        let s = closure2vec::generate_chd_samples(&ctx, t, TargetScale::Squared, seed, Execution::default());
        prop_assert_eq!(s.len(), closure2vec::sample_count(ctx.n_attributes(), t.min(ctx.n_attributes())));
        for x in &s {
            prop_assert!((0.0..=1.0).contains(&x.z));
            prop_assert_eq!(x.x.hamming(&x.y), 1);
        }
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), i in 1usize..5, h in 1usize..5, o in 1usize..5) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let net = DenseNet::new(vec![
            Layer::random(i, h, true, Activation::Relu, nn::Init::Glorot, &mut rng),
            Layer::random(h, o, false, Activation::Softmax, nn::Init::Word2Vec, &mut rng),
        ]).unwrap();
        prop_assert_eq!(DenseNet::from_checkpoint(&net.to_checkpoint()).unwrap(), net);
    }
}
