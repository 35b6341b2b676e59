//! object2vec and attribute2vec: skip-gram and CBoW training over concept
//! extents.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::ObjSet;
use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::lattice::{enumerate_concepts, Concept};
use crate::nn::{self, Activation, DenseNet, Init, Layer, Loss, LrSchedule, Sgd, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "sg")]
    SkipGram,
    #[serde(rename = "cbow")]
    Cbow,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::SkipGram => "sg",
            Architecture::Cbow => "cbow",
        })
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sg" | "skipgram" | "skip-gram" => Ok(Architecture::SkipGram),
            "cbow" => Ok(Architecture::Cbow),
            _ => Err(Error::Config(format!(
                "unknown architecture `{s}` (expected sg or cbow)"
            ))),
        }
    }
}

/// `(t, A ∖ {t})` for an extent `A` with `1 < |A| < |G|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetContextPair {
    pub target: usize,
    pub context: ObjSet,
}

/// Extents that produce training pairs, in concept order.
pub fn qualifying_extents(n_objects: usize, concepts: &[Concept]) -> Vec<ObjSet> {
    concepts
        .iter()
        .filter(|c| {
            let k = c.extent.len();
            k > 1 && k < n_objects
        })
        .map(|c| c.extent.clone())
        .collect()
}

pub fn target_context_pairs(ctx: &FormalContext, concepts: &[Concept]) -> Vec<TargetContextPair> {
    qualifying_extents(ctx.n_objects(), concepts)
        .into_iter()
        .flat_map(|a| {
            a.iter()
                .map(|t| {
                    let mut context = a.clone();
                    context.remove(t);
                    TargetContextPair { target: t, context }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// A training example in index form. Inputs and targets are one-hot except
/// the CBoW input, which is the mean of the context one-hots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Example {
    SkipGram { input: usize, target: usize },
    Cbow { context: ObjSet, target: usize },
}

impl Example {
    pub fn input_vector(&self, n: usize) -> Vec<f64> {
        match self {
            Example::SkipGram { input, .. } => nn::one_hot(*input, n),
            Example::Cbow { context, .. } => {
                let w = 1.0 / context.len() as f64;
                let mut v = vec![0.0; n];
                for c in context.iter() {
                    v[c] = w;
                }
                v
            }
        }
    }

    pub fn target(&self) -> usize {
        match self {
            Example::SkipGram { target, .. } | Example::Cbow { target, .. } => *target,
        }
    }
}

/// How the example list is ordered within one epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Shuffled extents, each with shuffled members; a target's skip-gram
    /// examples stay adjacent.
    #[default]
    Extents,
    /// As `Extents`, then the whole list shuffled once more.
    Global,
}

/// One epoch's example list: extents in random order, members of each extent
/// in random order, then the skip-gram or CBoW examples of every member.
pub fn generate_examples(
    extents: &[ObjSet],
    arch: Architecture,
    ordering: Ordering,
    rng: &mut ChaCha8Rng,
) -> Vec<Example> {
    let mut order: Vec<usize> = (0..extents.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::new();
    for e in order {
        let a = &extents[e];
        let mut members = a.to_vec();
        members.shuffle(rng);
        for &o in &members {
            match arch {
                Architecture::SkipGram => {
                    for &c in &members {
                        if c != o {
                            out.push(Example::SkipGram {
                                input: o,
                                target: c,
                            });
                        }
                    }
                }
                Architecture::Cbow => {
                    if members.len() > 1 {
                        let mut context = a.clone();
                        context.remove(o);
                        out.push(Example::Cbow { context, target: o });
                    }
                }
            }
        }
    }
    if ordering == Ordering::Global {
        out.shuffle(rng);
    }
    out
}

pub fn sg_examples(extents: &[ObjSet], seed: u64) -> Vec<Example> {
    generate_examples(
        extents,
        Architecture::SkipGram,
        Ordering::Extents,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

pub fn cbow_examples(extents: &[ObjSet], seed: u64) -> Vec<Example> {
    generate_examples(
        extents,
        Architecture::Cbow,
        Ordering::Extents,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fc2VecConfig {
    pub arch: Architecture,
    pub dim: usize,
    pub ordering: Ordering,
    pub init: Init,
    pub train: TrainConfig,
}

impl Fc2VecConfig {
    /// Learning rate 1.0 with linear decay, batch size 1, full softmax with
    /// cross-entropy.
    pub fn new(arch: Architecture, dim: usize, epochs: usize, seed: u64) -> Self {
        Fc2VecConfig {
            arch,
            dim,
            ordering: Ordering::Extents,
            init: Init::Word2Vec,
            train: TrainConfig {
                epochs,
                lr0: 1.0,
                lr_schedule: LrSchedule::LinearDecayToZero,
                batch_size: 1,
                loss: Loss::CrossEntropy,
                seed,
                shuffle: true,
            },
        }
    }
}

/// Per-entity vectors, one row per entity.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub names: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// Sidecar metadata for an embedding TSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub method: String,
    pub arch: Option<Architecture>,
    pub dim: usize,
    pub seed: u64,
    pub epochs: usize,
    pub lr0: f64,
    pub context_hash: String,
}

impl EmbeddingTable {
    pub fn new(names: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != vectors.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                found: vectors.len(),
            });
        }
        if let Some(d) = vectors.first().map(Vec::len) {
            if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
                return Err(Error::Dimension {
                    expected: d,
                    found: bad.len(),
                });
            }
        }
        Ok(EmbeddingTable { names, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.names.iter().zip(&self.vectors) {
            out.push_str(name);
            for x in v {
                let _ = write!(out, "\t{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        let mut vectors = Vec::new();
        for (i, l) in text.lines().enumerate() {
            if l.trim().is_empty() {
                continue;
            }
            let mut f = l.split('\t');
            let name = f.next().unwrap_or_default().to_string();
            let v: Vec<f64> = f
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, format!("bad coordinate: {e}")))?;
            if v.is_empty() {
                return Err(Error::parse(i + 1, "row has no coordinates"));
            }
            if vectors
                .first()
                .is_some_and(|w: &Vec<f64>| w.len() != v.len())
            {
                return Err(Error::parse(i + 1, "inconsistent dimension"));
            }
            names.push(name);
            vectors.push(v);
        }
        EmbeddingTable::new(names, vectors)
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: Option<&EmbeddingMeta>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))?;
        if let Some(meta) = meta {
            let mp = meta_path(path);
            let json = serde_json::to_string_pretty(meta)?;
            fs::write(&mp, json + "\n").map_err(|e| Error::io(&mp, e))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_tsv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Reorders rows to follow `names`; every name must be present.
    pub fn aligned_to(&self, names: &[String]) -> Result<Self> {
        let vectors = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .map(|i| self.vectors[i].clone())
                    .ok_or_else(|| Error::InvalidInput(format!("no embedding for `{n}`")))
            })
            .collect::<Result<_>>()?;
        EmbeddingTable::new(names.to_vec(), vectors)
    }
}

/// `embeddings.tsv` → `embeddings.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// The two-matrix net: `W: n → d` (identity) then `U: d → n` (softmax).
pub fn build_net(n: usize, dim: usize, init: Init, rng: &mut ChaCha8Rng) -> Result<DenseNet> {
    DenseNet::new(vec![
        Layer::random(n, dim, false, Activation::Identity, init, rng),
        Layer::random(dim, n, false, Activation::Softmax, init, rng),
    ])
}

/// Rows of `W`, i.e. `Wᵀ`'s rows: entity `v` maps to column `v` of `W`.
pub fn embeddings_of(net: &DenseNet, names: &[String]) -> EmbeddingTable {
    let w = &net.layers()[0];
    let vectors = (0..w.in_dim)
        .map(|v| (0..w.out_dim).map(|i| w.weight(i, v)).collect())
        .collect();
    EmbeddingTable {
        names: names.to_vec(),
        vectors,
    }
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct Trained {
    pub table: EmbeddingTable,
    pub net: DenseNet,
    pub losses: Vec<f64>,
}

/// Trains on the extents of `concepts`, regenerating the example list
/// every epoch.
pub fn train_object2vec(
    ctx: &FormalContext,
    concepts: &[Concept],
    cfg: &Fc2VecConfig,
) -> Result<Trained> {
    cfg.train.validate()?;
    if cfg.dim == 0 {
        return Err(Error::Config(
            "embedding dimension must be at least 1".into(),
        ));
    }
    if cfg.train.loss != Loss::CrossEntropy {
        return Err(Error::Config("object2vec trains with cross-entropy".into()));
    }
    let n = ctx.n_objects();
    let extents = qualifying_extents(n, concepts);
    if extents.is_empty() {
        return Err(Error::EmptyTraining(
            "no extent with more than one and fewer than all objects".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut net = build_net(n, cfg.dim, cfg.init, &mut rng)?;
    let per_epoch: usize = extents
        .iter()
        .map(|a| match cfg.arch {
            Architecture::SkipGram => a.len() * (a.len() - 1),
            Architecture::Cbow => a.len(),
        })
        .sum();
    let mut sgd = Sgd::new(&cfg.train, per_epoch);
    let mut losses = Vec::with_capacity(cfg.train.epochs);
    for epoch in 0..cfg.train.epochs {
        let examples = generate_examples(&extents, cfg.arch, cfg.ordering, &mut rng);
        let mut sum = 0.0;
        for (b, chunk) in examples.chunks(cfg.train.batch_size).enumerate() {
            let data: Vec<(Vec<f64>, Vec<f64>)> = chunk
                .iter()
                .map(|e| (e.input_vector(n), nn::one_hot(e.target(), n)))
                .collect();
            let loss = sgd.step(
                &mut net,
                data.iter().map(|(x, t)| (x.as_slice(), t.as_slice())),
            )?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            sum += loss;
        }
        losses.push(sum / examples.len() as f64);
    }
    Ok(Trained {
        table: embeddings_of(&net, ctx.objects()),
        net,
        losses,
    })
}

/// Concepts of the dual context, in lectic order of their new intents.
pub fn dual_concepts(concepts: &[Concept]) -> Vec<Concept> {
    let mut out: Vec<Concept> = concepts
        .iter()
        .map(|c| Concept {
            extent: c.intent.clone(),
            intent: c.extent.clone(),
        })
        .collect();
    out.sort_by(|a, b| a.intent.lectic_cmp(&b.intent));
    out
}

/// object2vec on the dual context; rows are attributes.
pub fn train_attribute2vec(
    ctx: &FormalContext,
    concepts: &[Concept],
    cfg: &Fc2VecConfig,
) -> Result<Trained> {
    train_object2vec(&ctx.dualize(), &dual_concepts(concepts), cfg)
}

/// Enumerates concepts, then trains object2vec.
pub fn object2vec(ctx: &FormalContext, cfg: &Fc2VecConfig) -> Result<Trained> {
    train_object2vec(ctx, &enumerate_concepts(ctx), cfg)
}

pub fn attribute2vec(ctx: &FormalContext, cfg: &Fc2VecConfig) -> Result<Trained> {
    let dual = ctx.dualize();
    train_object2vec(&dual, &enumerate_concepts(&dual), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitset::BitSet;
    use crate::fixtures;
    use std::collections::HashSet;

    fn living() -> (FormalContext, Vec<Concept>) {
        let ctx = fixtures::living_beings();
        let c = enumerate_concepts(&ctx);
        (ctx, c)
    }

    fn obj(ctx: &FormalContext, names: &[&str]) -> ObjSet {
        BitSet::from_indices(
            ctx.n_objects(),
            names.iter().map(|n| ctx.object_index(n).unwrap()),
        )
    }

    #[test]
    fn pairs_of_example_concept() {
        let (ctx, concepts) = living();
        let pairs = target_context_pairs(&ctx, &concepts);
        let afg = obj(&ctx, &["a", "f", "g"]);
        for (t, rest) in [("a", ["f", "g"]), ("f", ["a", "g"]), ("g", ["a", "f"])] {
            let p = TargetContextPair {
                target: ctx.object_index(t).unwrap(),
                context: obj(&ctx, &rest),
            };
            assert!(pairs.contains(&p));
        }
        assert!(concepts.iter().any(|c| c.extent == afg));
        assert!(pairs
            .iter()
            .all(|p| !p.context.contains(p.target) && !p.context.is_empty()));
    }

    #[test]
    fn figure2_pair_count() {
        let ctx = fixtures::figure2();
        let concepts = enumerate_concepts(&ctx);
        let pairs = target_context_pairs(&ctx, &concepts);
        // extents of size 2 below |G| = 3: {a,b}, {a,c}
        assert_eq!(pairs.len(), 4);
        assert_eq!(qualifying_extents(3, &concepts).len(), 2);
    }

    #[test]
    fn skip_gram_examples_of_f() {
        let (ctx, concepts) = living();
        let extents = qualifying_extents(ctx.n_objects(), &concepts);
        let ex = sg_examples(&extents, 3);
        let (a, f, g) = (0, 5, 6);
        let fg = ex
            .iter()
            .filter(|e| {
                **e == Example::SkipGram {
                    input: f,
                    target: g,
                }
            })
            .count();
        assert!(fg >= 2, "{fg}");
        assert!(ex.contains(&Example::SkipGram {
            input: f,
            target: a
        }));
        assert_eq!(nn::one_hot(f, 8)[5], 1.0);
        let expected: usize = extents.iter().map(|a| a.len() * (a.len() - 1)).sum();
        assert_eq!(ex.len(), expected);
    }

    #[test]
    fn cbow_example_is_midpoint() {
        let ctx = fixtures::living_beings();
        let afg = obj(&ctx, &["a", "f", "g"]);
        let ex = cbow_examples(&[afg], 0);
        assert_eq!(ex.len(), 3);
        let e = ex.iter().find(|e| e.target() == 5).unwrap();
        let v = e.input_vector(8);
        assert_eq!(v, vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn cbow_has_no_duplicates() {
        for seed in 0..20 {
            let ctx = fixtures::random_context(9, 9, 0.4, seed);
            let concepts = enumerate_concepts(&ctx);
            let extents = qualifying_extents(ctx.n_objects(), &concepts);
            let ex = cbow_examples(&extents, seed);
            let set: HashSet<_> = ex.iter().collect();
            assert_eq!(set.len(), ex.len());
            assert_eq!(ex.len(), target_context_pairs(&ctx, &concepts).len());
        }
    }

    #[test]
    fn example_generation_is_seeded() {
        let (ctx, concepts) = living();
        let extents = qualifying_extents(ctx.n_objects(), &concepts);
        assert_eq!(sg_examples(&extents, 9), sg_examples(&extents, 9));
        assert_ne!(sg_examples(&extents, 9), sg_examples(&extents, 10));
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        let a = generate_examples(&extents, Architecture::SkipGram, Ordering::Global, &mut r1);
        let b = generate_examples(&extents, Architecture::SkipGram, Ordering::Extents, &mut r2);
        let mut sa = a.clone();
        let mut sb = b.clone();
        let key = |e: &Example| (e.target(), format!("{e:?}"));
        sa.sort_by_key(key);
        sb.sort_by_key(key);
        assert_eq!(sa, sb);
    }

    #[test]
    fn training_shapes_and_descent() {
        let (ctx, concepts) = living();
        let mut drops = 0.0;
        for seed in 0..5 {
            let cfg = Fc2VecConfig::new(Architecture::SkipGram, 2, 30, seed);
            let t = train_object2vec(&ctx, &concepts, &cfg).unwrap();
            assert_eq!(t.table.len(), 8);
            assert_eq!(t.table.dim(), 2);
            drops += t.losses[0] - t.losses[29];
        }
        assert!(drops > 0.0);
        let cfg = Fc2VecConfig::new(Architecture::Cbow, 3, 30, 1);
        let t = train_attribute2vec(&ctx, &concepts, &cfg).unwrap();
        assert_eq!(t.table.len(), 9);
        assert_eq!(t.table.dim(), 3);
        assert!(t.losses[29] < t.losses[0]);
    }

    #[test]
    fn attribute2vec_is_object2vec_on_dual() {
        let (ctx, concepts) = living();
        let cfg = Fc2VecConfig::new(Architecture::SkipGram, 2, 5, 4);
        let a = train_attribute2vec(&ctx, &concepts, &cfg).unwrap();
        let b = object2vec(&ctx.dualize(), &cfg).unwrap();
        let c = attribute2vec(&ctx, &cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.table, c.table);
    }

    #[test]
    fn duplicated_rows_embed_close() {
        // objects 0 and 1 share a row; others are random
        let base = fixtures::random_context(10, 8, 0.4, 17);
        let mut rows: Vec<_> = base.rows().to_vec();
        rows[1] = rows[0].clone();
        let ctx =
            FormalContext::new(base.objects().to_vec(), base.attributes().to_vec(), rows).unwrap();
        let concepts = enumerate_concepts(&ctx);
        let (mut twin, mut other) = (0.0, 0.0);
        for seed in 0..5 {
            let cfg = Fc2VecConfig::new(Architecture::Cbow, 2, 50, seed);
            let t = train_object2vec(&ctx, &concepts, &cfg).unwrap();
            let d = |i: usize, j: usize| {
                crate::closure2vec::Distance::Euclidean
                    .between(t.table.vector(i), t.table.vector(j))
            };
            twin += d(0, 1);
            let mut all = 0.0;
            let mut k = 0;
            for i in 0..10 {
                for j in i + 1..10 {
                    all += d(i, j);
                    k += 1;
                }
            }
            other += all / k as f64;
        }
        assert!(twin <= other, "twin {twin} vs mean {other}");
    }

    #[test]
    fn empty_training_rejected() {
        let ctx = fixtures::contranominal(2);
        let concepts = enumerate_concepts(&ctx);
        let cfg = Fc2VecConfig::new(Architecture::SkipGram, 2, 1, 0);
        assert!(matches!(
            train_object2vec(&ctx, &concepts, &cfg),
            Err(Error::EmptyTraining(_))
        ));
    }

    #[test]
    fn table_tsv_round_trip() {
        let t = EmbeddingTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, -1.0], vec![2.0, 0.25]],
        )
        .unwrap();
        let text = t.to_tsv();
        assert_eq!(text, "a\t0.5\t-1\nb\t2\t0.25\n");
        assert_eq!(EmbeddingTable::from_tsv(&text).unwrap(), t);
        assert!(EmbeddingTable::from_tsv("a\t1\nb\t1\t2\n").is_err());
        let flipped = t.aligned_to(&["b".into(), "a".into()]).unwrap();
        assert_eq!(flipped.vector(0), &[2.0, 0.25]);
        assert!(t.aligned_to(&["z".into()]).is_err());
    }
}
