//! closure2vec: a siamese relu net mapping attribute sets to `d`-dimensional
//! points whose distances approximate the closure Hamming distance.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::{AttrSet, BitSet};
use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::nn::{
    self, Activation, DenseNet, Gradients, Init, Layer, Loss, LrSchedule, TrainConfig,
};
use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Euclidean,
    /// `1 - cos`, in `[0, 2]`; a zero vector has cosine 0 with everything.
    Cosine,
}

impl Distance {
    pub fn between(self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Distance::Cosine => {
                let (nu, nv) = (norm(u), norm(v));
                if nu == 0.0 || nv == 0.0 {
                    return 1.0;
                }
                1.0 - dot(u, v) / (nu * nv)
            }
        }
    }

    /// Gradients of the distance with respect to `u` and `v`.
    fn gradients(self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            Distance::Euclidean => {
                let d = self.between(u, v);
                if d == 0.0 {
                    return (vec![0.0; u.len()], vec![0.0; v.len()]);
                }
                let gu: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a - b) / d).collect();
                let gv = gu.iter().map(|g| -g).collect();
                (gu, gv)
            }
            Distance::Cosine => {
                let (nu, nv) = (norm(u), norm(v));
                if nu == 0.0 || nv == 0.0 {
                    return (vec![0.0; u.len()], vec![0.0; v.len()]);
                }
                let c = dot(u, v) / (nu * nv);
                let gu = u
                    .iter()
                    .zip(v)
                    .map(|(a, b)| -(b / (nu * nv) - c * a / (nu * nu)))
                    .collect();
                let gv = v
                    .iter()
                    .zip(u)
                    .map(|(b, a)| -(a / (nu * nv) - c * b / (nv * nv)))
                    .collect();
                (gu, gv)
            }
        }
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// How the normalised chd becomes a regression target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScale {
    Plain,
    Squared,
}

impl TargetScale {
    /// Squared for euclidean, plain for cosine.
    pub fn default_for(distance: Distance) -> Self {
        match distance {
            Distance::Euclidean => TargetScale::Squared,
            Distance::Cosine => TargetScale::Plain,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            TargetScale::Plain => z,
            TargetScale::Squared => z * z,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChdSample {
    pub x: AttrSet,
    pub y: AttrSet,
    pub z: f64,
}

/// All subsets of `{0..m}` with at most `t` elements, by size and then
/// lexicographically by index list.
pub fn subsets_up_to(m: usize, t: usize) -> Vec<AttrSet> {
    let mut out = Vec::new();
    for k in 0..=t.min(m) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(BitSet::from_indices(m, idx.iter().copied()));
            // advance to the next k-combination
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Number of subsets of an `m`-set with at most `t` elements.
pub fn sample_count(m: usize, t: usize) -> usize {
    let mut total = 0usize;
    let mut binom = 1usize;
    for k in 0..=t.min(m) {
        total += binom;
        binom = binom * (m - k) / (k + 1);
    }
    total
}

/// One sample per `X ⊆ M` with `|X| ≤ t`: `Y = X Δ {m}` for a uniformly
/// drawn `m`, target `chd(X, Y)/|M|` scaled by `scale`.
pub fn generate_chd_samples(
    ctx: &FormalContext,
    t: usize,
    scale: TargetScale,
    seed: u64,
    exec: Execution,
) -> Vec<ChdSample> {
    let m = ctx.n_attributes();
    let t = if t > m {
        warn!("premise size bound {t} exceeds |M| = {m}; using {m}");
        m
    } else {
        t
    };
    let xs = subsets_up_to(m, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flips: Vec<usize> = xs.iter().map(|_| rng.random_range(0..m)).collect();
    let pairs: Vec<(AttrSet, usize)> = xs.into_iter().zip(flips).collect();
    exec.map(&pairs, |(x, flip)| {
        let mut y = x.clone();
        y.toggle(*flip);
        let d = ctx
            .closure_attrs_unchecked(x)
            .hamming(&ctx.closure_attrs_unchecked(&y));
        ChdSample {
            x: x.clone(),
            y,
            z: scale.apply(d as f64 / m as f64),
        }
    })
}

pub fn samples_tsv(samples: &[ChdSample]) -> String {
    let mut out = String::new();
    for s in samples {
        let _ = writeln!(out, "{}\t{}\t{}", s.x.to_hex(), s.y.to_hex(), s.z);
    }
    out
}

pub fn parse_samples_tsv(text: &str, width: usize) -> Result<Vec<ChdSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(i + 1, "expected `x<TAB>y<TAB>z`"));
            }
            let x =
                BitSet::from_hex(width, f[0]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let y =
                BitSet::from_hex(width, f[1]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let z = f[2]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("invalid target `{}`", f[2])))?;
            Ok(ChdSample { x, y, z })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Closure2VecConfig {
    pub dim: usize,
    pub distance: Distance,
    /// `None` picks [`TargetScale::default_for`].
    pub target: Option<TargetScale>,
    pub max_set_size: usize,
    pub init: Init,
    pub train: TrainConfig,
}

impl Closure2VecConfig {
    pub fn new(dim: usize, distance: Distance, seed: u64) -> Self {
        Closure2VecConfig {
            dim,
            distance,
            target: None,
            max_set_size: 4,
            // the word2vec range leaves a relu trunk with all-zero outputs
            init: Init::Glorot,
            train: TrainConfig {
                epochs: 5,
                lr0: 0.001,
                lr_schedule: LrSchedule::Constant,
                batch_size: 32,
                loss: Loss::Mse,
                seed,
                shuffle: true,
            },
        }
    }

    pub fn target_scale(&self) -> TargetScale {
        self.target
            .unwrap_or(TargetScale::default_for(self.distance))
    }
}

/// Shared trunk `|M| → |G| → |M| → d`, relu after each affine map, applied
/// to both inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SiameseModel {
    net: DenseNet,
    distance: Distance,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    kind: String,
    distance: Distance,
}

impl SiameseModel {
    pub fn new<R: Rng>(
        n_attributes: usize,
        n_objects: usize,
        dim: usize,
        distance: Distance,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config(
                "embedding dimension must be at least 1".into(),
            ));
        }
        let net = DenseNet::new(vec![
            Layer::random(n_attributes, n_objects, true, Activation::Relu, init, rng),
            Layer::random(n_objects, n_attributes, true, Activation::Relu, init, rng),
            Layer::random(n_attributes, dim, true, Activation::Relu, init, rng),
        ])?;
        Ok(SiameseModel { net, distance })
    }

    /// A model whose trunk is an arbitrary net, e.g. for testing.
    pub fn from_net(net: DenseNet, distance: Distance) -> Self {
        SiameseModel { net, distance }
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn distance(&self) -> Distance {
        self.distance
    }

    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn input_width(&self) -> usize {
        self.net.input_dim()
    }

    pub fn embed(&self, b: &AttrSet) -> Result<Vec<f64>> {
        self.net.forward(&b.to_f64())
    }

    pub fn pair_distance(&self, b1: &AttrSet, b2: &AttrSet) -> Result<f64> {
        Ok(self.distance.between(&self.embed(b1)?, &self.embed(b2)?))
    }

    fn sample_loss(&self, s: &ChdSample) -> Result<f64> {
        let d = self.pair_distance(&s.x, &s.y)?;
        Ok((d - s.z) * (d - s.z))
    }

    /// Accumulates the gradient of `(δ(x, y) - z)²`; returns the loss.
    fn accumulate(&self, s: &ChdSample, grads: &mut Gradients) -> Result<f64> {
        let tx = self.net.forward_trace(&s.x.to_f64())?;
        let ty = self.net.forward_trace(&s.y.to_f64())?;
        let d = self.distance.between(tx.output(), ty.output());
        let r = d - s.z;
        let (gu, gv) = self.distance.gradients(tx.output(), ty.output());
        let scale = |g: Vec<f64>| g.into_iter().map(|v| 2.0 * r * v).collect::<Vec<_>>();
        self.net.backward(&tx, &scale(gu), grads);
        self.net.backward(&ty, &scale(gv), grads);
        Ok(r * r)
    }

    pub fn to_text(&self) -> String {
        let header = ModelHeader {
            kind: "closure2vec".into(),
            distance: self.distance,
        };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        out.push_str(&self.net.to_checkpoint());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::parse(1, "empty model file"))?;
        let header: ModelHeader = serde_json::from_str(head)?;
        if header.kind != "closure2vec" {
            return Err(Error::parse(
                1,
                format!("not a closure2vec model: `{}`", header.kind),
            ));
        }
        Ok(SiameseModel {
            net: DenseNet::from_checkpoint(rest)?,
            distance: header.distance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Worst relative error between backpropagated and finite-difference
/// gradients of the siamese loss on one sample.
pub fn siamese_gradient_check(model: &SiameseModel, sample: &ChdSample) -> Result<f64> {
    let mut grads = Gradients::zeros_like(&model.net);
    model.accumulate(sample, &mut grads)?;
    nn::compare_with_finite_differences(&model.net, &grads, |net| {
        SiameseModel::from_net(net.clone(), model.distance).sample_loss(sample)
    })
}

/// Trains a fresh model on `samples`; returns it with the per-epoch mean
/// loss.
pub fn train_closure2vec(
    ctx: &FormalContext,
    samples: &[ChdSample],
    cfg: &Closure2VecConfig,
) -> Result<(SiameseModel, Vec<f64>)> {
    cfg.train.validate()?;
    if !(2..=3).contains(&cfg.dim) {
        warn!("embedding dimension {} is outside the usual 2..=3", cfg.dim);
    }
    if samples.is_empty() {
        return Err(Error::EmptyTraining("no closure Hamming samples".into()));
    }
    let m = ctx.n_attributes();
    if let Some(s) = samples
        .iter()
        .find(|s| s.x.width() != m || s.y.width() != m)
    {
        return Err(Error::Dimension {
            expected: m,
            found: s.x.width().max(s.y.width()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = SiameseModel::new(
        m,
        ctx.n_objects(),
        cfg.dim,
        cfg.distance,
        cfg.init,
        &mut rng,
    )?;
    let trace = fit(&mut model, samples, &cfg.train, &mut rng)?;
    Ok((model, trace))
}

/// Continues training `model` in place.
pub fn fit<R: Rng>(
    model: &mut SiameseModel,
    samples: &[ChdSample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sgd = nn::Sgd::new(cfg, samples.len());
    let mut grads = Gradients::zeros_like(&model.net);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(rng);
        }
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grads.clear();
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += model.accumulate(&samples[i], &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            model
                .net
                .apply(&grads, sgd.lr_at(step), 1.0 / chunk.len() as f64);
            step += 1;
            sum += batch_loss;
        }
        trace.push(sum / samples.len() as f64);
    }
    Ok(trace)
}

/// `set-hex<TAB>v1..vd` for each set.
pub fn embeddings_tsv(model: &SiameseModel, sets: &[AttrSet]) -> Result<String> {
    let mut out = String::new();
    for s in sets {
        out.push_str(&s.to_hex());
        for v in model.embed(s)? {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::stats;
    use proptest::prelude::*;

    #[test]
    fn subset_enumeration() {
        let s = subsets_up_to(3, 1);
        let v: Vec<Vec<usize>> = s.iter().map(BitSet::to_vec).collect();
        assert_eq!(v, vec![vec![], vec![0], vec![1], vec![2]]);
        let s = subsets_up_to(4, 2);
        assert_eq!(s.len(), 11);
        assert_eq!(s[5].to_vec(), vec![0, 1]);
        assert_eq!(s[10].to_vec(), vec![2, 3]);
        assert_eq!(subsets_up_to(3, 3).len(), 8);
        assert_eq!(sample_count(9, 4), 256);
        assert_eq!(sample_count(3, 7), 8);
    }

    #[test]
    fn figure2_samples() {
        let ctx = fixtures::figure2();
        let s = generate_chd_samples(&ctx, 1, TargetScale::Plain, 0, Execution::Sequential);
        assert_eq!(s.len(), 4);
        assert!(s
            .iter()
            .all(|x| x.x.hamming(&x.y) == 1 && (0.0..=1.0).contains(&x.z)));
        // {1}'' = {1,3}, {1,2}'' = {1,2,3}: one position differs
        let x = BitSet::from_indices(3, [0]);
        let y = BitSet::from_indices(3, [0, 1]);
        assert_eq!(ctx.chd(&x, &y).unwrap() as f64 / 3.0, 1.0 / 3.0);
        let clamped = generate_chd_samples(&ctx, 9, TargetScale::Plain, 0, Execution::Sequential);
        assert_eq!(clamped.len(), 8);
    }

    #[test]
    fn samples_are_seeded_and_parallel_safe() {
        let ctx = fixtures::living_beings();
        let a = generate_chd_samples(&ctx, 3, TargetScale::Squared, 7, Execution::Sequential);
        let b = generate_chd_samples(&ctx, 3, TargetScale::Squared, 7, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.len(), sample_count(9, 3));
        let text = samples_tsv(&a);
        assert_eq!(parse_samples_tsv(&text, 9).unwrap(), a);
    }

    #[test]
    fn distances() {
        assert_eq!(Distance::Euclidean.between(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert!(Distance::Cosine.between(&[1.0, 0.0], &[2.0, 0.0]).abs() < 1e-12);
        assert!((Distance::Cosine.between(&[1.0, 0.0], &[-1.0, 0.0]) - 2.0).abs() < 1e-12);
        assert_eq!(Distance::Cosine.between(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
    }

    fn model(seed: u64, distance: Distance) -> SiameseModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SiameseModel::new(9, 8, 3, distance, Init::Glorot, &mut rng).unwrap()
    }

    #[test]
    fn swap_symmetry_and_shape() {
        let m = model(1, Distance::Euclidean);
        let a = BitSet::from_indices(9, [0, 4]);
        let b = BitSet::from_indices(9, [2, 5, 8]);
        assert_eq!(
            m.pair_distance(&a, &b).unwrap(),
            m.pair_distance(&b, &a).unwrap()
        );
        assert_eq!(m.pair_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(m.embed(&a).unwrap().len(), 3);
        assert_eq!(m.embed(&a).unwrap(), m.embed(&a.clone()).unwrap());
    }

    #[test]
    fn siamese_gradients() {
        let ctx = fixtures::living_beings();
        let samples = generate_chd_samples(&ctx, 2, TargetScale::Plain, 3, Execution::Sequential);
        for distance in [Distance::Euclidean, Distance::Cosine] {
            let m = model(4, distance);
            let mut checked = 0;
            for s in samples.iter().skip(5).step_by(7) {
                // skip samples sitting on a relu kink or with a zero output
                let kink = [&s.x, &s.y].iter().any(|b| {
                    let t = m.net().forward_trace(&b.to_f64()).unwrap();
                    t.pre_activations.iter().flatten().any(|z| z.abs() < 1e-4)
                });
                if kink || m.pair_distance(&s.x, &s.y).unwrap() < 1e-6 {
                    continue;
                }
                let err = siamese_gradient_check(&m, s).unwrap();
                assert!(err < 1e-4, "{distance:?}: {err}");
                checked += 1;
            }
            assert!(checked > 3);
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let ctx = fixtures::living_beings();
        let samples = generate_chd_samples(&ctx, 4, TargetScale::Squared, 1, Execution::default());
        let mut drops = 0;
        for seed in 0..5 {
            let cfg = Closure2VecConfig::new(3, Distance::Euclidean, seed);
            let (m1, t1) = train_closure2vec(&ctx, &samples, &cfg).unwrap();
            let (m2, t2) = train_closure2vec(&ctx, &samples, &cfg).unwrap();
            assert_eq!(m1, m2);
            assert_eq!(t1, t2);
            assert_eq!(t1.len(), 5);
            if t1[4] < t1[0] {
                drops += 1;
            }
        }
        assert_eq!(drops, 5);
    }

    #[test]
    fn trained_distances_track_chd() {
        let ctx = fixtures::living_beings();
        let samples = generate_chd_samples(&ctx, 4, TargetScale::Squared, 2, Execution::default());
        let pairs: Vec<(AttrSet, AttrSet)> = {
            let sets = subsets_up_to(9, 2);
            let mut out = Vec::new();
            for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    out.push((sets[i].clone(), sets[j].clone()));
                }
            }
            out
        };
        let truth: Vec<f64> = pairs
            .iter()
            .map(|(a, b)| ctx.chd(a, b).unwrap() as f64)
            .collect();
        for seed in 0..5 {
            let cfg = Closure2VecConfig::new(3, Distance::Euclidean, seed);
            let (m, _) = train_closure2vec(&ctx, &samples, &cfg).unwrap();
            let pred: Vec<f64> = pairs
                .iter()
                .map(|(a, b)| m.pair_distance(a, b).unwrap())
                .collect();
            let rho = stats::spearman(&pred, &truth);
            assert!(rho > 0.0, "seed {seed}: spearman {rho}");
        }
    }

    #[test]
    fn model_round_trip() {
        let m = model(2, Distance::Cosine);
        let back = SiameseModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let sets = subsets_up_to(9, 1);
        let tsv = embeddings_tsv(&m, &sets).unwrap();
        assert_eq!(tsv.lines().count(), 10);
        assert_eq!(tsv.lines().next().unwrap().split('\t').count(), 4);
    }

    proptest! {
        #[test]
        fn sample_invariants(g in 1usize..7, m in 1usize..8, t in 0usize..5, seed in any::<u64>()) {
            let ctx = fixtures::random_context(g, m, 0.5, seed);
            let s = generate_chd_samples(&ctx, t, TargetScale::Plain, seed, Execution::Sequential);
            prop_assert_eq!(s.len(), sample_count(m, t));
            for x in &s {
                prop_assert_eq!(x.x.hamming(&x.y), 1);
                prop_assert!((0.0..=1.0).contains(&x.z));
                prop_assert!(x.x.len() <= t.min(m));
            }
        }
    }
}
