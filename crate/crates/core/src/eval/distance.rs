//! Distances between embedded concepts and between embedded implication
//! parts.

use std::collections::HashSet;

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::{AttrSet, BitSet};
use crate::closure2vec::SiameseModel;
use crate::error::{Error, Result};
use crate::lattice::{ConceptLattice, Implication};
use crate::par::Execution;
use crate::stats::{mean, sample_std};

/// Default cap on sampled non-cover pairs.
pub const NON_COVER_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub label: String,
    pub mean: f64,
    pub stdev: f64,
    pub pairs: usize,
}

impl DistanceStats {
    fn of(label: &str, xs: &[f64]) -> Self {
        DistanceStats {
            label: label.into(),
            mean: if xs.is_empty() { 0.0 } else { mean(xs) },
            stdev: sample_std(xs),
            pairs: xs.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringReport {
    pub cr: DistanceStats,
    pub non_cr: DistanceStats,
    pub non_cover_population: u64,
    /// True when non-cover pairs were sampled (with replacement) instead of
    /// enumerated.
    pub non_cover_sampled: bool,
    pub warnings: Vec<String>,
}

fn embed_all(model: &SiameseModel, sets: &[AttrSet], exec: Execution) -> Result<Vec<Vec<f64>>> {
    exec.map(sets, |s| model.embed(s)).into_iter().collect()
}

pub fn covering_distance_experiment(
    model: &SiameseModel,
    lattice: &ConceptLattice,
    sample_cap: usize,
    seed: u64,
    exec: Execution,
) -> Result<CoveringReport> {
    let n = lattice.concepts.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two concepts".into()));
    }
    let intents: Vec<AttrSet> = lattice.concepts.iter().map(|c| c.intent.clone()).collect();
    let points = embed_all(model, &intents, exec)?;
    let delta = model.distance();
    let dist = |a: usize, b: usize| delta.between(&points[a], &points[b]);

    let cr: Vec<f64> = exec.map(&lattice.covers, |&(a, b)| dist(a, b));
    let covers: HashSet<(usize, usize)> = lattice
        .covers
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    let population = (n as u64 * (n as u64 - 1)) / 2 - covers.len() as u64;
    let mut warnings = Vec::new();
    let (pairs, sampled): (Vec<(usize, usize)>, bool) = if population <= sample_cap as u64 {
        let all = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|p| !covers.contains(p))
            .collect();
        (all, false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(sample_cap);
        while out.len() < sample_cap {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let p = (a.min(b), a.max(b));
            if a != b && !covers.contains(&p) {
                out.push(p);
            }
        }
        let w = format!("non-cover pairs sampled: {sample_cap} of {population}");
        warn!("{w}");
        warnings.push(w);
        (out, true)
    };
    let non_cr: Vec<f64> = exec.map(&pairs, |&(a, b)| dist(a, b));
    Ok(CoveringReport {
        cr: DistanceStats::of("CR", &cr),
        non_cr: DistanceStats::of("Non-CR", &non_cr),
        non_cover_population: population,
        non_cover_sampled: sampled,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub s_imp: DistanceStats,
    pub non_s_imp: DistanceStats,
    pub imp: DistanceStats,
    pub non_imp: DistanceStats,
    pub warnings: Vec<String>,
}

fn random_set<R: Rng>(m: usize, size: usize, rng: &mut R) -> AttrSet {
    BitSet::from_indices(m, index::sample(rng, m, size.min(m)).into_iter())
}

/// For each base implication `P → P″`, with `C = P″ ∖ P`:
/// S-Imp `δ(P, {c})` for `c ∈ C`, Non-S-Imp `δ(P, {m})` for `m ∉ P″`,
/// Imp `δ(P, C)`, Non-Imp `δ(X, Y)` for random `|X| = |P|`, `|Y| = |C|`.
pub fn implication_distance_experiment(
    model: &SiameseModel,
    base: &[Implication],
    seed: u64,
    exec: Execution,
) -> Result<ImplicationReport> {
    let m = model.input_width();
    let mut warnings = Vec::new();
    if base.is_empty() {
        warn!("empty implication base");
        warnings.push("empty implication base".to_string());
    }
    let singletons: Vec<AttrSet> = (0..m).map(|a| BitSet::from_indices(m, [a])).collect();
    let single = embed_all(model, &singletons, exec)?;
    let delta = model.distance();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randoms: Vec<(AttrSet, AttrSet)> = base
        .iter()
        .map(|imp| {
            let c = imp.conclusion.difference(&imp.premise);
            (
                random_set(m, imp.premise.len(), &mut rng),
                random_set(m, c.len(), &mut rng),
            )
        })
        .collect();
    type Parts = (Vec<f64>, Vec<f64>, f64, f64);
    let parts: Vec<Result<Parts>> = exec.map_range(base.len(), |i| {
        let imp = &base[i];
        let c = imp.conclusion.difference(&imp.premise);
        let p = model.embed(&imp.premise)?;
        let s: Vec<f64> = c.iter().map(|a| delta.between(&p, &single[a])).collect();
        let ns: Vec<f64> = (0..m)
            .filter(|&a| !imp.conclusion.contains(a))
            .map(|a| delta.between(&p, &single[a]))
            .collect();
        let imp_d = delta.between(&p, &model.embed(&c)?);
        let (x, y) = &randoms[i];
        let non = model.pair_distance(x, y)?;
        Ok((s, ns, imp_d, non))
    });
    let (mut s, mut ns, mut im, mut nim) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in parts {
        let (a, b, c, d) = r?;
        s.extend(a);
        ns.extend(b);
        im.push(c);
        nim.push(d);
    }
    Ok(ImplicationReport {
        s_imp: DistanceStats::of("S-Imp", &s),
        non_s_imp: DistanceStats::of("Non-S-Imp", &ns),
        imp: DistanceStats::of("Imp", &im),
        non_imp: DistanceStats::of("Non-Imp", &nim),
        warnings,
    })
}
