//! k-means++ clustering of attribute embeddings and the intra-cluster
//! implication ratio.

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::fc2vec::{self, Architecture, Fc2VecConfig};
use crate::lattice::{Concept, Implication};
use crate::par::Execution;
use crate::stats::{mean, Summary};

pub const KMEANS_RESTARTS: usize = 10;
const LLOYD_MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidInput(format!(
                "cluster id {bad} outside 0..{k}"
            )));
        }
        Ok(Clustering { assignment, k })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.assignment {
            s[c] += 1;
        }
        s
    }

    pub fn max_size(&self) -> usize {
        self.sizes().into_iter().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub clustering: Clustering,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[idx].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centroids.last().unwrap()));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (j, _) = nearest(p, &centroids);
            if assignment[i] != j {
                assignment[i] = j;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        // an empty cluster takes the point farthest from its centroid
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..points.len())
                    .filter(|&i| counts[assignment[i]] > 1)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[assignment[a]])
                            .total_cmp(&sq_dist(&points[b], &centroids[assignment[b]]))
                    });
                if let Some(i) = far {
                    counts[assignment[i]] -= 1;
                    assignment[i] = j;
                    counts[j] = 1;
                    changed = true;
                }
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignment) {
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let inertia = points
            .iter()
            .zip(&assignment)
            .map(|(p, &a)| sq_dist(p, &centroids[a]))
            .sum();
        trace.push(inertia);
        if !changed {
            break;
        }
    }
    KMeansResult {
        clustering: Clustering { assignment, k },
        inertia: *trace.last().unwrap_or(&0.0),
        centroids,
        trace,
    }
}

/// Lloyd iterations from k-means++ seeds; the best of ten restarts by
/// inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} must be between 1 and the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points differ in dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..KMEANS_RESTARTS {
        let init = plus_plus_init(points, k, &mut rng);
        let r = lloyd(points, init);
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn is_intra(imp: &Implication, clustering: &Clustering) -> bool {
    let attrs = imp.attributes();
    let mut ids = attrs.iter().map(|m| clustering.assignment[m]);
    match ids.next() {
        Some(first) => ids.all(|c| c == first),
        None => true,
    }
}

/// Fraction of implications whose premise ∪ conclusion lies in one cluster.
/// An empty base gives 0 with a warning.
pub fn intra_cluster_ratio(base: &[Implication], clustering: &Clustering) -> f64 {
    if base.is_empty() {
        warn!("empty implication base; intra-cluster ratio defined as 0");
        return 0.0;
    }
    base.iter().filter(|i| is_intra(i, clustering)).count() as f64 / base.len() as f64
}

/// Ratios of `rounds` random relabelings with the same cluster sizes.
pub fn random_clustering_baseline(
    clustering: &Clustering,
    base: &[Implication],
    rounds: usize,
    seed: u64,
) -> Summary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = clustering.assignment.clone();
    let ratios: Vec<f64> = (0..rounds)
        .map(|_| {
            labels.shuffle(&mut rng);
            let c = Clustering {
                assignment: labels.clone(),
                k: clustering.k,
            };
            intra_cluster_ratio(base, &c)
        })
        .collect();
    Summary::of(&ratios)
}

/// k-means on the 0/1 object columns of the attributes.
pub fn naive_clustering(ctx: &FormalContext, k: usize, seed: u64) -> Result<Clustering> {
    let points: Vec<Vec<f64>> = ctx.columns().iter().map(|c| c.to_f64()).collect();
    Ok(kmeans(&points, k, seed)?.clustering)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusteringConfig {
    pub dim: usize,
    pub k_set: Vec<usize>,
    pub rounds: usize,
    pub archs: Vec<Architecture>,
    pub epochs: usize,
    pub lr0: f64,
    pub random_rounds: usize,
    pub seed: u64,
}

impl ClusteringConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        ClusteringConfig {
            dim,
            k_set: vec![2, 5, 10],
            rounds: 20,
            archs: vec![Architecture::SkipGram, Architecture::Cbow],
            epochs: 5,
            lr0: 1.0,
            random_rounds: 50,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusteringRound {
    pub round: usize,
    pub method: String,
    pub k: usize,
    pub ratio: f64,
    pub random_mean: f64,
    pub max_cluster_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub method: String,
    pub k: usize,
    pub ratio: Summary,
    /// Mean over rounds of each round's random-baseline mean.
    pub random: Summary,
    pub mean_max_cluster_size: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub base_size: usize,
    pub n_attributes: usize,
    pub rounds: Vec<ClusteringRound>,
    pub summary: Vec<ClusteringSummary>,
    pub warnings: Vec<String>,
}

pub fn clustering_experiment(
    ctx: &FormalContext,
    concepts: &[Concept],
    base: &[Implication],
    cfg: &ClusteringConfig,
    exec: Execution,
) -> Result<ClusteringReport> {
    let m = ctx.n_attributes();
    if let Some(&k) = cfg.k_set.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::Config(format!("k = {k} is not in 1..={m}")));
    }
    let mut warnings = Vec::new();
    if base.is_empty() {
        warnings.push("empty implication base; all ratios are 0".to_string());
    }
    let per_round: Vec<Result<Vec<ClusteringRound>>> = exec.map_range(cfg.rounds, |r| {
        let seed = cfg.seed.wrapping_add(r as u64 * 7919);
        let mut out = Vec::new();
        for (ai, &arch) in cfg.archs.iter().enumerate() {
            let mut fc = Fc2VecConfig::new(arch, cfg.dim, cfg.epochs, seed.wrapping_add(ai as u64));
            fc.train.lr0 = cfg.lr0;
            let table = fc2vec::train_attribute2vec(ctx, concepts, &fc)?.table;
            for &k in &cfg.k_set {
                let c = kmeans(&table.vectors, k, seed)?.clustering;
                out.push(ClusteringRound {
                    round: r,
                    method: arch.to_string(),
                    k,
                    ratio: intra_cluster_ratio(base, &c),
                    random_mean: random_clustering_baseline(&c, base, cfg.random_rounds, seed).mean,
                    max_cluster_size: c.max_size(),
                });
            }
        }
        for &k in &cfg.k_set {
            let c = naive_clustering(ctx, k, seed)?;
            out.push(ClusteringRound {
                round: r,
                method: "naive".into(),
                k,
                ratio: intra_cluster_ratio(base, &c),
                random_mean: random_clustering_baseline(&c, base, cfg.random_rounds, seed).mean,
                max_cluster_size: c.max_size(),
            });
        }
        Ok(out)
    });
    let rounds: Vec<ClusteringRound> = per_round
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut methods: Vec<String> = cfg.archs.iter().map(|a| a.to_string()).collect();
    methods.push("naive".into());
    let mut summary = Vec::new();
    for method in &methods {
        for &k in &cfg.k_set {
            let rs: Vec<&ClusteringRound> = rounds
                .iter()
                .filter(|r| &r.method == method && r.k == k)
                .collect();
            let ratio: Vec<f64> = rs.iter().map(|r| r.ratio).collect();
            let random: Vec<f64> = rs.iter().map(|r| r.random_mean).collect();
            let sizes: Vec<f64> = rs.iter().map(|r| r.max_cluster_size as f64).collect();
            summary.push(ClusteringSummary {
                method: method.clone(),
                k,
                ratio: Summary::of(&ratio),
                random: Summary::of(&random),
                mean_max_cluster_size: mean(&sizes),
            });
        }
    }
    Ok(ClusteringReport {
        base_size: base.len(),
        n_attributes: m,
        rounds,
        summary,
        warnings,
    })
}
