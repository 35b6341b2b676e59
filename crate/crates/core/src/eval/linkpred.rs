//! Co-authorship link prediction from object embeddings.

use std::collections::{BTreeSet, HashSet};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::{self, BinaryMetrics};
use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::fc2vec::{self, Architecture, EmbeddingTable, Fc2VecConfig};
use crate::lattice::enumerate_concepts;
use crate::par::Execution;
use crate::stats::Summary;

pub type Edge = (usize, usize);

fn edge(a: usize, b: usize) -> Edge {
    (a.min(b), a.max(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalSplit {
    pub train_cutoff: i32,
    pub test_start: i32,
    pub test_end: i32,
}

impl TemporalSplit {
    pub fn new(train_cutoff: i32, test_start: i32, test_end: i32) -> Result<Self> {
        if !(train_cutoff < test_start && test_start <= test_end) {
            return Err(Error::Config(format!(
                "temporal split needs cutoff < test start <= test end, got {train_cutoff}, {test_start}, {test_end}"
            )));
        }
        Ok(TemporalSplit {
            train_cutoff,
            test_start,
            test_end,
        })
    }
}

/// Training graph restricted to its largest connected component.
#[derive(Clone, Debug)]
pub struct CoauthorGraph {
    /// Original object index of each node.
    pub nodes: Vec<usize>,
    /// Objects of `nodes` × attributes up to the cutoff that they use.
    pub train_context: FormalContext,
    pub train_edges: Vec<Edge>,
    /// Pairs first linked inside the test window.
    pub test_edges: Vec<Edge>,
    /// Pairs linked at any time (any year).
    pub ever_linked: HashSet<Edge>,
}

fn pairs_sharing(ctx: &FormalContext, attrs: impl Iterator<Item = usize>) -> BTreeSet<Edge> {
    let mut out = BTreeSet::new();
    for m in attrs {
        let members = ctx.col(m).to_vec();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                out.insert(edge(a, b));
            }
        }
    }
    out
}

fn largest_component(n: usize, edges: &BTreeSet<Edge>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut size = vec![0usize; n];
    let roots: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    for &r in &roots {
        size[r] += 1;
    }
    // smallest root wins ties, so the choice is deterministic
    let best = (0..n)
        .max_by_key(|&r| (size[r], std::cmp::Reverse(r)))
        .unwrap_or(0);
    (0..n).filter(|&x| roots[x] == best).collect()
}

pub fn coauthor_graph(ctx: &FormalContext, split: &TemporalSplit) -> Result<CoauthorGraph> {
    let years = ctx
        .attribute_years()
        .ok_or_else(|| Error::MissingYears("the context has no attribute years".into()))?;
    let m = ctx.n_attributes();
    let before: Vec<usize> = (0..m).filter(|&a| years[a] <= split.train_cutoff).collect();
    let window: Vec<usize> = (0..m)
        .filter(|&a| (split.test_start..=split.test_end).contains(&years[a]))
        .collect();
    let train_all = pairs_sharing(ctx, before.iter().copied());
    if train_all.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no co-occurrence up to {}",
            split.train_cutoff
        )));
    }
    let nodes = largest_component(ctx.n_objects(), &train_all);
    let mut local = vec![usize::MAX; ctx.n_objects()];
    for (i, &g) in nodes.iter().enumerate() {
        local[g] = i;
    }
    let to_local = |(a, b): Edge| -> Option<Edge> {
        let (la, lb) = (local[a], local[b]);
        (la != usize::MAX && lb != usize::MAX).then(|| edge(la, lb))
    };
    let train_edges: Vec<Edge> = train_all.iter().filter_map(|&e| to_local(e)).collect();
    let test_edges: Vec<Edge> = pairs_sharing(ctx, window.iter().copied())
        .into_iter()
        .filter(|e| !train_all.contains(e))
        .filter_map(to_local)
        .collect();
    let ever_linked = pairs_sharing(ctx, 0..m)
        .into_iter()
        .filter_map(to_local)
        .collect();
    let attrs: Vec<usize> = before
        .iter()
        .copied()
        .filter(|&a| nodes.iter().any(|&g| ctx.incident(g, a)))
        .collect();
    let train_context = ctx.restrict(&nodes, &attrs);
    Ok(CoauthorGraph {
        nodes,
        train_context,
        train_edges,
        test_edges,
        ever_linked,
    })
}

/// `count` distinct node pairs drawn uniformly from those not in
/// `forbidden`.
pub fn negative_sample_edges(
    n_nodes: usize,
    forbidden: &HashSet<Edge>,
    count: usize,
    seed: u64,
) -> Result<Vec<Edge>> {
    let total = n_nodes * n_nodes.saturating_sub(1) / 2;
    let blocked = forbidden
        .iter()
        .filter(|&&(a, b)| a < b && b < n_nodes)
        .count();
    let available = total - blocked;
    if count > available {
        return Err(Error::InsufficientNonEdges {
            requested: count,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count * 3 > available {
        let mut all: Vec<Edge> = (0..n_nodes)
            .flat_map(|a| (a + 1..n_nodes).map(move |b| (a, b)))
            .filter(|e| !forbidden.contains(e))
            .collect();
        all.shuffle(&mut rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n_nodes);
        let b = rng.random_range(0..n_nodes);
        if a == b {
            continue;
        }
        let e = edge(a, b);
        if !forbidden.contains(&e) && seen.insert(e) {
            out.push(e);
        }
    }
    Ok(out)
}

/// Hadamard product of the endpoint vectors.
pub fn edge_features(table: &EmbeddingTable, (a, b): Edge) -> Vec<f64> {
    table
        .vector(a)
        .iter()
        .zip(table.vector(b))
        .map(|(x, y)| x * y)
        .collect()
}

/// Where node vectors come from in each round.
#[derive(Clone, Debug)]
pub enum EmbeddingSource {
    Object2Vec(Architecture),
    /// Untrained vectors, uniform in `[-1, 1]^d`.
    Random,
    /// Externally produced vectors keyed by object name.
    External(EmbeddingTable),
}

impl EmbeddingSource {
    pub fn label(&self) -> String {
        match self {
            EmbeddingSource::Object2Vec(a) => format!("o2v-{a}"),
            EmbeddingSource::Random => "random".into(),
            EmbeddingSource::External(_) => "external".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkPredictionConfig {
    pub split: TemporalSplit,
    pub dim: usize,
    pub rounds: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub c_grid: Vec<f64>,
    pub seed: u64,
}

impl LinkPredictionConfig {
    pub fn new(split: TemporalSplit, dim: usize, seed: u64) -> Self {
        LinkPredictionConfig {
            split,
            dim,
            rounds: 30,
            epochs: 200,
            lr0: 1.0,
            c_grid: logreg::C_GRID.to_vec(),
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: usize,
    pub c: f64,
    pub metrics: BinaryMetrics,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkPredictionReport {
    pub method: String,
    pub nodes: usize,
    pub train_positive: usize,
    pub train_examples: usize,
    pub test_positive: usize,
    pub test_examples: usize,
    pub rounds: Vec<RoundResult>,
    pub recall: Summary,
    pub precision: Summary,
    pub f1: Summary,
    pub warnings: Vec<String>,
}

/// Balanced train/test edge sets, sampled once per experiment.
#[derive(Clone, Debug)]
pub struct EdgeSets {
    pub train: Vec<(Edge, bool)>,
    pub test: Vec<(Edge, bool)>,
}

pub fn edge_sets(graph: &CoauthorGraph, seed: u64) -> Result<EdgeSets> {
    let n = graph.nodes.len();
    let train_pos: HashSet<Edge> = graph.train_edges.iter().copied().collect();
    let train_neg = negative_sample_edges(n, &train_pos, graph.train_edges.len(), seed)?;
    let test_neg = negative_sample_edges(
        n,
        &graph.ever_linked,
        graph.test_edges.len(),
        seed.wrapping_add(1),
    )?;
    let label = |pos: &[Edge], neg: Vec<Edge>| -> Vec<(Edge, bool)> {
        pos.iter()
            .map(|&e| (e, true))
            .chain(neg.into_iter().map(|e| (e, false)))
            .collect()
    };
    Ok(EdgeSets {
        train: label(&graph.train_edges, train_neg),
        test: label(&graph.test_edges, test_neg),
    })
}

fn round_table(
    graph: &CoauthorGraph,
    concepts: &[crate::lattice::Concept],
    source: &EmbeddingSource,
    cfg: &LinkPredictionConfig,
    seed: u64,
) -> Result<EmbeddingTable> {
    let ctx = &graph.train_context;
    match source {
        EmbeddingSource::Object2Vec(arch) => {
            let mut fc = Fc2VecConfig::new(*arch, cfg.dim, cfg.epochs, seed);
            fc.train.lr0 = cfg.lr0;
            Ok(fc2vec::train_object2vec(ctx, concepts, &fc)?.table)
        }
        EmbeddingSource::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vectors = (0..ctx.n_objects())
                .map(|_| (0..cfg.dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect();
            EmbeddingTable::new(ctx.objects().to_vec(), vectors)
        }
        EmbeddingSource::External(t) => t.aligned_to(ctx.objects()),
    }
}

pub fn link_prediction_experiment(
    ctx: &FormalContext,
    source: &EmbeddingSource,
    cfg: &LinkPredictionConfig,
    exec: Execution,
) -> Result<LinkPredictionReport> {
    if cfg.rounds == 0 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    let graph = coauthor_graph(ctx, &cfg.split)?;
    let mut warnings = Vec::new();
    if graph.test_edges.is_empty() {
        return Err(Error::InvalidInput(
            "no test co-occurrences in the test window".into(),
        ));
    }
    if graph.nodes.len() < ctx.n_objects() {
        info!(
            "restricted to the largest connected component: {} of {} objects",
            graph.nodes.len(),
            ctx.n_objects()
        );
    }
    let sets = edge_sets(&graph, cfg.seed)?;
    let concepts = match source {
        EmbeddingSource::Object2Vec(_) => enumerate_concepts(&graph.train_context),
        _ => Vec::new(),
    };
    let rounds: Vec<Result<RoundResult>> = exec.map_range(cfg.rounds, |r| {
        let seed = cfg.seed.wrapping_add(1000 + r as u64);
        let table = round_table(&graph, &concepts, source, cfg, seed)?;
        let (xtr, ytr): (Vec<Vec<f64>>, Vec<bool>) = sets
            .train
            .iter()
            .map(|&(e, l)| (edge_features(&table, e), l))
            .unzip();
        let (xte, yte): (Vec<Vec<f64>>, Vec<bool>) = sets
            .test
            .iter()
            .map(|&(e, l)| (edge_features(&table, e), l))
            .unzip();
        let model = logreg::fit_cv(&xtr, &ytr, &cfg.c_grid, seed)?;
        Ok(RoundResult {
            round: r,
            c: model.c,
            metrics: BinaryMetrics::evaluate(&model, &xte, &yte),
        })
    });
    let rounds: Vec<RoundResult> = rounds.into_iter().collect::<Result<_>>()?;
    let pick = |f: fn(&BinaryMetrics) -> f64| {
        Summary::of(&rounds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    if sets.test.len() < 20 {
        let w = format!("only {} test examples; scores are noisy", sets.test.len());
        warn!("{w}");
        warnings.push(w);
    }
    Ok(LinkPredictionReport {
        method: source.label(),
        nodes: graph.nodes.len(),
        train_positive: graph.train_edges.len(),
        train_examples: sets.train.len(),
        test_positive: graph.test_edges.len(),
        test_examples: sets.test.len(),
        recall: pick(|m| m.recall),
        precision: pick(|m| m.precision),
        f1: pick(|m| m.f1),
        rounds,
        warnings,
    })
}
