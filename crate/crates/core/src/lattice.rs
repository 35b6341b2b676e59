//! Concept enumeration, the covering relation of the concept lattice and the
//! canonical (Duquenne-Guigues) base.
//!
//! Both concepts and pseudo-intents come out of NextClosure, so every list
//! here is in lectic order of intents (premises) and fully deterministic.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use log::info;

use crate::bitset::{AttrSet, BitSet, ObjSet};
use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::par::Execution;

const PROGRESS_EVERY: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Concept {
    pub extent: ObjSet,
    pub intent: AttrSet,
}

impl Concept {
    /// `self ≤ other` in the concept order (extent inclusion).
    pub fn leq(&self, other: &Concept) -> bool {
        self.extent.is_subset(&other.extent)
    }
}

pub fn concept_order_leq(c1: &Concept, c2: &Concept) -> bool {
    c1.leq(c2)
}

/// The lectic successor of `current` among the sets closed under `close`,
/// or `None` if `current` is the last one.
pub fn next_closure<F>(current: &BitSet, close: F) -> Option<BitSet>
where
    F: Fn(&BitSet) -> BitSet,
{
    let mut a = current.clone();
    for i in (0..a.width()).rev() {
        if a.contains(i) {
            a.remove(i);
            continue;
        }
        // here `a` is `current ∩ {0..i-1}`
        let mut b = a.clone();
        b.insert(i);
        let c = close(&b);
        if c.agrees_below(&a, i) {
            return Some(c);
        }
    }
    None
}

/// All formal concepts, intents in lectic order.
pub fn enumerate_concepts(ctx: &FormalContext) -> Vec<Concept> {
    let close = |b: &BitSet| ctx.closure_attrs_unchecked(b);
    let mut out = Vec::new();
    let mut intent = close(&BitSet::empty(ctx.n_attributes()));
    loop {
        let extent = ctx.derive_objs_unchecked(&intent);
        out.push(Concept {
            extent,
            intent: intent.clone(),
        });
        if out.len() % PROGRESS_EVERY == 0 {
            info!("enumerated {} concepts", out.len());
        }
        match next_closure(&intent, close) {
            Some(next) => intent = next,
            None => break,
        }
    }
    out
}

/// Cover edges `(lower, upper)` of an arbitrary list of concepts, by
/// reducing the extent-inclusion order. Quadratic in the list length; use
/// [`covering_relation_in`] for full lattices of large contexts.
pub fn covering_relation(concepts: &[Concept]) -> Result<Vec<(usize, usize)>> {
    covering_relation_with(concepts, Execution::default())
}

pub fn covering_relation_with(
    concepts: &[Concept],
    exec: Execution,
) -> Result<Vec<(usize, usize)>> {
    check_distinct(concepts)?;
    let per_concept = exec.map_range(concepts.len(), |i| {
        let lower = &concepts[i].extent;
        let mut uppers: Vec<usize> = (0..concepts.len())
            .filter(|&j| lower.is_proper_subset(&concepts[j].extent))
            .collect();
        uppers.sort_by_key(|&j| (concepts[j].extent.len(), j));
        let mut covers: Vec<usize> = Vec::new();
        for j in uppers {
            let ext = &concepts[j].extent;
            if !covers
                .iter()
                .any(|&k| concepts[k].extent.is_proper_subset(ext))
            {
                covers.push(j);
            }
        }
        covers.sort_unstable();
        covers.into_iter().map(move |j| (i, j)).collect::<Vec<_>>()
    });
    Ok(per_concept.into_iter().flatten().collect())
}

fn check_distinct(concepts: &[Concept]) -> Result<()> {
    let mut seen = HashSet::with_capacity(concepts.len());
    for (i, c) in concepts.iter().enumerate() {
        if !seen.insert(&c.extent) {
            return Err(Error::InvalidInput(format!(
                "duplicate concept at index {i} (extent {})",
                c.extent.to_hex()
            )));
        }
    }
    Ok(())
}

/// Cover edges `(lower, upper)` of the full concept lattice of `ctx`, found
/// by per-concept neighbour search. `concepts` must be the complete concept
/// list of `ctx` in lectic order, as returned by [`enumerate_concepts`].
pub fn covering_relation_in(
    ctx: &FormalContext,
    concepts: &[Concept],
    exec: Execution,
) -> Result<Vec<(usize, usize)>> {
    if let Some(w) = concepts
        .windows(2)
        .position(|w| w[0].intent.lectic_cmp(&w[1].intent) != Ordering::Less)
    {
        return Err(Error::InvalidInput(format!(
            "concepts not in strict lectic order at index {}",
            w + 1
        )));
    }
    let lookup = |intent: &AttrSet| -> Result<usize> {
        concepts
            .binary_search_by(|c| c.intent.lectic_cmp(intent))
            .map_err(|_| {
                Error::InvalidInput(format!(
                    "intent {} is not in the concept list",
                    intent.to_hex()
                ))
            })
    };
    // Search over whichever side is narrower.
    let by_attributes = ctx.n_attributes() <= ctx.n_objects();
    let per_concept = exec.map_range(concepts.len(), |i| -> Result<Vec<(usize, usize)>> {
        let c = &concepts[i];
        let neighbours = if by_attributes {
            lower_neighbour_intents(ctx, c)
        } else {
            upper_neighbour_intents(ctx, c)
        };
        let mut edges = Vec::with_capacity(neighbours.len());
        for n in neighbours {
            let j = lookup(&n)?;
            edges.push(if by_attributes { (j, i) } else { (i, j) });
        }
        Ok(edges)
    });
    let mut edges = Vec::new();
    for e in per_concept {
        edges.extend(e?);
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Lower neighbours via attributes outside the intent.
fn lower_neighbour_intents(ctx: &FormalContext, c: &Concept) -> Vec<AttrSet> {
    let candidates = c.intent.complement();
    let mut min = candidates.clone();
    let mut out = Vec::new();
    for m in &candidates {
        let mut extent = c.extent.clone();
        extent.intersect_with(ctx.col(m));
        let intent = ctx.derive_attrs_unchecked(&extent);
        let mut grown = intent.difference(&c.intent);
        grown.remove(m);
        if grown.is_disjoint(&min) {
            out.push(intent);
        } else {
            min.remove(m);
        }
    }
    out
}

/// Upper neighbours via objects outside the extent.
fn upper_neighbour_intents(ctx: &FormalContext, c: &Concept) -> Vec<AttrSet> {
    let candidates = c.extent.complement();
    let mut min = candidates.clone();
    let mut out = Vec::new();
    for g in &candidates {
        let mut intent = c.intent.clone();
        intent.intersect_with(ctx.row(g));
        let extent = ctx.derive_objs_unchecked(&intent);
        let mut grown = extent.difference(&c.extent);
        grown.remove(g);
        if grown.is_disjoint(&min) {
            out.push(intent);
        } else {
            min.remove(g);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ConceptLattice {
    pub concepts: Vec<Concept>,
    pub covers: Vec<(usize, usize)>,
}

impl ConceptLattice {
    pub fn build(ctx: &FormalContext, exec: Execution) -> Result<Self> {
        let concepts = enumerate_concepts(ctx);
        info!("{} concepts; computing covering relation", concepts.len());
        let covers = covering_relation_in(ctx, &concepts, exec)?;
        Ok(ConceptLattice { concepts, covers })
    }
}

/// An implication `premise → conclusion`; the conclusion is stored as the
/// full closure of the premise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Implication {
    pub premise: AttrSet,
    pub conclusion: AttrSet,
}

impl Implication {
    /// Premise ∪ conclusion.
    pub fn attributes(&self) -> AttrSet {
        self.premise.union(&self.conclusion)
    }

    /// True if every object having the premise has the conclusion.
    pub fn holds_in(&self, ctx: &FormalContext) -> bool {
        self.conclusion
            .is_subset(&ctx.closure_attrs_unchecked(&self.premise))
    }
}

/// Smallest superset of `set` closed under `implications` (premises must be
/// subsets, not necessarily proper).
pub fn implication_closure(implications: &[Implication], set: &AttrSet) -> AttrSet {
    close_under(implications, set, false)
}

fn close_under(implications: &[Implication], set: &AttrSet, proper: bool) -> AttrSet {
    let mut out = set.clone();
    let mut used = vec![false; implications.len()];
    loop {
        let mut changed = false;
        for (k, imp) in implications.iter().enumerate() {
            if used[k] || !imp.premise.is_subset(&out) || (proper && imp.premise == out) {
                continue;
            }
            used[k] = true;
            if !imp.conclusion.is_subset(&out) {
                out.union_with(&imp.conclusion);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

/// The canonical base: premises are the pseudo-intents in lectic order,
/// conclusions their closures.
pub fn canonical_base(ctx: &FormalContext) -> Vec<Implication> {
    let mut base: Vec<Implication> = Vec::new();
    let mut current = BitSet::empty(ctx.n_attributes());
    let mut visited = 0usize;
    loop {
        let closed = ctx.closure_attrs_unchecked(&current);
        if closed != current {
            base.push(Implication {
                premise: current.clone(),
                conclusion: closed,
            });
        }
        visited += 1;
        if visited % PROGRESS_EVERY == 0 {
            info!(
                "canonical base: {visited} closed sets visited, {} implications",
                base.len()
            );
        }
        match next_closure(&current, |b| close_under(&base, b, true)) {
            Some(next) => current = next,
            None => break,
        }
    }
    base
}

fn names(ctx_names: &[String], set: &BitSet) -> String {
    if set.is_empty() {
        return "{}".to_string();
    }
    set.iter()
        .map(|i| ctx_names[i].as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// `index<TAB>extent-hex<TAB>intent-hex` per concept.
pub fn concepts_tsv(concepts: &[Concept]) -> String {
    let mut out = String::new();
    for (i, c) in concepts.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}\t{}", c.extent.to_hex(), c.intent.to_hex());
    }
    out
}

/// `lower<TAB>upper` per cover edge.
pub fn covers_tsv(covers: &[(usize, usize)]) -> String {
    let mut out = String::new();
    for (a, b) in covers {
        let _ = writeln!(out, "{a}\t{b}");
    }
    out
}

/// `premise -> conclusion` per implication, attribute names joined by `", "`;
/// the conclusion is written without the premise attributes.
pub fn base_text(ctx: &FormalContext, base: &[Implication]) -> String {
    let mut out = String::new();
    for imp in base {
        let _ = writeln!(
            out,
            "{} -> {}",
            names(ctx.attributes(), &imp.premise),
            names(ctx.attributes(), &imp.conclusion.difference(&imp.premise))
        );
    }
    out
}
