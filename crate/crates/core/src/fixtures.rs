//! Small reference contexts and seeded random contexts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::context::FormalContext;

fn named(objects: &[&str], attributes: &[&str], rows: &[&str]) -> FormalContext {
    let rows = rows
        .iter()
        .map(|r| BitSet::from_bools(&r.chars().map(|c| c == 'X').collect::<Vec<_>>()))
        .collect();
    FormalContext::new(
        objects.iter().map(|s| s.to_string()).collect(),
        attributes.iter().map(|s| s.to_string()).collect(),
        rows,
    )
    .expect("fixture is a valid context")
}

/// Three objects, three attributes; its closure operator admits no affine
/// representation.
pub fn figure2() -> FormalContext {
    named(&["a", "b", "c"], &["1", "2", "3"], &[".XX", "X.X", ".X."])
}

/// The "living beings and water" context, objects `a..h`, attributes `1..9`.
pub fn living_beings() -> FormalContext {
    named(
        &["a", "b", "c", "d", "e", "f", "g", "h"],
        &["1", "2", "3", "4", "5", "6", "7", "8", "9"],
        &[
            "...XXX..X",
            "XXX..X...",
            "XX.X.X.X.",
            "XXXX.X...",
            "X.X..X...",
            "...XXXX..",
            "..XXXXX..",
            "..X.XXX..",
        ],
    )
}

/// Contranominal scale on `n` elements: object `i` has every attribute but
/// `i`, so every attribute set is closed.
pub fn contranominal(n: usize) -> FormalContext {
    assert!(n >= 2);
    let rows = (0..n)
        .map(|i| {
            let mut r = BitSet::full(n);
            r.remove(i);
            r
        })
        .collect();
    FormalContext::new(
        (1..=n).map(|i| format!("g{i}")).collect(),
        (1..=n).map(|i| i.to_string()).collect(),
        rows,
    )
    .unwrap()
}

/// Random context with incidence probability `p`. Empty rows and columns are
/// patched with one random incidence so the result is always valid.
pub fn random_context(objects: usize, attributes: usize, p: f64, seed: u64) -> FormalContext {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<BitSet> = (0..objects)
        .map(|_| {
            let mut r = BitSet::empty(attributes);
            for m in 0..attributes {
                if rng.random_bool(p) {
                    r.insert(m);
                }
            }
            r
        })
        .collect();
    for r in rows.iter_mut() {
        if r.is_empty() {
            r.insert(rng.random_range(0..attributes));
        }
    }
    for m in 0..attributes {
        if !rows.iter().any(|r| r.contains(m)) {
            let g = rng.random_range(0..objects);
            rows[g].insert(m);
        }
    }
    FormalContext::new(
        (1..=objects).map(|i| format!("g{i}")).collect(),
        (1..=attributes).map(|i| i.to_string()).collect(),
        rows,
    )
    .unwrap()
}
