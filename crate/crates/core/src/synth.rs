//! Seeded synthetic data sets standing in for the large public corpora:
//! a latent-class nominal table (Mushroom-like), a sparse context with
//! attribute groups (knowledge-graph-like), and a temporal co-authorship
//! context with communities.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::context::{FormalContext, NominalTable};
use crate::error::Result;

/// Rows drawn from `classes` latent classes. Column 0 is `class` (`e`/`p`,
/// by latent class parity); column `c+1` has `values[c]` levels, and each
/// latent class takes its preferred level with probability `purity`.
pub fn latent_class_table(
    rows: usize,
    values: &[usize],
    classes: usize,
    purity: f64,
    seed: u64,
) -> Result<NominalTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preferred: Vec<Vec<usize>> = (0..classes)
        .map(|_| values.iter().map(|&v| rng.random_range(0..v)).collect())
        .collect();
    let mut columns = vec!["class".to_string()];
    columns.extend((0..values.len()).map(|c| format!("f{}", c + 1)));
    let level = |v: usize| char::from(b'a' + v as u8).to_string();
    let table = (0..rows)
        .map(|_| {
            let k = rng.random_range(0..classes);
            let mut row = vec![if k % 2 == 0 { "e" } else { "p" }.to_string()];
            for (c, &n) in values.iter().enumerate() {
                let v = if rng.random_bool(purity) {
                    preferred[k][c]
                } else {
                    rng.random_range(0..n)
                };
                row.push(level(v));
            }
            row
        })
        .collect();
    NominalTable::new(columns, table)
}

/// `objects` rows over `groups × per_group` attributes. Each object picks a
/// home group and takes `min..=max` attributes from it, plus each foreign
/// attribute with probability `noise`.
pub fn grouped_context(
    objects: usize,
    groups: usize,
    per_group: usize,
    take: (usize, usize),
    noise: f64,
    seed: u64,
) -> FormalContext {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = groups * per_group;
    // Zipf-like popularity inside each group keeps the lattice sparse.
    let weights: Vec<f64> = (0..per_group).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let mut rows: Vec<BitSet> = (0..objects)
        .map(|_| {
            let g = rng.random_range(0..groups);
            let n = rng.random_range(take.0..=take.1).min(per_group);
            let mut row = BitSet::empty(m);
            let mut cand: Vec<usize> = (0..per_group).collect();
            for _ in 0..n {
                let pick = *cand
                    .choose_weighted(&mut rng, |&i| weights[i])
                    .expect("non-empty candidates");
                cand.retain(|&i| i != pick);
                row.insert(g * per_group + pick);
            }
            for a in 0..m {
                if a / per_group != g && rng.random_bool(noise) {
                    row.insert(a);
                }
            }
            row
        })
        .collect();
    patch_empty(&mut rows, m, &mut rng);
    FormalContext::new(
        (1..=objects).map(|i| format!("o{i}")).collect(),
        (0..m)
            .map(|a| format!("g{}_{}", a / per_group + 1, a % per_group + 1))
            .collect(),
        rows,
    )
    .expect("patched context is valid")
}

fn patch_empty(rows: &mut [BitSet], m: usize, rng: &mut ChaCha8Rng) {
    for r in rows.iter_mut() {
        if r.is_empty() {
            r.insert(rng.random_range(0..m));
        }
    }
    for a in 0..m {
        if !rows.iter().any(|r| r.contains(a)) {
            let g = rng.random_range(0..rows.len());
            rows[g].insert(a);
        }
    }
}

/// Parameters of [`temporal_communities`].
#[derive(Clone, Debug)]
pub struct TemporalSpec {
    pub authors: usize,
    pub communities: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub papers_per_year: usize,
    /// Inclusive author-count range per paper.
    pub team: (usize, usize),
    /// Probability that a co-author comes from another community.
    pub cross: f64,
}

impl TemporalSpec {
    /// The 20-author toy fixture.
    pub fn toy() -> Self {
        TemporalSpec {
            authors: 20,
            communities: 4,
            first_year: 2010,
            last_year: 2019,
            papers_per_year: 3,
            team: (2, 3),
            cross: 0.08,
        }
    }

    /// A larger instance used for the link-prediction sanity check.
    pub fn standard() -> Self {
        TemporalSpec {
            authors: 90,
            communities: 9,
            first_year: 2008,
            last_year: 2019,
            papers_per_year: 14,
            team: (2, 4),
            cross: 0.05,
        }
    }
}

/// Authors × papers with a year per paper. Teams are drawn mostly from one
/// community.
pub fn temporal_communities(spec: &TemporalSpec, seed: u64) -> FormalContext {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.authors;
    let community: Vec<usize> = (0..n).map(|a| a % spec.communities).collect();
    let members: Vec<Vec<usize>> = (0..spec.communities)
        .map(|c| (0..n).filter(|&a| community[a] == c).collect())
        .collect();
    let mut papers: Vec<(i32, Vec<usize>)> = Vec::new();
    for year in spec.first_year..=spec.last_year {
        for _ in 0..spec.papers_per_year {
            let c = rng.random_range(0..spec.communities);
            let size = rng.random_range(spec.team.0..=spec.team.1);
            let mut team: Vec<usize> = Vec::with_capacity(size);
            while team.len() < size {
                let pool = if rng.random_bool(spec.cross) {
                    &members[rng.random_range(0..spec.communities)]
                } else {
                    &members[c]
                };
                let a = *pool.choose(&mut rng).expect("non-empty community");
                if !team.contains(&a) {
                    team.push(a);
                }
            }
            papers.push((year, team));
        }
    }
    // every author writes at least one paper
    for a in 0..n {
        if !papers.iter().any(|(_, t)| t.contains(&a)) {
            let own: Vec<usize> = (0..papers.len())
                .filter(|&p| papers[p].1.iter().any(|&b| community[b] == community[a]))
                .collect();
            let p = *own.choose(&mut rng).unwrap_or(&0);
            papers[p].1.push(a);
        }
    }
    papers.shuffle(&mut rng);
    papers.sort_by_key(|(y, _)| *y);
    let rows = (0..n)
        .map(|a| {
            BitSet::from_indices(
                papers.len(),
                papers
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, t))| t.contains(&a))
                    .map(|(p, _)| p),
            )
        })
        .collect();
    let mut ctx = FormalContext::new(
        (1..=n).map(|a| format!("author{a:03}")).collect(),
        (1..=papers.len()).map(|p| format!("paper{p:04}")).collect(),
        rows,
    )
    .expect("every author and paper is incident");
    ctx.set_attribute_years(papers.iter().map(|(y, _)| *y).collect())
        .expect("one year per paper");
    ctx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{scale_nominal, EmptyPolicy, MissingValues};

    #[test]
    fn latent_table_shape() {
        let t = latent_class_table(50, &[3, 4, 2], 4, 0.8, 1).unwrap();
        assert_eq!(t.columns.len(), 4);
        assert_eq!(t.rows.len(), 50);
        let ctx = scale_nominal(&t, MissingValues::AsValue, EmptyPolicy::Reject).unwrap();
        assert!(ctx.rows().iter().all(|r| r.len() == 4));
        assert_eq!(t, latent_class_table(50, &[3, 4, 2], 4, 0.8, 1).unwrap());
    }

    #[test]
    fn grouped_context_is_valid_and_seeded() {
        let a = grouped_context(60, 5, 6, (2, 4), 0.01, 3);
        assert_eq!(a.n_attributes(), 30);
        assert_eq!(a, grouped_context(60, 5, 6, (2, 4), 0.01, 3));
    }

    #[test]
    fn temporal_context_has_years() {
        let ctx = temporal_communities(&TemporalSpec::toy(), 5);
        assert_eq!(ctx.n_objects(), 20);
        let years = ctx.attribute_years().unwrap();
        assert!(years.iter().all(|y| (2010..=2019).contains(y)));
        assert!(years.windows(2).all(|w| w[0] <= w[1]));
    }
}
