//! Fixed-width bit vectors used as the binary encoding of object and
//! attribute sets.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A fixed-width set of indices `0..width` packed into 64-bit words.
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `width`
/// in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
    width: usize,
}

/// An attribute set, width `|M|`.
pub type AttrSet = BitSet;
/// An object set, width `|G|`.
pub type ObjSet = BitSet;

impl BitSet {
    pub fn empty(width: usize) -> Self {
        BitSet {
            words: vec![0; width.div_ceil(WORD)],
            width,
        }
    }

    pub fn full(width: usize) -> Self {
        let mut s = BitSet {
            words: vec![u64::MAX; width.div_ceil(WORD)],
            width,
        };
        s.mask_tail();
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
        let mut s = Self::empty(width);
        for i in indices {
            s.insert(i);
        }
        s
    }

    /// Builds a set from a slice of booleans (or 0/1 flags).
    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_indices(
            bits.len(),
            bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i),
        )
    }

    /// Set whose members are the bits of `mask`, for widths up to 64.
    pub fn from_mask(width: usize, mask: u64) -> Self {
        assert!(width <= WORD);
        let mut s = Self::empty(width);
        if width > 0 {
            s.words[0] = mask;
            s.mask_tail();
        }
        s
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        self.words[i / WORD] &= !(1 << (i % WORD));
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.width
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            idx: 0,
            cur: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// The encoding as a 0/1 real vector.
    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.width)
            .map(|i| if self.contains(i) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn check_width(&self, other: &BitSet) -> Result<()> {
        if self.width != other.width {
            return Err(Error::Dimension {
                expected: self.width,
                found: other.width,
            });
        }
        Ok(())
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn complement(&self) -> BitSet {
        let mut s = BitSet {
            words: self.words.iter().map(|w| !w).collect(),
            width: self.width,
        };
        s.mask_tail();
        s
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &BitSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Size of the symmetric difference.
    pub fn hamming(&self, other: &BitSet) -> usize {
        debug_assert_eq!(self.width, other.width);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Keeps only the members strictly below `i`.
    pub fn truncate_below(&mut self, i: usize) {
        let w = i / WORD;
        let b = i % WORD;
        if w < self.words.len() {
            self.words[w] &= (1u64 << b) - 1;
            for x in &mut self.words[w + 1..] {
                *x = 0;
            }
        }
    }

    /// True if `self` and `other` agree on all indices below `i`.
    pub fn agrees_below(&self, other: &BitSet, i: usize) -> bool {
        let w = i / WORD;
        let b = i % WORD;
        if self.words[..w] != other.words[..w] {
            return false;
        }
        if b == 0 || w >= self.words.len() {
            return true;
        }
        let mask = (1u64 << b) - 1;
        (self.words[w] ^ other.words[w]) & mask == 0
    }

    /// Lectic comparison: `a < b` iff the smallest index where they differ is
    /// a member of `b`.
    pub fn lectic_cmp(&self, other: &BitSet) -> Ordering {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter().zip(&other.words) {
            let x = a ^ b;
            if x != 0 {
                let bit = x.trailing_zeros();
                return if b >> bit & 1 == 1 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        Ordering::Equal
    }

    /// Hex encoding in index order: nibble `j` covers indices `4j..4j+3`,
    /// with index `4j` as its most significant bit. Lexicographic order of
    /// equal-width hex strings coincides with lectic order.
    pub fn to_hex(&self) -> String {
        let nibbles = self.width.div_ceil(4);
        let mut out = String::with_capacity(nibbles.max(1));
        for j in 0..nibbles {
            let mut v = 0u8;
            for k in 0..4 {
                let i = 4 * j + k;
                if i < self.width && self.contains(i) {
                    v |= 8 >> k;
                }
            }
            out.push(char::from_digit(v as u32, 16).unwrap());
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    pub fn from_hex(width: usize, hex: &str) -> Result<Self> {
        let expected = width.div_ceil(4).max(1);
        if hex.len() != expected {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "hex set `{hex}` has {} digits, expected {expected}",
                    hex.len()
                ),
            });
        }
        let mut s = Self::empty(width);
        for (j, c) in hex.chars().enumerate() {
            let v = c.to_digit(16).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid hex digit `{c}`"),
            })?;
            for k in 0..4 {
                if v & (8 >> k) != 0 {
                    let i = 4 * j + k;
                    if i >= width {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("hex set `{hex}` has bits beyond width {width}"),
                        });
                    }
                    s.insert(i);
                }
            }
        }
        Ok(s)
    }

    fn mask_tail(&mut self) {
        let r = self.width % WORD;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let bit = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * WORD + bit);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

impl<'a> IntoIterator for &'a BitSet {
    type Item = usize;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let a = BitSet::from_indices(70, [0, 3, 65]);
        let b = BitSet::from_indices(70, [3, 69]);
        assert_eq!(a.len(), 3);
        assert_eq!(a.intersection(&b).to_vec(), vec![3]);
        assert_eq!(a.union(&b).to_vec(), vec![0, 3, 65, 69]);
        assert_eq!(a.hamming(&b), 3);
        assert_eq!(BitSet::full(70).len(), 70);
        assert_eq!(a.complement().len(), 67);
        assert!(BitSet::empty(70).is_subset(&a));
    }

    #[test]
    fn hex_follows_index_order() {
        let s = BitSet::from_indices(3, [0, 2]);
        assert_eq!(s.to_hex(), "a");
        assert_eq!(BitSet::from_hex(3, "a").unwrap(), s);
        assert!(BitSet::from_hex(3, "1").is_err());
        assert_eq!(BitSet::empty(0).to_hex(), "0");
    }

    #[test]
    fn lectic_order_small() {
        // Lectic order on {0,1,2}: {} < {2} < {1} < {1,2} < {0} < ...
        let order: Vec<BitSet> = [vec![], vec![2], vec![1], vec![1, 2], vec![0], vec![0, 2]]
            .into_iter()
            .map(|v| BitSet::from_indices(3, v))
            .collect();
        for w in order.windows(2) {
            assert_eq!(w[0].lectic_cmp(&w[1]), Ordering::Less);
        }
    }

    fn arb_pair() -> impl Strategy<Value = (usize, Vec<bool>, Vec<bool>)> {
        (1usize..150).prop_flat_map(|w| {
            (
                Just(w),
                proptest::collection::vec(any::<bool>(), w),
                proptest::collection::vec(any::<bool>(), w),
            )
        })
    }

    proptest! {
        #[test]
        fn lectic_matches_hex_lexicographic((_w, a, b) in arb_pair()) {
            let a = BitSet::from_bools(&a);
            let b = BitSet::from_bools(&b);
            prop_assert_eq!(a.lectic_cmp(&b), a.to_hex().cmp(&b.to_hex()));
            prop_assert_eq!(BitSet::from_hex(a.width(), &a.to_hex()).unwrap(), a.clone());
        }

        #[test]
        fn agrees_below_matches_naive((w, a, b) in arb_pair(), cut in 0usize..150) {
            let cut = cut.min(w);
            let sa = BitSet::from_bools(&a);
            let sb = BitSet::from_bools(&b);
            prop_assert_eq!(sa.agrees_below(&sb, cut), a[..cut] == b[..cut]);
            let mut t = sa.clone();
            t.truncate_below(cut);
            prop_assert_eq!(t.to_vec(), (0..cut).filter(|&i| a[i]).collect::<Vec<_>>());
        }
    }
}
