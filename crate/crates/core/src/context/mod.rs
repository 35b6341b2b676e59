//! Formal contexts and their derivation operators.
//!
//! Objects and attributes are addressed by dense index; names are carried as
//! metadata only. Incidence is stored object-major, with a column-major
//! mirror built on first use since attribute-side derivations dominate
//! closure computation.

mod io;
mod scale;

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use log::warn;

use crate::bitset::{AttrSet, BitSet, ObjSet};
use crate::error::{Error, Result};

pub use io::{load_burmeister, load_years, parse_burmeister, save_burmeister, write_burmeister};
pub use scale::{load_nominal_csv, scale_nominal, MissingValues, NominalTable};

/// What to do with objects that have no attribute or attributes that have no
/// object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmptyPolicy {
    #[default]
    Reject,
    Drop,
}

pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    rows: Vec<AttrSet>,
    cols: OnceLock<Vec<ObjSet>>,
    attribute_year: Option<Vec<i32>>,
}

impl FormalContext {
    /// Builds a context, rejecting empty rows and columns.
    pub fn new(objects: Vec<String>, attributes: Vec<String>, rows: Vec<AttrSet>) -> Result<Self> {
        Self::with_policy(objects, attributes, rows, EmptyPolicy::Reject)
    }

    pub fn with_policy(
        objects: Vec<String>,
        attributes: Vec<String>,
        rows: Vec<AttrSet>,
        policy: EmptyPolicy,
    ) -> Result<Self> {
        if rows.len() != objects.len() {
            return Err(Error::InvalidContext(format!(
                "{} incidence rows for {} objects",
                rows.len(),
                objects.len()
            )));
        }
        if let Some((g, r)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.width() != attributes.len())
        {
            return Err(Error::InvalidContext(format!(
                "row {g} has width {}, expected {}",
                r.width(),
                attributes.len()
            )));
        }
        check_unique("object", &objects)?;
        check_unique("attribute", &attributes)?;

        let ctx = FormalContext {
            objects,
            attributes,
            rows,
            cols: OnceLock::new(),
            attribute_year: None,
        };
        ctx.enforce(policy)
    }

    /// Builds a context from `'X'`/`'.'` row strings; names default to
    /// `g1..` and `1..`. Intended for fixtures and tests.
    pub fn from_strings(rows: &[&str]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut parsed = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let bits: Vec<bool> = r.chars().map(|c| c == 'X' || c == 'x').collect();
            if bits.len() != width {
                return Err(Error::parse(i + 1, "ragged row"));
            }
            parsed.push(BitSet::from_bools(&bits));
        }
        FormalContext::new(
            (1..=rows.len()).map(|i| format!("g{i}")).collect(),
            (1..=width).map(|i| i.to_string()).collect(),
            parsed,
        )
    }

    fn enforce(self, policy: EmptyPolicy) -> Result<Self> {
        let empty_rows: Vec<usize> = (0..self.n_objects())
            .filter(|&g| self.rows[g].is_empty())
            .collect();
        let mut covered = BitSet::empty(self.n_attributes());
        for r in &self.rows {
            covered.union_with(r);
        }
        let empty_cols: Vec<usize> = covered.complement().to_vec();
        if empty_rows.is_empty() && empty_cols.is_empty() {
            return Ok(self);
        }
        match policy {
            EmptyPolicy::Reject => {
                let mut parts = Vec::new();
                if let Some(&g) = empty_rows.first() {
                    parts.push(format!(
                        "{} object(s) without attributes (first: `{}`)",
                        empty_rows.len(),
                        self.objects[g]
                    ));
                }
                if let Some(&m) = empty_cols.first() {
                    parts.push(format!(
                        "{} attribute(s) without objects (first: `{}`)",
                        empty_cols.len(),
                        self.attributes[m]
                    ));
                }
                Err(Error::InvalidContext(parts.join("; ")))
            }
            EmptyPolicy::Drop => {
                warn!(
                    "dropping {} empty object(s) and {} empty attribute(s)",
                    empty_rows.len(),
                    empty_cols.len()
                );
                let keep_g: Vec<usize> = (0..self.n_objects())
                    .filter(|g| !self.rows[*g].is_empty())
                    .collect();
                let keep_m = covered.to_vec();
                Ok(self.restrict(&keep_g, &keep_m))
            }
        }
    }

    /// Subcontext on the given object and attribute indices (kept in the
    /// given order). The result is not re-validated.
    pub fn restrict(&self, objects: &[usize], attributes: &[usize]) -> FormalContext {
        let rows = objects
            .iter()
            .map(|&g| {
                BitSet::from_indices(
                    attributes.len(),
                    attributes
                        .iter()
                        .enumerate()
                        .filter(|(_, &m)| self.rows[g].contains(m))
                        .map(|(j, _)| j),
                )
            })
            .collect();
        FormalContext {
            objects: objects.iter().map(|&g| self.objects[g].clone()).collect(),
            attributes: attributes
                .iter()
                .map(|&m| self.attributes[m].clone())
                .collect(),
            rows,
            cols: OnceLock::new(),
            attribute_year: self
                .attribute_year
                .as_ref()
                .map(|y| attributes.iter().map(|&m| y[m]).collect()),
        }
    }

    /// Subcontext validated against `policy`.
    pub fn subcontext(
        &self,
        objects: &[usize],
        attributes: &[usize],
        policy: EmptyPolicy,
    ) -> Result<FormalContext> {
        self.restrict(objects, attributes).enforce(policy)
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    /// Row of object `g`: the attribute set `{g}'`.
    pub fn row(&self, g: usize) -> &AttrSet {
        &self.rows[g]
    }

    pub fn rows(&self) -> &[AttrSet] {
        &self.rows
    }

    /// Column of attribute `m`: the object set `{m}'`.
    pub fn col(&self, m: usize) -> &ObjSet {
        &self.columns()[m]
    }

    pub fn columns(&self) -> &[ObjSet] {
        self.cols
            .get_or_init(|| transpose(&self.rows, self.attributes.len()))
    }

    pub fn incident(&self, g: usize, m: usize) -> bool {
        self.rows[g].contains(m)
    }

    pub fn n_incidences(&self) -> usize {
        self.rows.iter().map(BitSet::len).sum()
    }

    pub fn density(&self) -> f64 {
        let cells = self.n_objects() * self.n_attributes();
        if cells == 0 {
            0.0
        } else {
            self.n_incidences() as f64 / cells as f64
        }
    }

    pub fn attribute_years(&self) -> Option<&[i32]> {
        self.attribute_year.as_deref()
    }

    pub fn set_attribute_years(&mut self, years: Vec<i32>) -> Result<()> {
        if years.len() != self.n_attributes() {
            return Err(Error::Dimension {
                expected: self.n_attributes(),
                found: years.len(),
            });
        }
        self.attribute_year = Some(years);
        Ok(())
    }

    /// `A'`: attributes shared by every object in `a`. `∅' = M`.
    pub fn derive_attrs(&self, a: &ObjSet) -> Result<AttrSet> {
        self.check_objs(a)?;
        Ok(self.derive_attrs_unchecked(a))
    }

    /// `B'`: objects having every attribute in `b`. `∅' = G`.
    pub fn derive_objs(&self, b: &AttrSet) -> Result<ObjSet> {
        self.check_attrs(b)?;
        Ok(self.derive_objs_unchecked(b))
    }

    /// `B''`.
    pub fn closure_attrs(&self, b: &AttrSet) -> Result<AttrSet> {
        self.check_attrs(b)?;
        Ok(self.closure_attrs_unchecked(b))
    }

    /// `A''`.
    pub fn closure_objs(&self, a: &ObjSet) -> Result<ObjSet> {
        self.check_objs(a)?;
        Ok(self.derive_objs_unchecked(&self.derive_attrs_unchecked(a)))
    }

    /// Closure Hamming distance: Hamming distance of `a''` and `b''`.
    pub fn chd(&self, a: &AttrSet, b: &AttrSet) -> Result<usize> {
        self.check_attrs(a)?;
        self.check_attrs(b)?;
        Ok(self
            .closure_attrs_unchecked(a)
            .hamming(&self.closure_attrs_unchecked(b)))
    }

    pub(crate) fn derive_attrs_unchecked(&self, a: &ObjSet) -> AttrSet {
        let mut out = BitSet::full(self.n_attributes());
        for g in a {
            out.intersect_with(&self.rows[g]);
        }
        out
    }

    pub(crate) fn derive_objs_unchecked(&self, b: &AttrSet) -> ObjSet {
        let cols = self.columns();
        let mut out = BitSet::full(self.n_objects());
        for m in b {
            out.intersect_with(&cols[m]);
        }
        out
    }

    pub(crate) fn closure_attrs_unchecked(&self, b: &AttrSet) -> AttrSet {
        self.derive_attrs_unchecked(&self.derive_objs_unchecked(b))
    }

    fn check_attrs(&self, b: &AttrSet) -> Result<()> {
        if b.width() != self.n_attributes() {
            return Err(Error::Dimension {
                expected: self.n_attributes(),
                found: b.width(),
            });
        }
        Ok(())
    }

    fn check_objs(&self, a: &ObjSet) -> Result<()> {
        if a.width() != self.n_objects() {
            return Err(Error::Dimension {
                expected: self.n_objects(),
                found: a.width(),
            });
        }
        Ok(())
    }

    /// Transposed context: objects become attributes and vice versa.
    pub fn dualize(&self) -> FormalContext {
        FormalContext {
            objects: self.attributes.clone(),
            attributes: self.objects.clone(),
            rows: self.columns().to_vec(),
            cols: OnceLock::from(self.rows.clone()),
            attribute_year: None,
        }
    }

    /// FNV-1a digest of names and incidence, used to tie artifacts to their
    /// input context.
    pub fn content_hash(&self) -> String {
        let mut h = Fnv::default();
        h.write_usize(self.n_objects());
        h.write_usize(self.n_attributes());
        for n in self.objects.iter().chain(&self.attributes) {
            h.write(n.as_bytes());
            h.write(&[0xff]);
        }
        for r in &self.rows {
            for i in r {
                h.write_usize(i);
            }
            h.write(&[0xfe]);
        }
        format!("{:016x}", h.0)
    }
}

fn transpose(rows: &[BitSet], width: usize) -> Vec<BitSet> {
    let mut cols = vec![BitSet::empty(rows.len()); width];
    for (g, r) in rows.iter().enumerate() {
        for m in r {
            cols[m].insert(g);
        }
    }
    cols
}

fn check_unique(kind: &str, names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidContext(format!(
                "duplicate {kind} name `{n}`"
            )));
        }
    }
    Ok(())
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn write_usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }
}

impl Clone for FormalContext {
    fn clone(&self) -> Self {
        FormalContext {
            objects: self.objects.clone(),
            attributes: self.attributes.clone(),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            attribute_year: self.attribute_year.clone(),
        }
    }
}

impl PartialEq for FormalContext {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects
            && self.attributes == other.attributes
            && self.rows == other.rows
            && self.attribute_year == other.attribute_year
    }
}

impl fmt::Debug for FormalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "FormalContext {}x{}",
            self.n_objects(),
            self.n_attributes()
        )?;
        for (g, r) in self.rows.iter().enumerate() {
            let line: String = (0..self.n_attributes())
                .map(|m| if r.contains(m) { 'X' } else { '.' })
                .collect();
            writeln!(f, "  {:>8} {line}", self.objects[g])?;
        }
        Ok(())
    }
}
