//! Burmeister `.cxt` files and attribute-year sidecars.
//!
//! ```text
//! B
//! <name line, optional>
//! |G|
//! |M|
//! <blank>
//! object names, one per line
//! attribute names, one per line
//! |G| rows of 'X' / '.'
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{EmptyPolicy, FormalContext};
use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub fn load_burmeister(path: impl AsRef<Path>, policy: EmptyPolicy) -> Result<FormalContext> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_burmeister(&text, policy)
}

pub fn parse_burmeister(text: &str, policy: EmptyPolicy) -> Result<FormalContext> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let line = |i: usize| -> Result<&str> {
        lines
            .get(i)
            .copied()
            .ok_or_else(|| Error::parse(i + 1, "unexpected end of file"))
    };
    let count = |i: usize, what: &str| -> Result<usize> {
        let l = line(i)?;
        l.trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("expected {what}, found `{l}`")))
    };

    if line(0)?.trim() != "B" {
        return Err(Error::parse(1, "header must start with `B`"));
    }
    // With a name line, the counts sit on lines 3-4; without, on lines 2-3.
    let named = lines
        .get(3)
        .is_some_and(|l| l.trim().parse::<usize>().is_ok());
    let first = if named { 2 } else { 1 };
    let n_obj = count(first, "object count")?;
    let n_att = count(first + 1, "attribute count")?;
    let blank = first + 2;
    if !line(blank)?.trim().is_empty() {
        return Err(Error::parse(blank + 1, "expected blank line after counts"));
    }

    let mut cursor = blank + 1;
    let mut take_names = |n: usize| -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(line(cursor)?.to_string());
            cursor += 1;
        }
        Ok(out)
    };
    let objects = take_names(n_obj)?;
    let attributes = take_names(n_att)?;

    let mut rows = Vec::with_capacity(n_obj);
    for _ in 0..n_obj {
        let l = line(cursor)?.trim_end();
        let mut bits = Vec::with_capacity(n_att);
        for (col, c) in l.chars().enumerate() {
            match c {
                'X' => bits.push(true),
                '.' => bits.push(false),
                other => {
                    return Err(Error::parse(
                        cursor + 1,
                        format!("invalid character `{other}` in column {}", col + 1),
                    ))
                }
            }
        }
        if bits.len() != n_att {
            return Err(Error::parse(
                cursor + 1,
                format!("row has {} entries, expected {n_att}", bits.len()),
            ));
        }
        rows.push(BitSet::from_bools(&bits));
        cursor += 1;
    }
    FormalContext::with_policy(objects, attributes, rows, policy)
}

pub fn write_burmeister(ctx: &FormalContext) -> String {
    let mut out = String::new();
    out.push_str("B\n\n");
    let _ = writeln!(out, "{}\n{}\n", ctx.n_objects(), ctx.n_attributes());
    for name in ctx.objects().iter().chain(ctx.attributes()) {
        out.push_str(name);
        out.push('\n');
    }
    for r in ctx.rows() {
        for m in 0..ctx.n_attributes() {
            out.push(if r.contains(m) { 'X' } else { '.' });
        }
        out.push('\n');
    }
    out
}

pub fn save_burmeister(ctx: &FormalContext, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_burmeister(ctx)).map_err(|e| Error::io(path, e))
}

/// Reads `attribute_name<TAB>year` lines and attaches them to `ctx`. Every
/// attribute needs a year; unknown names are an error.
pub fn load_years(ctx: &mut FormalContext, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut years: Vec<Option<i32>> = vec![None; ctx.n_attributes()];
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let (name, year) = l
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected `name<TAB>year`"))?;
        let m = ctx
            .attribute_index(name)
            .ok_or_else(|| Error::parse(i + 1, format!("unknown attribute `{name}`")))?;
        let y: i32 = year
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("invalid year `{year}`")))?;
        years[m] = Some(y);
    }
    let missing: Vec<&str> = years
        .iter()
        .enumerate()
        .filter(|(_, y)| y.is_none())
        .map(|(m, _)| ctx.attributes()[m].as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingYears(format!(
            "{}: no year for {} attribute(s), first `{}`",
            path.display(),
            missing.len(),
            missing[0]
        )));
    }
    ctx.set_attribute_years(years.into_iter().flatten().collect())
}
