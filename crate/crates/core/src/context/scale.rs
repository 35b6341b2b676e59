use std::collections::BTreeSet;
use std::path::Path;

use super::{EmptyPolicy, FormalContext};
use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Token marking a missing value in nominal tables.
pub const MISSING: &str = "?";

/// A rectangular table of categorical values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NominalTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Treatment of the `?` token during nominal scaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MissingValues {
    /// `?` produces no incidence in its column.
    #[default]
    Skip,
    /// `?` is scaled like any other value (`column=?`).
    AsValue,
}

impl NominalTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidInput("nominal table has no columns".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::parse(
                i + 2,
                format!(
                    "row has {} fields, expected {}",
                    rows[i].len(),
                    columns.len()
                ),
            ));
        }
        Ok(NominalTable { columns, rows })
    }
}

pub fn load_nominal_csv(path: impl AsRef<Path>) -> Result<NominalTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    NominalTable::new(columns, rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: format!("{}: {e}", path.display()),
    }
}

/// One binary attribute `column=value` per distinct value of each column
/// (values in sorted order). Objects are named by 1-based row number.
pub fn scale_nominal(
    table: &NominalTable,
    missing: MissingValues,
    policy: EmptyPolicy,
) -> Result<FormalContext> {
    if table.rows.is_empty() {
        return Err(Error::InvalidInput("nominal table has no rows".into()));
    }
    let mut attributes = Vec::new();
    // (column, value) -> attribute index, via per-column sorted value lists
    let mut column_values: Vec<Vec<&str>> = Vec::with_capacity(table.columns.len());
    for (c, name) in table.columns.iter().enumerate() {
        let values: BTreeSet<&str> = table
            .rows
            .iter()
            .map(|r| r[c].as_str())
            .filter(|v| missing == MissingValues::AsValue || *v != MISSING)
            .collect();
        if values.is_empty() {
            return Err(Error::InvalidInput(format!(
                "column `{name}` has no values"
            )));
        }
        for v in &values {
            attributes.push(format!("{name}={v}"));
        }
        column_values.push(values.into_iter().collect());
    }
    let offsets: Vec<usize> = column_values
        .iter()
        .scan(0, |acc, vs| {
            let o = *acc;
            *acc += vs.len();
            Some(o)
        })
        .collect();

    let rows = table
        .rows
        .iter()
        .map(|r| {
            let mut bits = BitSet::empty(attributes.len());
            for (c, v) in r.iter().enumerate() {
                if let Ok(pos) = column_values[c].binary_search(&v.as_str()) {
                    bits.insert(offsets[c] + pos);
                }
            }
            bits
        })
        .collect();
    let objects = (1..=table.rows.len()).map(|i| i.to_string()).collect();
    FormalContext::with_policy(objects, attributes, rows, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[&str], rows: &[&[&str]]) -> NominalTable {
        NominalTable::new(
            cols.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_column_two_values() {
        let t = table(&["v"], &[&["n"], &["y"], &["n"]]);
        let ctx = scale_nominal(&t, MissingValues::Skip, EmptyPolicy::Reject).unwrap();
        assert_eq!(ctx.attributes(), &["v=n".to_string(), "v=y".to_string()]);
        assert_eq!(ctx.row(1).to_vec(), vec![1]);
    }

    #[test]
    fn missing_value_conventions() {
        let t = table(&["a", "b"], &[&["x", "?"], &["y", "p"], &["x", "q"]]);
        let skip = scale_nominal(&t, MissingValues::Skip, EmptyPolicy::Reject).unwrap();
        assert_eq!(skip.n_attributes(), 4);
        assert_eq!(skip.row(0).len(), 1);
        let as_value = scale_nominal(&t, MissingValues::AsValue, EmptyPolicy::Reject).unwrap();
        assert_eq!(as_value.n_attributes(), 5);
        assert!(as_value.attribute_index("b=?").is_some());
        // one incidence per observed column
        for g in 0..3 {
            assert_eq!(as_value.row(g).len(), 2);
        }
    }

    #[test]
    fn empty_table_rejected() {
        let t = NominalTable::new(vec!["a".into()], vec![]).unwrap();
        assert!(scale_nominal(&t, MissingValues::Skip, EmptyPolicy::Reject).is_err());
        assert!(NominalTable::new(vec![], vec![]).is_err());
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "class,odor\ne,n\np,f\n").unwrap();
        let t = load_nominal_csv(&p).unwrap();
        assert_eq!(t.columns, vec!["class", "odor"]);
        assert_eq!(t.rows.len(), 2);
        std::fs::write(&p, "class,odor\ne\n").unwrap();
        assert!(load_nominal_csv(&p).is_err());
    }
}
