//! JSON config files and run manifests. Flags win over file values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load_file(path: &Path) -> Result<Map<String, Value>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => anyhow::bail!("config {} must hold a JSON object", path.display()),
    }
}

/// Fills every field left unset on the command line from `file`. Keys the
/// command does not know are reported and ignored, so one file can serve
/// several subcommands.
pub fn merge<T: Serialize + DeserializeOwned>(
    args: T,
    file: Option<&Map<String, Value>>,
) -> Result<T> {
    let Some(file) = file else { return Ok(args) };
    let Value::Object(mut fields) = serde_json::to_value(&args)? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in file {
        match fields.get_mut(k) {
            Some(slot) if is_unset(slot) => *slot = v.clone(),
            Some(_) => {}
            None => warn!("config key `{k}` is not used by this subcommand"),
        }
    }
    serde_json::from_value(Value::Object(fields))
        .context("config file has a value of the wrong type")
}

fn is_unset(v: &Value) -> bool {
    matches!(v, Value::Null | Value::Bool(false))
}

pub fn require<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone()
        .with_context(|| format!("`{name}` is required (flag or config file)"))
}

#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub context_hash: Option<String>,
    pub outputs: Vec<String>,
    pub warnings: &'a [String],
}

pub struct OutDir {
    pub dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        context_hash: Option<String>,
        warnings: &[String],
    ) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            context_hash,
            outputs: self.written.clone(),
            warnings,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write("manifest.json", &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct A {
        seed: Option<u64>,
        epochs: Option<usize>,
        full: bool,
    }

    #[test]
    fn flags_override_file() {
        let file: Map<String, Value> =
            serde_json::from_str(r#"{"seed": 4, "epochs": 9, "full": true, "other": 1}"#).unwrap();
        let a = A {
            seed: Some(1),
            epochs: None,
            full: false,
        };
        let m = merge(a, Some(&file)).unwrap();
        assert_eq!(
            m,
            A {
                seed: Some(1),
                epochs: Some(9),
                full: true
            }
        );
        let bad: Map<String, Value> = serde_json::from_str(r#"{"epochs": "x"}"#).unwrap();
        assert!(merge(
            A {
                seed: None,
                epochs: None,
                full: false
            },
            Some(&bad)
        )
        .is_err());
    }
}
