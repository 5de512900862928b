//! TOML configuration files for the command line.
//!
//! Each table is named after a subcommand and holds that subcommand's long
//! flags; top-level keys are global flags.
//!
//! ```toml
//! threads = 4
//!
//! [experiment]
//! theorem = "wang_yu"
//! k = 2
//! psi = "powerlog:1,1,0"
//! checkpoints = [100000, 1000000]
//! ```
//!
//! Values become flag arguments placed before the real command line, so
//! explicit flags win. Arrays are joined with commas; `true` becomes a bare
//! flag and `false` is dropped.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{invalid, parse_err, Result};

pub fn load_config(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| parse_err("config", "<file>", e.to_string()))
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(scalar)
            .collect::<Result<Vec<_>>>()?
            .join(","),
        other => return Err(invalid(format!("unsupported config value {other}"))),
    })
}

fn to_args(entries: impl Iterator<Item = (String, Value)>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (key, value) in entries {
        if value.is_table() {
            continue;
        }
        let flag = format!("--{key}");
        match value {
            Value::Boolean(true) => out.push(flag),
            Value::Boolean(false) => {}
            v => {
                out.push(flag);
                out.push(scalar(&v)?);
            }
        }
    }
    Ok(out)
}

/// Top-level (global) flags.
pub fn global_args(table: &Table) -> Result<Vec<String>> {
    to_args(table.iter().map(|(k, v)| (k.clone(), v.clone())))
}

/// Flags for one subcommand; empty if the section is absent.
pub fn section_args(table: &Table, section: &str) -> Result<Vec<String>> {
    match table.get(section) {
        Some(Value::Table(t)) => to_args(t.iter().map(|(k, v)| (k.clone(), v.clone()))),
        Some(_) => Err(invalid(format!("config entry {section:?} must be a table"))),
        None => Ok(Vec::new()),
    }
}
