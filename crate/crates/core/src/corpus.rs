//! JSONL corpus and model-output files.
//!
//! Instances: one object per line,
//! `{"id": str, "table": [{"attribute": str, "value": str}, ...] | "linearized_table": str, "target": str}`.
//! When both table forms are present the structured one is used.
//!
//! Outputs: one `{"id": str, "output": str}` object per line.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::parent::Example;
use crate::table::{parse_linearized_table_with, Table};
use crate::textcore::Tokenizer;

/// A loaded instance. `input` is the linearized table text handed to a model
/// and `target` the raw reference string; both are kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRow {
    pub id: String,
    pub table: Table,
    pub input: String,
    pub target: String,
}

impl CorpusRow {
    pub fn example(&self, tokenizer: Tokenizer) -> Example {
        Example {
            id: self.id.clone(),
            table: self.table.clone(),
            reference: tokenizer.tokenize(&self.target),
        }
    }
}

#[derive(Deserialize)]
struct RawCell {
    attribute: String,
    value: String,
}

#[derive(Deserialize)]
struct RawInstance {
    id: Option<String>,
    table: Option<Vec<RawCell>>,
    linearized_table: Option<String>,
    target: Option<String>,
}

#[derive(Deserialize)]
struct RawOutput {
    id: String,
    output: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn load_instances(path: &Path, tokenizer: Tokenizer) -> Result<Vec<CorpusRow>> {
    parse_instances(&read(path)?, path, tokenizer)
}

pub fn parse_instances(text: &str, path: &Path, tokenizer: Tokenizer) -> Result<Vec<CorpusRow>> {
    let record_err = |line: usize, message: String| Error::Record {
        path: path.to_owned(),
        line,
        message,
    };
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (line, raw) in lines(text) {
        let inst: RawInstance = serde_json::from_str(raw)
            .map_err(|e| record_err(line, format!("malformed JSON: {e}")))?;
        let id = inst
            .id
            .filter(|id| !id.is_empty())
            .ok_or_else(|| record_err(line, "missing or empty \"id\"".into()))?;
        let target = inst
            .target
            .ok_or_else(|| record_err(line, "missing \"target\"".into()))?;
        let (table, input) = match (inst.table, inst.linearized_table) {
            (Some(cells), linearized) => {
                if linearized.is_some() {
                    warn!(
                        "{}:{line}: both \"table\" and \"linearized_table\" given; using \"table\"",
                        path.display()
                    );
                }
                let input = cells
                    .iter()
                    .map(|c| format!("{}[{}]", c.attribute, c.value))
                    .collect::<Vec<_>>()
                    .join(" ");
                let table = Table::from_pairs(
                    cells
                        .iter()
                        .map(|c| (c.attribute.as_str(), c.value.as_str())),
                    tokenizer,
                )
                .map_err(|e| record_err(line, e.to_string()))?;
                (table, input)
            }
            (None, Some(linearized)) => {
                let table = parse_linearized_table_with(&linearized, tokenizer)
                    .map_err(|e| record_err(line, e.to_string()))?;
                (table, linearized)
            }
            (None, None) => {
                return Err(record_err(
                    line,
                    "neither \"table\" nor \"linearized_table\" given".into(),
                ))
            }
        };
        if !seen.insert(id.clone()) {
            return Err(record_err(line, format!("duplicate id {id:?}")));
        }
        rows.push(CorpusRow {
            id,
            table,
            input,
            target,
        });
    }
    Ok(rows)
}

/// Model outputs keyed by id.
pub fn load_outputs(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_outputs(&read(path)?, path)
}

pub fn parse_outputs(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, raw) in lines(text) {
        let rec: RawOutput = serde_json::from_str(raw).map_err(|e| Error::Record {
            path: path.to_owned(),
            line,
            message: format!("malformed output row: {e}"),
        })?;
        if out.insert(rec.id.clone(), rec.output).is_some() {
            return Err(Error::Record {
                path: path.to_owned(),
                line,
                message: format!("duplicate id {:?}", rec.id),
            });
        }
    }
    Ok(out)
}
