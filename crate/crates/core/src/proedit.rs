//! Progressive editing: dataset construction across stages and the stopping
//! rule.
//!
//! Stage 0 trains on repeated targets (`t <SEP> t`). Each later stage trains
//! on `first part of previous output <SEP> t`. Training and decoding happen
//! outside this crate; a stage is a dataset file in, an outputs file back.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusRow;
use crate::error::{Error, Result};
use crate::parent::CorpusScore;
use crate::split::{split_output_with, ManySepSecond, SplitOutput};

pub const DEFAULT_SEP: &str = "<SEP>";

fn check_free(text: &str, sep: &str, what: &str) -> Result<()> {
    if sep.is_empty() {
        return Err(Error::InvalidConfig("separator must be non-empty".into()));
    }
    if text.contains(sep) {
        return Err(Error::SeparatorCollision {
            sep: sep.to_owned(),
            what: what.to_owned(),
        });
    }
    Ok(())
}

/// `target <sep> target`.
pub fn make_repeated_target(target: &str, sep: &str) -> Result<String> {
    check_free(target, sep, "target")?;
    Ok(format!("{target} {sep} {target}"))
}

/// `first_part <sep> target`.
pub fn make_stage_target(first_part: &str, target: &str, sep: &str) -> Result<String> {
    check_free(first_part, sep, "first part")?;
    check_free(target, sep, "target")?;
    Ok(format!("{first_part} {sep} {target}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub id: String,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StageDataset {
    pub rows: Vec<DatasetRow>,
    pub skipped: Vec<SkippedRow>,
}

impl StageDataset {
    /// JSONL, one `{"id","input","target"}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("rows serialize"));
            out.push('\n');
        }
        out
    }
}

/// Builds the training set for `stage_index`.
///
/// Stage 0 ignores `prev_outputs`. Later stages need an output for every row
/// and use the first part of it. Rows whose text would contain the separator
/// are skipped and reported.
pub fn build_stage_dataset(
    rows: &[CorpusRow],
    prev_outputs: Option<&HashMap<String, String>>,
    stage_index: usize,
    sep: &str,
    many: ManySepSecond,
) -> Result<StageDataset> {
    if sep.is_empty() {
        return Err(Error::InvalidConfig("separator must be non-empty".into()));
    }
    let prev = match (stage_index, prev_outputs) {
        (0, _) => None,
        (_, None) => {
            return Err(Error::Stage(format!(
                "stage {stage_index} needs the outputs of stage {}",
                stage_index - 1
            )))
        }
        (_, Some(prev)) => {
            let missing: Vec<String> = rows
                .iter()
                .filter(|r| !prev.contains_key(&r.id))
                .map(|r| r.id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(Error::IdMismatch {
                    missing,
                    extra: Vec::new(),
                });
            }
            Some(prev)
        }
    };

    let built: Vec<std::result::Result<DatasetRow, SkippedRow>> = rows
        .par_iter()
        .map(|row| {
            let target = match prev {
                None => make_repeated_target(&row.target, sep),
                Some(prev) => {
                    let first = split_output_with(&prev[&row.id], sep, many).first;
                    make_stage_target(&first, &row.target, sep)
                }
            };
            match target {
                Ok(target) => Ok(DatasetRow {
                    id: row.id.clone(),
                    input: row.input.clone(),
                    target,
                }),
                Err(e) => Err(SkippedRow {
                    id: row.id.clone(),
                    reason: e.to_string(),
                }),
            }
        })
        .collect();

    let mut dataset = StageDataset::default();
    for item in built {
        match item {
            Ok(row) => dataset.rows.push(row),
            Err(skip) => {
                warn!("skipping row {}: {}", skip.id, skip.reason);
                dataset.skipped.push(skip);
            }
        }
    }
    Ok(dataset)
}

/// How many outputs had no separator, exactly one, or several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SepHistogram {
    pub zero: usize,
    pub one: usize,
    pub many: usize,
}

impl SepHistogram {
    fn record(&mut self, sep_count: usize) {
        match sep_count {
            0 => self.zero += 1,
            1 => self.one += 1,
            _ => self.many += 1,
        }
    }
}

pub fn extract_parts<'a, I>(
    outputs: I,
    sep: &str,
    many: ManySepSecond,
) -> (BTreeMap<String, SplitOutput>, SepHistogram)
where
    I: IntoIterator<Item = (&'a String, &'a String)>,
{
    let mut histogram = SepHistogram::default();
    let parts = outputs
        .into_iter()
        .map(|(id, text)| {
            let split = split_output_with(text, sep, many);
            histogram.record(split.sep_count);
            (id.clone(), split)
        })
        .collect();
    (parts, histogram)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub first: CorpusScore,
    pub second: CorpusScore,
}

/// One stage as recorded in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStage {
    pub stage_index: usize,
    pub sep: String,
    pub dataset: PathBuf,
    pub outputs: Option<PathBuf>,
    pub scores: Option<StageScores>,
}

impl PipelineStage {
    pub fn first_part_scores(&self) -> Option<&CorpusScore> {
        self.scores.as_ref().map(|s| &s.first)
    }

    pub fn second_part_scores(&self) -> Option<&CorpusScore> {
        self.scores.as_ref().map(|s| &s.second)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageHistory {
    stages: Vec<PipelineStage>,
}

impl StageHistory {
    /// Stage indices must run 0, 1, 2, ... and every stage after the first
    /// needs its predecessor's outputs.
    pub fn new(stages: Vec<PipelineStage>) -> Result<Self> {
        for (i, stage) in stages.iter().enumerate() {
            if stage.stage_index != i {
                return Err(Error::Stage(format!(
                    "expected stage {i}, found stage {}",
                    stage.stage_index
                )));
            }
            if i > 0 && stages[i - 1].outputs.is_none() {
                return Err(Error::Stage(format!(
                    "stage {i} exists but stage {} has no outputs",
                    i - 1
                )));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[PipelineStage] {
        &self.stages
    }

    /// First-part mean F1 per stage.
    pub fn first_part_f1(&self) -> Result<Vec<f64>> {
        self.stages
            .iter()
            .map(|s| {
                s.first_part_scores().map(|c| c.mean_f1).ok_or_else(|| {
                    Error::Stage(format!("stage {} has no first-part scores", s.stage_index))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    #[serde(rename = "continue")]
    pub proceed: bool,
    pub reason: String,
}

/// Continue while first-part F1 strictly improves on the previous stage.
pub fn should_continue(history: &StageHistory) -> Result<Decision> {
    should_continue_f1(&history.first_part_f1()?)
}

pub fn should_continue_f1(f1: &[f64]) -> Result<Decision> {
    match f1 {
        [] => Err(Error::Stage("no scored stages".into())),
        [only] => Ok(Decision {
            proceed: true,
            reason: format!("stage 0 first-part F1 {only}; only one stage scored"),
        }),
        [.., prev, last] => {
            let k = f1.len() - 1;
            let proceed = last > prev;
            let relation = if proceed {
                "improved on"
            } else {
                "did not improve on"
            };
            Ok(Decision {
                proceed,
                reason: format!(
                    "stage {k} first-part F1 {last} {relation} stage {} F1 {prev}",
                    k - 1
                ),
            })
        }
    }
}
