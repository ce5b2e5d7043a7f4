//! On-disk driver for the progressive-edit stages.
//!
//! Layout of a pipeline directory:
//!
//! ```text
//! pipeline.json              settings: instances file, separator, scoring knobs
//! stage-0/manifest.json      {"stage_index", "sep", "dataset", "outputs", "scores"}
//! stage-0/dataset.jsonl      {"id", "input", "target"} rows to train on
//! stage-0/outputs.jsonl      {"id", "output"} rows from the trained model
//! stage-0/report.json        BLEU/PARENT report of the first and second parts
//! stage-1/...
//! ```
//!
//! Paths inside manifests are relative to the pipeline directory.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bleu::BleuConfig;
use crate::corpus::{load_instances, load_outputs, CorpusRow};
use crate::error::{Error, Result};
use crate::parent::{check_ids, Execution, LambdaMode, ParentConfig};
use crate::proedit::{
    build_stage_dataset, should_continue, Decision, PipelineStage, SkippedRow, StageHistory,
    StageScores,
};
use crate::report::{evaluate, EvalReport, Part, ScoreOptions};
use crate::split::ManySepSecond;
use crate::textcore::Tokenizer;

const SETTINGS_FILE: &str = "pipeline.json";
const MANIFEST_FILE: &str = "manifest.json";
const DATASET_FILE: &str = "dataset.jsonl";
const OUTPUTS_FILE: &str = "outputs.jsonl";
const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub instances: PathBuf,
    pub sep: String,
    pub many_sep_second: ManySepSecond,
    pub tokenizer: Tokenizer,
    pub n_max: usize,
    /// `None` for the per-instance heuristic.
    pub lambda: Option<f64>,
    pub smooth_bleu: bool,
}

impl PipelineSettings {
    pub fn new(instances: impl Into<PathBuf>) -> Self {
        Self {
            instances: instances.into(),
            sep: crate::proedit::DEFAULT_SEP.into(),
            many_sep_second: ManySepSecond::First,
            tokenizer: Tokenizer::Whitespace,
            n_max: 4,
            lambda: None,
            smooth_bleu: false,
        }
    }

    fn score_options(&self, label: String) -> ScoreOptions {
        ScoreOptions {
            label,
            tokenizer: self.tokenizer,
            parent: ParentConfig {
                n_max: self.n_max,
                lambda: self.lambda.map_or(LambdaMode::Auto, LambdaMode::Fixed),
                order_weights: None,
            },
            bleu: if self.smooth_bleu {
                BleuConfig::smoothed()
            } else {
                BleuConfig::default()
            },
            sep: Some(self.sep.clone()),
            many_sep_second: self.many_sep_second,
            execution: Execution::Parallel,
        }
    }
}

/// What a dataset-building step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub stage_index: usize,
    pub dataset: PathBuf,
    pub rows: usize,
    pub skipped: Vec<SkippedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Status {
    pub stages: usize,
    pub first_part_f1: Vec<f64>,
    pub decision: Option<Decision>,
    /// Set when the newest stage still waits for outputs or scores.
    pub pending: Option<String>,
}

pub struct Pipeline {
    dir: PathBuf,
    settings: PipelineSettings,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    write(path, &text)
}

fn stage_dir(k: usize) -> PathBuf {
    PathBuf::from(format!("stage-{k}"))
}

impl Pipeline {
    /// Creates the directory, writes the settings and builds the stage-0
    /// repeated-target dataset.
    pub fn init(
        dir: impl Into<PathBuf>,
        settings: PipelineSettings,
    ) -> Result<(Self, DatasetSummary)> {
        let dir = dir.into();
        let settings_path = dir.join(SETTINGS_FILE);
        if settings_path.exists() {
            return Err(Error::Stage(format!(
                "{} already holds a pipeline",
                dir.display()
            )));
        }
        if settings.sep.is_empty() {
            return Err(Error::InvalidConfig("separator must be non-empty".into()));
        }
        let rows = load_instances(&settings.instances, settings.tokenizer)?;
        if rows.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let pipeline = Self { dir, settings };
        let summary = pipeline.write_stage_dataset(0, &rows, None)?;
        write_json(&settings_path, &pipeline.settings)?;
        Ok((pipeline, summary))
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let settings = read_json(&dir.join(SETTINGS_FILE))?;
        Ok(Self { dir, settings })
    }

    pub fn settings(&self) -> &PipelineSettings {
        &self.settings
    }

    fn manifest_path(&self, k: usize) -> PathBuf {
        self.dir.join(stage_dir(k)).join(MANIFEST_FILE)
    }

    fn save_stage(&self, stage: &PipelineStage) -> Result<()> {
        write_json(&self.manifest_path(stage.stage_index), stage)
    }

    /// All stage manifests, in order.
    pub fn stages(&self) -> Result<Vec<PipelineStage>> {
        let mut stages = Vec::new();
        loop {
            let path = self.manifest_path(stages.len());
            if !path.exists() {
                break;
            }
            stages.push(read_json(&path)?);
        }
        Ok(stages)
    }

    fn stage(&self, k: usize) -> Result<PipelineStage> {
        let path = self.manifest_path(k);
        if !path.exists() {
            return Err(Error::Stage(format!("stage {k} does not exist")));
        }
        read_json(&path)
    }

    fn instances(&self) -> Result<Vec<CorpusRow>> {
        load_instances(&self.settings.instances, self.settings.tokenizer)
    }

    /// Instances that made it into `stage`'s dataset, in corpus order.
    fn stage_rows(&self, stage: &PipelineStage) -> Result<Vec<CorpusRow>> {
        let dataset_path = self.dir.join(&stage.dataset);
        let text = fs::read_to_string(&dataset_path).map_err(|e| Error::io(&dataset_path, e))?;
        let mut ids = HashSet::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let row: crate::proedit::DatasetRow =
                serde_json::from_str(line).map_err(|e| Error::Record {
                    path: dataset_path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            ids.insert(row.id);
        }
        Ok(self
            .instances()?
            .into_iter()
            .filter(|r| ids.contains(&r.id))
            .collect())
    }

    fn write_stage_dataset(
        &self,
        k: usize,
        rows: &[CorpusRow],
        prev_outputs: Option<&HashMap<String, String>>,
    ) -> Result<DatasetSummary> {
        let dataset = build_stage_dataset(
            rows,
            prev_outputs,
            k,
            &self.settings.sep,
            self.settings.many_sep_second,
        )?;
        let rel = stage_dir(k).join(DATASET_FILE);
        write(&self.dir.join(&rel), &dataset.to_jsonl())?;
        self.save_stage(&PipelineStage {
            stage_index: k,
            sep: self.settings.sep.clone(),
            dataset: rel.clone(),
            outputs: None,
            scores: None,
        })?;
        Ok(DatasetSummary {
            stage_index: k,
            dataset: self.dir.join(rel),
            rows: dataset.rows.len(),
            skipped: dataset.skipped,
        })
    }

    /// Builds the dataset for the next stage from the newest stage's outputs.
    pub fn make_dataset(&self, k: usize) -> Result<DatasetSummary> {
        let existing = self.stages()?.len();
        if k != existing {
            return Err(Error::Stage(format!(
                "the next stage to build is {existing}, not {k}"
            )));
        }
        let prev = self.stage(k - 1)?;
        let outputs_rel = prev
            .outputs
            .as_ref()
            .ok_or_else(|| Error::Stage(format!("stage {} has no ingested outputs", k - 1)))?;
        let outputs: HashMap<String, String> = load_outputs(&self.dir.join(outputs_rel))?
            .into_iter()
            .collect();
        let rows = self.stage_rows(&prev)?;
        self.write_stage_dataset(k, &rows, Some(&outputs))
    }

    /// Copies a model-outputs file into stage `k`. Ids must match the stage's
    /// dataset exactly. Any previous scores for the stage are dropped.
    pub fn ingest_outputs(&self, k: usize, outputs_path: &Path) -> Result<PathBuf> {
        let mut stage = self.stage(k)?;
        if self.manifest_path(k + 1).exists() {
            return Err(Error::Stage(format!(
                "stage {} already exists; stage {k} outputs are frozen",
                k + 1
            )));
        }
        let outputs = load_outputs(outputs_path)?;
        let rows = self.stage_rows(&stage)?;
        check_ids(
            rows.iter().map(|r| r.id.as_str()),
            outputs.keys().map(String::as_str),
        )?;
        let rel = stage_dir(k).join(OUTPUTS_FILE);
        let dest = self.dir.join(&rel);
        fs::copy(outputs_path, &dest).map_err(|e| Error::io(&dest, e))?;
        stage.outputs = Some(rel);
        stage.scores = None;
        self.save_stage(&stage)?;
        Ok(dest)
    }

    /// Scores the first and second parts of stage `k`'s outputs, records them
    /// in the manifest and writes the stage report.
    pub fn score_stage(&self, k: usize) -> Result<EvalReport> {
        let mut stage = self.stage(k)?;
        let outputs_rel = stage
            .outputs
            .as_ref()
            .ok_or_else(|| Error::Stage(format!("stage {k} has no ingested outputs")))?;
        let outputs = load_outputs(&self.dir.join(outputs_rel))?;
        let rows = self.stage_rows(&stage)?;
        let report = evaluate(
            &rows,
            &outputs,
            &self.settings.score_options(format!("stage-{k}")),
        )?;
        let part = |p| {
            report
                .block(p)
                .map(|b| b.parent.clone())
                .expect("separator reports carry both parts")
        };
        stage.scores = Some(StageScores {
            first: part(Part::First),
            second: part(Part::Second),
        });
        write(
            &self.dir.join(stage_dir(k)).join(REPORT_FILE),
            &report.to_json(),
        )?;
        self.save_stage(&stage)?;
        Ok(report)
    }

    pub fn status(&self) -> Result<Status> {
        let stages = self.stages()?;
        let count = stages.len();
        let pending = stages.iter().find(|s| s.scores.is_none()).map(|s| {
            if s.outputs.is_none() {
                format!("stage {} awaits model outputs", s.stage_index)
            } else {
                format!("stage {} awaits scoring", s.stage_index)
            }
        });
        let scored: Vec<PipelineStage> = stages
            .into_iter()
            .take_while(|s| s.scores.is_some())
            .collect();
        let history = StageHistory::new(scored)?;
        let first_part_f1 = history.first_part_f1()?;
        let decision = if first_part_f1.is_empty() {
            None
        } else {
            Some(should_continue(&history)?)
        };
        Ok(Status {
            stages: count,
            first_part_f1,
            decision,
            pending,
        })
    }
}
