//! Corpus evaluation reports: BLEU and PARENT side by side, optionally split
//! into first and second parts of each output.
//!
//! JSON and TSV renderings print every float with six decimals, so identical
//! inputs give byte-identical files.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::bleu::{corpus_bleu, BleuConfig, BleuScore};
use crate::corpus::CorpusRow;
use crate::error::{Error, Result};
use crate::parent::{
    aggregate, check_ids, score_examples, CorpusScore, Example, Execution, LambdaMode, ParentConfig,
};
use crate::proedit::{extract_parts, SepHistogram};
use crate::split::ManySepSecond;
use crate::textcore::{TokenSeq, Tokenizer};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version tag of the scoring conventions; bump when any metric definition
/// changes.
pub const METRIC_CONVENTIONS: &str =
    "parent-1 (word-overlap entailment, geometric mean over orders, lambda from reference table recall); bleu-1 (corpus, clipped, exp brevity penalty)";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    pub label: String,
    pub tokenizer: Tokenizer,
    pub parent: ParentConfig,
    pub bleu: BleuConfig,
    /// Split outputs on this separator and score each part.
    pub sep: Option<String>,
    pub many_sep_second: ManySepSecond,
    pub execution: Execution,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            label: "corpus".into(),
            tokenizer: Tokenizer::Whitespace,
            parent: ParentConfig::default(),
            bleu: BleuConfig::default(),
            sep: None,
            many_sep_second: ManySepSecond::First,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub toolkit_version: String,
    pub metric_conventions: String,
    pub tokenizer: String,
    pub entailment: String,
    pub n_max: usize,
    pub order_weights: String,
    pub lambda: String,
    pub bleu_smoothing: String,
    pub sep: Option<String>,
    pub many_sep_second: ManySepSecond,
}

impl Conventions {
    pub fn from_options(opts: &ScoreOptions) -> Self {
        Self {
            toolkit_version: TOOLKIT_VERSION.into(),
            metric_conventions: METRIC_CONVENTIONS.into(),
            tokenizer: opts.tokenizer.name().into(),
            entailment: "word-overlap".into(),
            n_max: opts.parent.n_max,
            order_weights: match &opts.parent.order_weights {
                None => "uniform".into(),
                Some(w) => w
                    .iter()
                    .map(|x| format!("{x}"))
                    .collect::<Vec<_>>()
                    .join(","),
            },
            lambda: match opts.parent.lambda {
                LambdaMode::Auto => "auto".into(),
                LambdaMode::Fixed(l) => format!("fixed:{l}"),
            },
            bleu_smoothing: match opts.bleu.smoothing {
                None => "off".into(),
                Some(eps) => format!("epsilon:{eps}"),
            },
            sep: opts.sep.clone(),
            many_sep_second: opts.many_sep_second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Whole,
    First,
    Second,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::Whole => "whole",
            Part::First => "first",
            Part::Second => "second",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBlock {
    pub part: Part,
    pub bleu: BleuScore,
    pub parent: CorpusScore,
    pub mean_generation_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label: String,
    pub conventions: Conventions,
    pub n_instances: usize,
    pub reference_length: f64,
    pub sep_histogram: Option<SepHistogram>,
    pub blocks: Vec<ReportBlock>,
}

impl EvalReport {
    pub fn block(&self, part: Part) -> Option<&ReportBlock> {
        self.blocks.iter().find(|b| b.part == part)
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&JsonReport::from(self)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "label\tpart\tbleu\tprecision\trecall\tf1\trecall_vs_reference\trecall_vs_table\tlambda\tmean_length\treference_length\tn_instances\n",
        );
        for b in &self.blocks {
            let p = &b.parent;
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                self.label,
                b.part.name(),
                b.bleu.score,
                p.mean_precision,
                p.mean_recall,
                p.mean_f1,
                p.mean_recall_vs_reference,
                p.mean_recall_vs_table,
                p.mean_lambda,
                b.mean_generation_length,
                self.reference_length,
                self.n_instances
            )
            .expect("writing to a String");
        }
        out
    }
}

fn mean_len<'a>(seqs: impl Iterator<Item = &'a TokenSeq>, n: usize) -> f64 {
    seqs.map(|s| s.len()).sum::<usize>() as f64 / n as f64
}

fn score_block(
    part: Part,
    rows: &[CorpusRow],
    examples: &[Example],
    generations: &HashMap<String, TokenSeq>,
    opts: &ScoreOptions,
) -> Result<ReportBlock> {
    let scores = score_examples(examples, generations, &opts.parent, opts.execution)?;
    let ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
    let parent = aggregate(&ids, &scores)?;
    let pairs: Vec<(&TokenSeq, &TokenSeq)> = examples
        .iter()
        .map(|e| (&generations[&e.id], &e.reference))
        .collect();
    let bleu = corpus_bleu(&pairs, &opts.bleu)?;
    Ok(ReportBlock {
        part,
        bleu,
        parent,
        mean_generation_length: mean_len(generations.values(), generations.len()),
    })
}

/// Scores `outputs` against `rows`. Id sets must match exactly.
pub fn evaluate(
    rows: &[CorpusRow],
    outputs: &BTreeMap<String, String>,
    opts: &ScoreOptions,
) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    opts.parent.validate()?;
    check_ids(
        rows.iter().map(|r| r.id.as_str()),
        outputs.keys().map(String::as_str),
    )?;

    let tok = opts.tokenizer;
    let examples: Vec<_> = rows.iter().map(|r| r.example(tok)).collect();
    let reference_length = mean_len(examples.iter().map(|e| &e.reference), examples.len());

    let (blocks, sep_histogram) = match &opts.sep {
        None => {
            let gens: HashMap<String, TokenSeq> = outputs
                .iter()
                .map(|(id, o)| (id.clone(), tok.tokenize(o)))
                .collect();
            (
                vec![score_block(Part::Whole, rows, &examples, &gens, opts)?],
                None,
            )
        }
        Some(sep) => {
            if sep.is_empty() {
                return Err(Error::InvalidConfig("separator must be non-empty".into()));
            }
            let (parts, hist) = extract_parts(outputs, sep, opts.many_sep_second);
            let first: HashMap<String, TokenSeq> = parts
                .iter()
                .map(|(id, s)| (id.clone(), tok.tokenize(&s.first)))
                .collect();
            let second: HashMap<String, TokenSeq> = parts
                .iter()
                .map(|(id, s)| (id.clone(), tok.tokenize(&s.second)))
                .collect();
            (
                vec![
                    score_block(Part::First, rows, &examples, &first, opts)?,
                    score_block(Part::Second, rows, &examples, &second, opts)?,
                ],
                Some(hist),
            )
        }
    };

    Ok(EvalReport {
        label: opts.label.clone(),
        conventions: Conventions::from_options(opts),
        n_instances: rows.len(),
        reference_length,
        sep_histogram,
        blocks,
    })
}

/// Float rendered with exactly six decimals.
#[derive(Debug, Clone, Copy)]
struct Fixed6(f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let text = if self.0.is_finite() {
            format!("{:.6}", self.0)
        } else {
            "null".to_owned()
        };
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    label: &'a str,
    conventions: &'a Conventions,
    n_instances: usize,
    reference_length: Fixed6,
    sep_histogram: Option<SepHistogram>,
    blocks: Vec<JsonBlock>,
}

#[derive(Serialize)]
struct JsonBlock {
    part: Part,
    bleu: JsonBleu,
    parent: JsonParent,
    mean_generation_length: Fixed6,
}

#[derive(Serialize)]
struct JsonBleu {
    score: Fixed6,
    per_n_precisions: Vec<Option<Fixed6>>,
    brevity_penalty: Fixed6,
    hyp_len: u64,
    ref_len: u64,
}

#[derive(Serialize)]
struct JsonParent {
    precision: Fixed6,
    recall: Fixed6,
    f1: Fixed6,
    recall_vs_reference: Fixed6,
    recall_vs_table: Fixed6,
    lambda: Fixed6,
    n_instances: usize,
}

impl<'a> From<&'a EvalReport> for JsonReport<'a> {
    fn from(r: &'a EvalReport) -> Self {
        Self {
            label: &r.label,
            conventions: &r.conventions,
            n_instances: r.n_instances,
            reference_length: Fixed6(r.reference_length),
            sep_histogram: r.sep_histogram,
            blocks: r
                .blocks
                .iter()
                .map(|b| JsonBlock {
                    part: b.part,
                    bleu: JsonBleu {
                        score: Fixed6(b.bleu.score),
                        per_n_precisions: b
                            .bleu
                            .per_n_precisions
                            .iter()
                            .map(|p| p.map(Fixed6))
                            .collect(),
                        brevity_penalty: Fixed6(b.bleu.brevity_penalty),
                        hyp_len: b.bleu.hyp_len,
                        ref_len: b.bleu.ref_len,
                    },
                    parent: JsonParent {
                        precision: Fixed6(b.parent.mean_precision),
                        recall: Fixed6(b.parent.mean_recall),
                        f1: Fixed6(b.parent.mean_f1),
                        recall_vs_reference: Fixed6(b.parent.mean_recall_vs_reference),
                        recall_vs_table: Fixed6(b.parent.mean_recall_vs_table),
                        lambda: Fixed6(b.parent.mean_lambda),
                        n_instances: b.parent.n_instances,
                    },
                    mean_generation_length: Fixed6(b.mean_generation_length),
                })
                .collect(),
        }
    }
}
