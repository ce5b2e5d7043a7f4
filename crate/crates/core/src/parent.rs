//! PARENT: entailed n-gram precision and a recall that blends reference recall
//! with table recall.
//!
//! Conventions:
//! - entailment uses the word-overlap model, `w(g)` = fraction of the tokens of
//!   `g` found anywhere in the table (attributes and values);
//! - precision and reference recall are combined over orders `1..=n_max` with a
//!   geometric mean, skipping orders that have no n-grams to score;
//! - table recall averages LCS coverage of each record's value string;
//! - `lambda` defaults to `1 - table_recall(reference)`, so a reference that
//!   already covers the table pushes weight onto reference recall.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;
use crate::textcore::{lcs_length, ngrams, weighted_geometric_mean, TokenSeq};

/// One scoring unit: a table, its reference text and a candidate generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub table: Table,
    pub reference: TokenSeq,
    pub generation: TokenSeq,
}

/// A table and its reference, waiting for a generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub table: Table,
    pub reference: TokenSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaMode {
    /// Per instance, from how much of the table the reference covers.
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParentConfig {
    pub n_max: usize,
    pub lambda: LambdaMode,
    /// Weight of each order `1..=n_max` in the geometric means; uniform when
    /// `None`.
    pub order_weights: Option<Vec<f64>>,
}

impl Default for ParentConfig {
    fn default() -> Self {
        Self {
            n_max: 4,
            lambda: LambdaMode::Auto,
            order_weights: None,
        }
    }
}

impl ParentConfig {
    pub fn with_n_max(n_max: usize) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::ZeroOrder);
        }
        if let LambdaMode::Fixed(l) = self.lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidConfig(format!(
                    "lambda {l} is outside [0, 1]"
                )));
            }
        }
        if let Some(w) = &self.order_weights {
            if w.len() != self.n_max {
                return Err(Error::InvalidConfig(format!(
                    "{} order weights given for n_max {}",
                    w.len(),
                    self.n_max
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
                return Err(Error::InvalidConfig(
                    "order weights must be non-negative with a positive sum".into(),
                ));
            }
        }
        Ok(())
    }

    fn weight(&self, n: usize) -> f64 {
        self.order_weights.as_ref().map_or(1.0, |w| w[n - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParentScore {
    pub precision: f64,
    pub recall: f64,
    pub recall_vs_reference: f64,
    pub recall_vs_table: f64,
    pub lambda: f64,
    pub f1: f64,
    /// `(n, precision at order n)`, `None` where the generation has no
    /// n-grams of that order.
    pub per_n_precision: Vec<(usize, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub mean_recall_vs_reference: f64,
    pub mean_recall_vs_table: f64,
    pub mean_lambda: f64,
    pub n_instances: usize,
}

/// Word-overlap entailment of `gram` by a table's token set.
fn overlap(gram: &[String], table_tokens: &HashSet<&str>) -> f64 {
    let hits = gram
        .iter()
        .filter(|t| table_tokens.contains(t.as_str()))
        .count();
    hits as f64 / gram.len() as f64
}

/// Fraction of the tokens of `gram` that occur somewhere in `table`.
pub fn entailment_prob(gram: &[String], table: &Table) -> f64 {
    if gram.is_empty() {
        return 0.0;
    }
    overlap(gram, &table.token_set())
}

fn precision_n_with(
    generation: &[String],
    reference: &[String],
    table_tokens: &HashSet<&str>,
    n: usize,
) -> Result<Option<f64>> {
    let gen = ngrams(generation, n)?;
    if gen.is_empty() {
        return Ok(None);
    }
    let reference = ngrams(reference, n)?;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (gram, count) in gen.iter() {
        let count = count as f64;
        let in_reference = reference.get(gram) as f64;
        let p_ref = in_reference.min(count) / count;
        let credit = p_ref + (1.0 - p_ref) * overlap(gram, table_tokens);
        numerator += credit * count;
        denominator += count;
    }
    Ok(Some(numerator / denominator))
}

/// Entailed precision at order `n`; `None` when the generation is shorter
/// than `n`.
pub fn precision_n(
    generation: &TokenSeq,
    reference: &TokenSeq,
    table: &Table,
    n: usize,
) -> Result<Option<f64>> {
    precision_n_with(generation, reference, &table.token_set(), n)
}

fn reference_recall_n(
    generation: &[String],
    reference: &[String],
    table_tokens: &HashSet<&str>,
    n: usize,
) -> Result<Option<f64>> {
    let reference = ngrams(reference, n)?;
    let gen = ngrams(generation, n)?;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (gram, count) in reference.iter() {
        let w = overlap(gram, table_tokens);
        numerator += count.min(gen.get(gram)) as f64 * w;
        denominator += count as f64 * w;
    }
    Ok((denominator > 0.0).then(|| numerator / denominator))
}

fn reference_recall_with(
    generation: &[String],
    reference: &[String],
    table_tokens: &HashSet<&str>,
    cfg: &ParentConfig,
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut values = Vec::with_capacity(cfg.n_max);
    let mut weights = Vec::with_capacity(cfg.n_max);
    for n in 1..=cfg.n_max {
        if let Some(r) = reference_recall_n(generation, reference, table_tokens, n)? {
            values.push(r);
            weights.push(cfg.weight(n));
        }
    }
    if values.is_empty() || weights.iter().all(|w| *w == 0.0) {
        return Ok(if generation == reference { 1.0 } else { 0.0 });
    }
    weighted_geometric_mean(&values, &weights)
}

/// Entailment-weighted clipped recall of the reference's n-grams.
///
/// When no order has entailed reference n-grams, this is 1 for an exact match
/// and 0 otherwise.
pub fn reference_recall(
    generation: &TokenSeq,
    reference: &TokenSeq,
    table: &Table,
    cfg: &ParentConfig,
) -> Result<f64> {
    cfg.validate()?;
    reference_recall_with(generation, reference, &table.token_set(), cfg)
}

/// Mean over records of `LCS(value, text) / |value|`.
pub fn table_recall(text: &[String], table: &Table) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let sum: f64 = table
        .records()
        .iter()
        .map(|r| lcs_length(r.value(), text) as f64 / r.value().len() as f64)
        .sum();
    Ok(sum / table.len() as f64)
}

/// `1 - table_recall(reference)`, clamped to `[0, 1]`.
pub fn lambda_for(reference: &[String], table: &Table) -> Result<f64> {
    Ok((1.0 - table_recall(reference, table)?).clamp(0.0, 1.0))
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores one generation against its reference and table.
pub fn score(
    table: &Table,
    reference: &TokenSeq,
    generation: &TokenSeq,
    cfg: &ParentConfig,
) -> Result<ParentScore> {
    cfg.validate()?;
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let table_tokens = table.token_set();

    let mut per_n_precision = Vec::with_capacity(cfg.n_max);
    let mut present = Vec::new();
    let mut weights = Vec::new();
    for n in 1..=cfg.n_max {
        let p = precision_n_with(generation, reference, &table_tokens, n)?;
        if let Some(p) = p {
            present.push(p);
            weights.push(cfg.weight(n));
        }
        per_n_precision.push((n, p));
    }
    let precision = if present.is_empty() || weights.iter().all(|w| *w == 0.0) {
        0.0
    } else {
        weighted_geometric_mean(&present, &weights)?
    };

    let recall_vs_reference = reference_recall_with(generation, reference, &table_tokens, cfg)?;
    let recall_vs_table = table_recall(generation, table)?;
    let lambda = match cfg.lambda {
        LambdaMode::Auto => lambda_for(reference, table)?,
        LambdaMode::Fixed(l) => l,
    };
    let recall = recall_vs_reference.powf(1.0 - lambda) * recall_vs_table.powf(lambda);

    Ok(ParentScore {
        precision,
        recall,
        recall_vs_reference,
        recall_vs_table,
        lambda,
        f1: f1(precision, recall),
        per_n_precision,
    })
}

pub fn parent_instance(instance: &Instance, cfg: &ParentConfig) -> Result<ParentScore> {
    score(
        &instance.table,
        &instance.reference,
        &instance.generation,
        cfg,
    )
}

/// Checks that example ids are unique and match the generation ids exactly.
pub fn check_ids<'a, 'b>(
    example_ids: impl IntoIterator<Item = &'a str>,
    generation_ids: impl IntoIterator<Item = &'b str>,
) -> Result<()> {
    let generation_ids: HashSet<&str> = generation_ids.into_iter().collect();
    let mut seen = HashSet::new();
    let mut missing = Vec::new();
    for id in example_ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_owned()));
        }
        if !generation_ids.contains(id) {
            missing.push(id.to_owned());
        }
    }
    let mut extra: Vec<String> = generation_ids
        .iter()
        .filter(|k| !seen.contains(*k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort();
        extra.sort();
        return Err(Error::IdMismatch { missing, extra });
    }
    Ok(())
}

/// Per-instance scores in the order of `examples`.
pub fn score_examples(
    examples: &[Example],
    generations: &HashMap<String, TokenSeq>,
    cfg: &ParentConfig,
    execution: Execution,
) -> Result<Vec<ParentScore>> {
    cfg.validate()?;
    check_ids(
        examples.iter().map(|e| e.id.as_str()),
        generations.keys().map(String::as_str),
    )?;
    let one = |e: &Example| score(&e.table, &e.reference, &generations[&e.id], cfg);
    match execution {
        Execution::Parallel => examples.par_iter().map(one).collect(),
        Execution::Sequential => examples.iter().map(one).collect(),
    }
}

/// Means of per-instance scores, reduced in id order.
pub fn aggregate(ids: &[&str], scores: &[ParentScore]) -> Result<CorpusScore> {
    if scores.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    assert_eq!(ids.len(), scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]));
    let mean = |field: fn(&ParentScore) -> f64| {
        let mut sum = NeumaierSum::default();
        for &i in &order {
            sum.add(field(&scores[i]));
        }
        sum.total() / scores.len() as f64
    };
    Ok(CorpusScore {
        mean_precision: mean(|s| s.precision),
        mean_recall: mean(|s| s.recall),
        mean_f1: mean(|s| s.f1),
        mean_recall_vs_reference: mean(|s| s.recall_vs_reference),
        mean_recall_vs_table: mean(|s| s.recall_vs_table),
        mean_lambda: mean(|s| s.lambda),
        n_instances: scores.len(),
    })
}

pub fn parent_corpus(
    examples: &[Example],
    generations: &HashMap<String, TokenSeq>,
    cfg: &ParentConfig,
) -> Result<CorpusScore> {
    parent_corpus_with(examples, generations, cfg, Execution::Parallel)
}

pub fn parent_corpus_with(
    examples: &[Example],
    generations: &HashMap<String, TokenSeq>,
    cfg: &ParentConfig,
    execution: Execution,
) -> Result<CorpusScore> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let scores = score_examples(examples, generations, cfg, execution)?;
    let ids: Vec<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    aggregate(&ids, &scores)
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}
