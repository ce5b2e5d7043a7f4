//! Token-level string primitives: tokenization, n-gram multisets and LCS.
//!
//! Every metric in this crate consumes these. The default tokenizer lowercases
//! and splits on unicode whitespace and does nothing else, so punctuation stays
//! attached to words (`"Herculaneum,"` is one token). Metric values depend on
//! this choice; [`Tokenizer::Punct`] is available when a stricter split is
//! wanted.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::BuildHasherDefault;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a sequence from pre-split tokens, rejecting empty tokens and
    /// tokens that contain whitespace.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::InvalidToken(format!("token {i} is empty")));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidToken(format!(
                    "token {i} ({tok:?}) contains whitespace"
                )));
            }
        }
        Ok(Self(tokens))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub(crate) fn push_unchecked(&mut self, tok: String) {
        debug_assert!(!tok.is_empty() && !tok.chars().any(char::is_whitespace));
        self.0.push(tok);
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl AsRef<[String]> for TokenSeq {
    fn as_ref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Tokenization rule applied to raw strings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenizer {
    /// Lowercase, then split on unicode whitespace.
    #[default]
    Whitespace,
    /// Like `Whitespace`, but every punctuation character also becomes its own
    /// token.
    Punct,
}

impl Tokenizer {
    pub fn tokenize(self, text: &str) -> TokenSeq {
        match self {
            Tokenizer::Whitespace => tokenize(text),
            Tokenizer::Punct => tokenize_punct(text),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::Punct => "punct",
        }
    }
}

/// Lowercases `text` and splits it on unicode whitespace.
pub fn tokenize(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    let mut out = TokenSeq::new();
    for tok in lowered.split_whitespace() {
        out.push_unchecked(tok.to_owned());
    }
    out
}

fn tokenize_punct(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    let mut out = TokenSeq::new();
    for word in lowered.split_whitespace() {
        let mut current = String::new();
        for c in word.chars() {
            if c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_ascii()) {
                if !current.is_empty() {
                    out.push_unchecked(std::mem::take(&mut current));
                }
                out.push_unchecked(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push_unchecked(current);
        }
    }
    out
}

/// Multiset of contiguous n-grams of a single order.
///
/// Keys borrow windows of the source sequence. Hashing uses fixed keys, so
/// iteration order depends only on the source sequence and float sums over
/// it are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramCounts<'a> {
    order: usize,
    counts: HashMap<&'a [String], usize, FixedState>,
}

type FixedState = BuildHasherDefault<DefaultHasher>;

impl<'a> NGramCounts<'a> {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Count of `gram`, zero when absent.
    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Number of distinct n-grams.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [String], usize)> + '_ {
        self.counts.iter().map(|(g, c)| (*g, *c))
    }
}

/// Collects every contiguous n-gram of order `n` in `tokens`.
pub fn ngrams(tokens: &[String], n: usize) -> Result<NGramCounts<'_>> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    let mut counts = HashMap::default();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    Ok(NGramCounts { order: n, counts })
}

/// Length of the longest common subsequence of two token sequences.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    // Iterate over the longer sequence so the rows are as short as possible.
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if inner.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; inner.len() + 1];
    let mut curr = vec![0usize; inner.len() + 1];
    for x in outer {
        for (j, y) in inner.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[inner.len()]
}

/// Unweighted geometric mean of values in `[0, 1]`.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyMean);
    }
    check_unit_interval(values)?;
    if values.contains(&0.0) {
        return Ok(0.0);
    }
    let product: f64 = values.iter().product();
    Ok(product.powf(1.0 / values.len() as f64).clamp(0.0, 1.0))
}

/// Weighted geometric mean `prod v_i^(w_i / sum w)`.
///
/// Weights must be non-negative with a positive sum. Values with zero weight
/// do not participate, not even a zero value.
pub fn weighted_geometric_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyMean);
    }
    if values.len() != weights.len() {
        return Err(Error::InvalidConfig(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    check_unit_interval(values)?;
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidConfig(
            "geometric-mean weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig(
            "geometric-mean weights sum to zero".into(),
        ));
    }
    let mut acc = 1.0;
    for (&v, &w) in values.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        acc *= v.powf(w / total);
    }
    Ok(acc.clamp(0.0, 1.0))
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::OutOfRange(*v)),
        None => Ok(()),
    }
}
