//! Corpus-level BLEU-4 with a single reference per segment.
//!
//! Clipped n-gram matches and totals are summed over the corpus before
//! dividing. Orders for which the corpus has no candidate n-grams at all are
//! left out of the geometric mean rather than zeroing the score.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::textcore::{geometric_mean, ngrams};

pub const BLEU_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BleuConfig {
    /// Add-epsilon smoothing: an order with zero matches gets `epsilon` in
    /// place of its match count. Off when `None`. A smoothed score is not
    /// invariant under duplicating the corpus.
    pub smoothing: Option<f64>,
}

impl BleuConfig {
    pub const DEFAULT_EPSILON: f64 = 0.1;

    pub fn smoothed() -> Self {
        Self {
            smoothing: Some(Self::DEFAULT_EPSILON),
        }
    }
}

/// Sufficient statistics; merging is element-wise addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BleuStats {
    pub matches: [u64; BLEU_ORDER],
    pub totals: [u64; BLEU_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn from_pair(generation: &[String], reference: &[String]) -> Self {
        let mut stats = Self {
            hyp_len: generation.len() as u64,
            ref_len: reference.len() as u64,
            ..Self::default()
        };
        for n in 1..=BLEU_ORDER {
            let gen = ngrams(generation, n).expect("order is positive");
            let reference = ngrams(reference, n).expect("order is positive");
            stats.totals[n - 1] = gen.total() as u64;
            stats.matches[n - 1] = gen
                .iter()
                .map(|(g, c)| c.min(reference.get(g)) as u64)
                .sum();
        }
        stats
    }

    pub fn merge(mut self, other: Self) -> Self {
        for i in 0..BLEU_ORDER {
            self.matches[i] += other.matches[i];
            self.totals[i] += other.totals[i];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScore {
    /// In `[0, 100]`.
    pub score: f64,
    /// `None` for orders with no candidate n-grams in the corpus.
    pub per_n_precisions: [Option<f64>; BLEU_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuScore {
    pub fn from_stats(stats: &BleuStats, cfg: &BleuConfig) -> Self {
        let mut per_n = [None; BLEU_ORDER];
        for (i, slot) in per_n.iter_mut().enumerate() {
            let total = stats.totals[i];
            if total == 0 {
                continue;
            }
            let matches = match (stats.matches[i], cfg.smoothing) {
                (0, Some(eps)) => eps,
                (m, _) => m as f64,
            };
            *slot = Some(matches / total as f64);
        }

        let brevity_penalty = if stats.hyp_len == 0 {
            0.0
        } else if stats.hyp_len < stats.ref_len {
            (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
        } else {
            1.0
        };

        let present: Vec<f64> = per_n.iter().flatten().copied().collect();
        let score = match geometric_mean(&present) {
            Ok(mean) => (100.0 * brevity_penalty * mean).clamp(0.0, 100.0),
            Err(_) => 0.0,
        };

        Self {
            score,
            per_n_precisions: per_n,
            brevity_penalty,
            hyp_len: stats.hyp_len,
            ref_len: stats.ref_len,
        }
    }
}

/// Corpus BLEU over `(generation, reference)` pairs.
pub fn corpus_bleu<G, R>(pairs: &[(G, R)], cfg: &BleuConfig) -> Result<BleuScore>
where
    G: AsRef<[String]> + Sync,
    R: AsRef<[String]> + Sync,
{
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let stats = pairs
        .par_iter()
        .map(|(gen, reference)| {
            let reference = reference.as_ref();
            if reference.is_empty() {
                return Err(Error::EmptyReference);
            }
            Ok(BleuStats::from_pair(gen.as_ref(), reference))
        })
        .try_reduce(BleuStats::default, |a, b| Ok(a.merge(b)))?;
    Ok(BleuScore::from_stats(&stats, cfg))
}
