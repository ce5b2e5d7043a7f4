//! Splitting a model output into a first and a second part around a literal
//! separator string.
//!
//! | separators | first     | second                         |
//! |------------|-----------|--------------------------------|
//! | 0          | whole     | whole                          |
//! | 1          | segment 1 | segment 2                      |
//! | 2 or more  | segment 1 | segment 1 (see [`ManySepSecond`]) |
//!
//! Segments are whitespace-trimmed. Matching is by substring, not by token.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOutput {
    pub first: String,
    pub second: String,
    pub sep_count: usize,
}

/// What the second part is when the separator occurs more than once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManySepSecond {
    /// Reuse the first segment.
    #[default]
    First,
    /// Use the second segment.
    Second,
}

pub fn split_output(text: &str, sep: &str) -> SplitOutput {
    split_output_with(text, sep, ManySepSecond::First)
}

/// # Panics
///
/// If `sep` is empty.
pub fn split_output_with(text: &str, sep: &str, many: ManySepSecond) -> SplitOutput {
    assert!(!sep.is_empty(), "separator must be non-empty");
    let segments: Vec<&str> = text.split(sep).map(str::trim).collect();
    let sep_count = segments.len() - 1;
    let (first, second) = match (sep_count, many) {
        (0, _) => (segments[0], segments[0]),
        (1, _) | (_, ManySepSecond::Second) => (segments[0], segments[1]),
        (_, ManySepSecond::First) => (segments[0], segments[0]),
    };
    SplitOutput {
        first: first.to_owned(),
        second: second.to_owned(),
        sep_count,
    }
}
