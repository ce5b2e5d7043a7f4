//! Evaluation and dataset tooling for table-to-text generation.
//!
//! - [`parent`]: the PARENT metric (entailed precision, reference and table
//!   recall) and corpus aggregation.
//! - [`bleu`]: corpus BLEU-4.
//! - [`split`] and [`proedit`]: splitting separator-joined outputs and building
//!   progressive-edit training sets stage by stage.
//! - [`corpus`], [`report`] and [`pipeline`]: JSONL I/O, reports and the
//!   on-disk stage driver used by the `proedit` binary.

pub mod bleu;
pub mod corpus;
pub mod error;
pub mod parent;
pub mod pipeline;
pub mod proedit;
pub mod report;
pub mod split;
pub mod table;
pub mod textcore;

pub use error::{Error, Result};
