//! Building blocks for clinical encounter summarization experiments.
//!
//! The crate covers the whole non-neural side of an extract-then-abstract
//! setup over clinical notes:
//!
//! - [`corpus`]: note ingestion, encounter assembly and subject-level splits.
//! - [`sections`]: rule-based discharge-summary section extraction.
//! - [`text`]: tokenization, sentence segmentation and n-grams.
//! - [`rouge`]: ROUGE-N and ROUGE-L.
//! - [`labeler`]: oracle extraction and pseudo sentence-pair labels.
//! - [`pipeline`]: chunking, score merging, cutoff sweeping and
//!   extractive post-processing.
//! - [`faithfulness`]: entity-overlap faithfulness and hallucination rate.
//! - [`dataset`] and [`report`]: on-disk dataset layout, evaluation and
//!   report emission used by the `clinsum` binary.

pub mod corpus;
pub mod dataset;
pub mod error;
pub mod faithfulness;
pub mod jsonl;
pub mod labeler;
pub mod pipeline;
pub mod report;
pub mod rouge;
pub mod sections;
pub mod text;

pub use error::{Error, Result};
