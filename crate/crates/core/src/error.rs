use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("n-gram order must be at least 1")]
    ZeroNgramOrder,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("need at least {needed} subjects to fill every split, found {found}")]
    TooFewSubjects { needed: usize, found: usize },
    #[error("invalid header rules: {0}")]
    InvalidRules(String),
    #[error("unknown section name `{0}`")]
    UnknownSection(String),
    #[error("reference has no sentences")]
    EmptyReference,
    #[error("source pool has no sentences")]
    EmptySourcePool,
    #[error("segment {segment_id}: {reason}")]
    ScoreMismatch { segment_id: String, reason: String },
    #[error("no validation scores to sweep over")]
    EmptySweep,
    #[error("gazetteer has no terms")]
    EmptyGazetteer,
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("no system summaries found")]
    NoSystems,
    #[error("nothing to evaluate")]
    NoInstances,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
