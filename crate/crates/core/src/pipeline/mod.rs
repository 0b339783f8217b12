//! Extract-stage plumbing around external sentence scorers.
//!
//! Long encounters are cut into token-bounded [`Segment`]s, an external model
//! scores each segment's sentences, [`merge_scores`] stitches the scores back
//! into source order, and a score cutoff tuned with [`sweep_threshold`] turns
//! scores into extractive summaries.

mod baselines;
mod chunk;
mod cutoff;

use serde::{Deserialize, Serialize};

use crate::sections::SectionName;
use crate::text::SentenceKey;

pub use baselines::{oracle_summary, rule_based_summary, ORACLE_SYSTEM, RULE_BASED_SYSTEM};
pub use chunk::{
    chunk_encounter, merge_scores, ChunkConfig, OverflowPolicy, Segment, SegmentSentence,
};
pub use cutoff::{
    apply_cutoff, postprocess, sweep_threshold, threshold_grid, ExtractiveSummary, SweepInstance,
    SweepPoint, ThresholdSweepResult, MAX_THRESHOLD_CANDIDATES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub key: SentenceKey,
    pub score: f64,
    pub text: String,
}

/// Segments-file record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub segment_id: String,
    pub encounter_id: String,
    pub sentences: Vec<SegmentEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub doc: usize,
    pub sent: usize,
    pub text: String,
}

/// Scores-file record, one per scored segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub segment_id: String,
    pub scores: Vec<ScoreEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub doc: usize,
    pub sent: usize,
    pub score: f64,
}

/// Merged per-encounter scores, as written by `merge-scores`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedRecord {
    pub encounter_id: String,
    pub scores: Vec<MergedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedEntry {
    pub doc: usize,
    pub sent: usize,
    pub score: f64,
    pub text: String,
}

impl MergedRecord {
    pub fn new(encounter_id: &str, scored: &[ScoredSentence]) -> Self {
        Self {
            encounter_id: encounter_id.to_string(),
            scores: scored
                .iter()
                .map(|s| MergedEntry {
                    doc: s.key.doc(),
                    sent: s.key.sent(),
                    score: s.score,
                    text: s.text.clone(),
                })
                .collect(),
        }
    }

    pub fn scored(&self) -> Vec<ScoredSentence> {
        self.scores
            .iter()
            .map(|e| ScoredSentence {
                key: SentenceKey::new(e.doc, e.sent),
                score: e.score,
                text: e.text.clone(),
            })
            .collect()
    }
}

/// System summary record, shared by every producer and by `evaluate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub encounter_id: String,
    pub section: SectionName,
    pub system: String,
    pub text: String,
}
