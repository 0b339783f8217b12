use std::collections::{BTreeMap, HashMap};

use super::{ScoreRecord, ScoredSentence, SegmentEntry, SegmentRecord};
use crate::text::{Sentence, SentenceKey};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    /// Cut an over-long sentence into consecutive windows of at most
    /// `max_tokens` tokens, one segment each.
    #[default]
    HardWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub max_tokens: usize,
    pub overflow_policy: OverflowPolicy,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            max_tokens: 1024,
            overflow_policy: OverflowPolicy::HardWindow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSentence {
    pub key: SentenceKey,
    /// Sentence text, or this window's slice of it.
    pub text: String,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub segment_id: String,
    pub encounter_id: String,
    pub sentences: Vec<SegmentSentence>,
    pub token_count: usize,
}

impl Segment {
    pub fn to_record(&self) -> SegmentRecord {
        SegmentRecord {
            segment_id: self.segment_id.clone(),
            encounter_id: self.encounter_id.clone(),
            sentences: self
                .sentences
                .iter()
                .map(|s| SegmentEntry {
                    doc: s.key.doc(),
                    sent: s.key.sent(),
                    text: s.text.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a segment from its wire form; token counts are not stored
    /// on disk and come back as zero.
    pub fn from_record(rec: SegmentRecord) -> Self {
        Self {
            segment_id: rec.segment_id,
            encounter_id: rec.encounter_id,
            sentences: rec
                .sentences
                .into_iter()
                .map(|e| SegmentSentence {
                    key: SentenceKey::new(e.doc, e.sent),
                    text: e.text,
                    tokens: 0,
                })
                .collect(),
            token_count: 0,
        }
    }
}

struct Builder<'a> {
    encounter_id: &'a str,
    segments: Vec<Segment>,
    current: Vec<SegmentSentence>,
    tokens: usize,
}

impl Builder<'_> {
    fn flush(&mut self) {
        if self.current.is_empty() {
            return;
        }
        let id = format!("{}#{}", self.encounter_id, self.segments.len());
        self.segments.push(Segment {
            segment_id: id,
            encounter_id: self.encounter_id.to_string(),
            sentences: std::mem::take(&mut self.current),
            token_count: self.tokens,
        });
        self.tokens = 0;
    }

    fn push(&mut self, s: SegmentSentence) {
        self.tokens += s.tokens;
        self.current.push(s);
    }
}

/// Greedy fill: sentences join the current segment while its token total
/// stays within `max_tokens`. Over-long sentences are hard-windowed.
pub fn chunk_encounter(encounter_id: &str, source: &[Sentence], cfg: &ChunkConfig) -> Vec<Segment> {
    let max = cfg.max_tokens.max(1);
    let mut b = Builder {
        encounter_id,
        segments: Vec::new(),
        current: Vec::new(),
        tokens: 0,
    };
    for sent in source {
        let n = sent.tokens.len();
        if n > max {
            b.flush();
            let OverflowPolicy::HardWindow = cfg.overflow_policy;
            for w in 0..n.div_ceil(max) {
                let (a, z) = (w * max, ((w + 1) * max).min(n));
                // windows tile the sentence text exactly
                let from = if a == 0 {
                    sent.start
                } else {
                    sent.tokens[a].start
                };
                let to = if z == n {
                    sent.end
                } else {
                    sent.tokens[z].start
                };
                b.push(SegmentSentence {
                    key: sent.key(),
                    text: sent.raw_text[from - sent.start..to - sent.start].to_string(),
                    tokens: z - a,
                });
                b.flush();
            }
            continue;
        }
        if b.tokens + n > max {
            b.flush();
        }
        b.push(SegmentSentence {
            key: sent.key(),
            text: sent.raw_text.clone(),
            tokens: n,
        });
    }
    b.flush();
    b.segments
}

/// Stitches per-segment scores back into one source-ordered list for a
/// single encounter. A windowed sentence takes the maximum of its window
/// scores and the concatenation of its window texts.
pub fn merge_scores(segments: &[Segment], scores: &[ScoreRecord]) -> Result<Vec<ScoredSentence>> {
    let mut by_id: HashMap<&str, &ScoreRecord> = HashMap::new();
    for rec in scores {
        if by_id.insert(rec.segment_id.as_str(), rec).is_some() {
            return Err(mismatch(&rec.segment_id, "scored more than once"));
        }
    }
    let mut merged: BTreeMap<SentenceKey, ScoredSentence> = BTreeMap::new();
    for seg in segments {
        let rec = by_id
            .remove(seg.segment_id.as_str())
            .ok_or_else(|| mismatch(&seg.segment_id, "no score list"))?;
        let mut given: HashMap<SentenceKey, f64> = HashMap::new();
        for e in &rec.scores {
            let key = SentenceKey::new(e.doc, e.sent);
            if !e.score.is_finite() {
                return Err(mismatch(
                    &seg.segment_id,
                    &format!("non-finite score for {key:?}"),
                ));
            }
            if given.insert(key, e.score).is_some() {
                return Err(mismatch(
                    &seg.segment_id,
                    &format!("duplicate score for {key:?}"),
                ));
            }
        }
        for s in &seg.sentences {
            let score = given.remove(&s.key).ok_or_else(|| {
                mismatch(&seg.segment_id, &format!("missing score for {:?}", s.key))
            })?;
            merged
                .entry(s.key)
                .and_modify(|m| {
                    m.score = m.score.max(score);
                    m.text.push_str(&s.text);
                })
                .or_insert_with(|| ScoredSentence {
                    key: s.key,
                    score,
                    text: s.text.clone(),
                });
        }
        if let Some(extra) = given.keys().min() {
            return Err(mismatch(
                &seg.segment_id,
                &format!("score for unknown sentence {extra:?}"),
            ));
        }
    }
    if let Some(id) = by_id.keys().min() {
        return Err(mismatch(id, "scores given for an unknown segment"));
    }
    Ok(merged.into_values().collect())
}

fn mismatch(segment_id: &str, reason: &str) -> Error {
    Error::ScoreMismatch {
        segment_id: segment_id.to_string(),
        reason: reason.to_string(),
    }
}
