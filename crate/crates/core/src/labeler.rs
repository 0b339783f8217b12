//! Oracle extraction and pseudo sentence-pair labels.
//!
//! Both walk the reference sentence by sentence and pick the single best
//! source sentence for each, scanning the whole pool every time: a source
//! sentence may serve several reference sentences. Ties go to the earliest
//! source position `(doc_index, sent_index)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rouge::{rouge_l, RougeScore};
use crate::sections::SectionName;
use crate::text::{Sentence, SentenceKey};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePick {
    pub reference_index: usize,
    pub source: SentenceKey,
    pub rouge_l_f1: f64,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleExtraction {
    /// One pick per reference sentence, in reference order.
    pub picks: Vec<OraclePick>,
}

impl OracleExtraction {
    /// Picked source sentences joined by newlines, in pick order.
    pub fn summary(&self) -> String {
        self.picks
            .iter()
            .map(|p| p.source_text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoPair {
    pub source: SentenceKey,
    pub reference_index: usize,
    pub rouge_l_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoPairSet {
    pub pairs: Vec<PseudoPair>,
    /// Source sentences appearing in at least one pair.
    pub positives: BTreeSet<SentenceKey>,
}

/// Index of the best-scoring source sentence; the earliest key wins ties.
fn best_match<F>(reference: &Sentence, source: &[Sentence], score: F) -> (usize, RougeScore)
where
    F: Fn(&RougeScore) -> f64,
{
    let ref_toks = reference.surfaces();
    let mut best: Option<(usize, RougeScore)> = None;
    for (i, cand) in source.iter().enumerate() {
        let s = rouge_l(&cand.surfaces(), &ref_toks);
        let better = match &best {
            None => true,
            Some((j, b)) => {
                let (new, old) = (score(&s), score(b));
                new > old || (new == old && cand.key() < source[*j].key())
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    best.expect("source pool checked non-empty")
}

fn check_inputs(reference: &[Sentence], source: &[Sentence]) -> Result<()> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if source.is_empty() {
        return Err(Error::EmptySourcePool);
    }
    Ok(())
}

/// Greedy per-reference-sentence argmax of ROUGE-L F1.
pub fn oracle_extract(reference: &[Sentence], source: &[Sentence]) -> Result<OracleExtraction> {
    check_inputs(reference, source)?;
    let picks = reference
        .iter()
        .enumerate()
        .map(|(r, sent)| {
            let (i, s) = best_match(sent, source, |s| s.f1);
            OraclePick {
                reference_index: r,
                source: source[i].key(),
                rouge_l_f1: s.f1,
                source_text: source[i].raw_text.clone(),
            }
        })
        .collect();
    Ok(OracleExtraction { picks })
}

/// Greedy per-reference-sentence argmax of ROUGE-L recall.
pub fn build_pseudo_pairs(reference: &[Sentence], source: &[Sentence]) -> Result<PseudoPairSet> {
    check_inputs(reference, source)?;
    let pairs: Vec<PseudoPair> = reference
        .iter()
        .enumerate()
        .map(|(r, sent)| {
            let (i, s) = best_match(sent, source, |s| s.recall);
            PseudoPair {
                source: source[i].key(),
                reference_index: r,
                rouge_l_recall: s.recall,
            }
        })
        .collect();
    let positives = pairs.iter().map(|p| p.source).collect();
    Ok(PseudoPairSet { pairs, positives })
}

/// Labels-file JSON Lines record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub encounter_id: String,
    pub section: SectionName,
    pub positives: Vec<SentenceKey>,
    pub pairs: Vec<LabelPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPair {
    pub src: SentenceKey,
    #[serde(rename = "ref")]
    pub reference: usize,
    pub score: f64,
}

impl LabelRecord {
    pub fn new(encounter_id: &str, section: SectionName, set: &PseudoPairSet) -> Self {
        Self {
            encounter_id: encounter_id.to_string(),
            section,
            positives: set.positives.iter().copied().collect(),
            pairs: set
                .pairs
                .iter()
                .map(|p| LabelPair {
                    src: p.source,
                    reference: p.reference_index,
                    score: p.rouge_l_recall,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{split_sentences, Tokenizer};

    fn pool(docs: &[&str]) -> Vec<Sentence> {
        Tokenizer::default().sentence_pool(docs.iter().copied())
    }

    #[test]
    fn identical_sentence_is_picked() {
        let source = pool(&["pt has fever. chest pain on exertion.", "no cough today."]);
        let reference = split_sentences("Chest pain on exertion.");
        let out = oracle_extract(&reference, &source).unwrap();
        assert_eq!(out.picks.len(), 1);
        assert_eq!(out.picks[0].source, SentenceKey::new(0, 1));
        assert_eq!(out.picks[0].rouge_l_f1, 1.0);
        assert_eq!(out.summary(), "chest pain on exertion.");
    }

    #[test]
    fn ties_go_to_earliest_position() {
        let source = pool(&["alpha beta.", "beta gamma.", "beta delta."]);
        let reference = split_sentences("beta.");
        let out = oracle_extract(&reference, &source).unwrap();
        assert_eq!(out.picks[0].source, SentenceKey::new(0, 0));
        // the pool order does not matter, only the key
        let mut reversed = source.clone();
        reversed.reverse();
        let out = oracle_extract(&reference, &reversed).unwrap();
        assert_eq!(out.picks[0].source, SentenceKey::new(0, 0));
    }

    #[test]
    fn empty_inputs_are_errors() {
        let source = pool(&["a."]);
        assert!(matches!(
            oracle_extract(&[], &source),
            Err(Error::EmptyReference)
        ));
        let reference = split_sentences("a.");
        assert!(matches!(
            oracle_extract(&reference, &[]),
            Err(Error::EmptySourcePool)
        ));
        assert!(matches!(
            build_pseudo_pairs(&reference, &[]),
            Err(Error::EmptySourcePool)
        ));
    }

    #[test]
    fn single_pair() {
        let source = pool(&["pt stable."]);
        let reference = split_sentences("stable.");
        let set = build_pseudo_pairs(&reference, &source).unwrap();
        assert_eq!(set.pairs.len(), 1);
        assert_eq!(set.positives.len(), 1);
        assert_eq!(set.pairs[0].rouge_l_recall, 1.0);
    }

    #[test]
    fn shared_source_collapses_to_one_label() {
        let source = pool(&["fever and cough resolved.", "walked today."]);
        let reference = split_sentences("fever resolved. cough resolved.");
        let set = build_pseudo_pairs(&reference, &source).unwrap();
        assert_eq!(set.pairs.len(), 2);
        assert_eq!(set.positives.len(), 1);
        let rec = LabelRecord::new("e1", SectionName::BriefHospitalCourse, &set);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"encounter_id":"e1","section":"brief_hospital_course","positives":[[0,0]],"pairs":[{"src":[0,0],"ref":0,"score":1.0},{"src":[0,0],"ref":1,"score":1.0}]}"#
        );
    }

    #[test]
    fn recall_and_f1_can_disagree() {
        // the long sentence covers the reference fully, the short one is precise
        let source = pool(&["htn.", "history of htn and dm and cad and chf."]);
        let reference = split_sentences("htn and dm.");
        let f1 = oracle_extract(&reference, &source).unwrap();
        let rec = build_pseudo_pairs(&reference, &source).unwrap();
        assert_eq!(f1.picks[0].source, SentenceKey::new(0, 0));
        assert_eq!(rec.pairs[0].source, SentenceKey::new(1, 0));
    }

    #[test]
    fn f1_and_recall_agree_when_argmaxes_coincide() {
        let source = pool(&[
            "no known allergies.",
            "lives with wife in apartment.",
            "quit smoking.",
        ]);
        let reference = split_sentences("lives with wife in apartment. quit smoking.");
        let f1 = oracle_extract(&reference, &source).unwrap();
        let rec = build_pseudo_pairs(&reference, &source).unwrap();
        let f1_keys: Vec<_> = f1.picks.iter().map(|p| p.source).collect();
        let rec_keys: Vec<_> = rec.pairs.iter().map(|p| p.source).collect();
        assert_eq!(f1_keys, rec_keys);
    }
}
