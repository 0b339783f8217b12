use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ScoredSentence;
use crate::rouge::rouge_l;
use crate::text::{normalize, Tokenizer};
use crate::{Error, Result};

/// Upper bound on the number of thresholds tried by [`sweep_threshold`].
pub const MAX_THRESHOLD_CANDIDATES: usize = 101;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractiveSummary {
    pub sentences: Vec<ScoredSentence>,
}

impl ExtractiveSummary {
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Drops exact duplicates (after lowercasing and whitespace collapsing),
/// keeping the first occurrence and the input order.
pub fn postprocess(extracted: &[ScoredSentence]) -> ExtractiveSummary {
    let mut seen = HashSet::new();
    let sentences = extracted
        .iter()
        .filter(|s| seen.insert(normalize(&s.text)))
        .cloned()
        .collect();
    ExtractiveSummary { sentences }
}

/// Keeps sentences scoring at least `threshold`, in source order, then
/// post-processes them.
pub fn apply_cutoff(scored: &[ScoredSentence], threshold: f64) -> ExtractiveSummary {
    let mut kept: Vec<ScoredSentence> = scored
        .iter()
        .filter(|s| s.score >= threshold)
        .cloned()
        .collect();
    kept.sort_by_key(|s| s.key);
    postprocess(&kept)
}

/// One validation instance: merged scores plus the reference tokens.
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub scored: Vec<ScoredSentence>,
    pub reference_tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub mean_rouge_l_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweepResult {
    /// Ascending by threshold.
    pub candidates: Vec<SweepPoint>,
    pub chosen_threshold: f64,
    pub best_mean_rouge_l_f1: f64,
}

/// Candidate cutoffs: the order statistics at the 0th, 1st, ..., 100th
/// percentile of all observed scores (nearest rank), deduplicated.
pub fn threshold_grid(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    let steps = MAX_THRESHOLD_CANDIDATES - 1;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|k| sorted[((k * last) as f64 / steps as f64).round() as usize])
        .collect();
    grid.dedup();
    grid
}

/// Scored sentences, their tokens and the reference tokens.
type Prepared<'a> = (Vec<ScoredSentence>, Vec<Vec<String>>, &'a [String]);

/// Mean ROUGE-L F1 of cutoff summaries against the references.
fn mean_rouge_l(instances: &[Prepared<'_>], threshold: f64) -> f64 {
    let total: f64 = instances
        .iter()
        .map(|(scored, tokens, reference)| {
            // tokens[i] belongs to scored[i]; rebuild the summary on indices
            let mut idx: Vec<usize> = (0..scored.len())
                .filter(|&i| scored[i].score >= threshold)
                .collect();
            idx.sort_by_key(|&i| scored[i].key);
            let mut seen = HashSet::new();
            let cand: Vec<&str> = idx
                .into_iter()
                .filter(|&i| seen.insert(normalize(&scored[i].text)))
                .flat_map(|i| tokens[i].iter().map(String::as_str))
                .collect();
            let reference: Vec<&str> = reference.iter().map(String::as_str).collect();
            rouge_l(&cand, &reference).f1
        })
        .sum();
    total / instances.len() as f64
}

/// Picks the score cutoff maximizing mean validation ROUGE-L F1; ties go to
/// the smallest threshold.
pub fn sweep_threshold(
    validation: &[SweepInstance],
    tokenizer: &Tokenizer,
) -> Result<ThresholdSweepResult> {
    let all_scores: Vec<f64> = validation
        .iter()
        .flat_map(|v| v.scored.iter().map(|s| s.score))
        .collect();
    let grid = threshold_grid(&all_scores);
    if grid.is_empty() {
        return Err(Error::EmptySweep);
    }
    let prepared: Vec<Prepared<'_>> = validation
        .iter()
        .map(|v| {
            let toks = v
                .scored
                .iter()
                .map(|s| tokenizer.surfaces(&s.text))
                .collect();
            (v.scored.clone(), toks, v.reference_tokens.as_slice())
        })
        .collect();
    let candidates: Vec<SweepPoint> = grid
        .into_iter()
        .map(|threshold| SweepPoint {
            threshold,
            mean_rouge_l_f1: mean_rouge_l(&prepared, threshold),
        })
        .collect();
    let best = candidates
        .iter()
        .fold(None::<SweepPoint>, |best, p| match best {
            Some(b) if b.mean_rouge_l_f1 >= p.mean_rouge_l_f1 => Some(b),
            _ => Some(*p),
        })
        .expect("grid is non-empty");
    Ok(ThresholdSweepResult {
        candidates,
        chosen_threshold: best.threshold,
        best_mean_rouge_l_f1: best.mean_rouge_l_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::SentenceKey;
    use proptest::prelude::*;

    fn s(sent: usize, score: f64, text: &str) -> ScoredSentence {
        ScoredSentence {
            key: SentenceKey::new(0, sent),
            score,
            text: text.into(),
        }
    }

    fn texts(summary: &ExtractiveSummary) -> Vec<&str> {
        summary.sentences.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn dedup_keeps_first() {
        let out = postprocess(&[s(0, 0.0, "a b"), s(1, 0.0, "a  B"), s(2, 0.0, "c")]);
        assert_eq!(texts(&out), vec!["a b", "c"]);
        assert_eq!(out.text(), "a b\nc");
        let unique = [s(0, 0.0, "x"), s(1, 0.0, "y")];
        assert_eq!(postprocess(&unique).sentences, unique.to_vec());
        assert!(postprocess(&[]).is_empty());
        assert_eq!(postprocess(&[]).text(), "");
    }

    #[test]
    fn cutoff_examples() {
        let scored = [
            s(2, 0.9, "c"),
            s(0, 0.1, "a"),
            s(1, 0.5, "b"),
            s(3, 0.5, "a"),
        ];
        assert!(apply_cutoff(&scored, 0.95).is_empty());
        assert_eq!(texts(&apply_cutoff(&scored, 0.1)), vec!["a", "b", "c"]);
        // filter oracle: >= threshold, source order
        let expect: Vec<&str> = {
            let mut v: Vec<&ScoredSentence> = scored.iter().filter(|x| x.score >= 0.5).collect();
            v.sort_by_key(|x| x.key);
            v.into_iter().map(|x| x.text.as_str()).collect()
        };
        assert_eq!(texts(&apply_cutoff(&scored, 0.5)), expect);
    }

    #[test]
    fn grid_is_bounded_and_sorted() {
        let scores: Vec<f64> = (0..1000).map(|i| (i % 537) as f64 / 537.0).collect();
        let grid = threshold_grid(&scores);
        assert!(grid.len() <= MAX_THRESHOLD_CANDIDATES);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid[0], 0.0);
        assert_eq!(*grid.last().unwrap(), 536.0 / 537.0);
        assert_eq!(threshold_grid(&[0.3, 0.3]), vec![0.3]);
    }

    fn toks(text: &str) -> Vec<String> {
        Tokenizer::default().surfaces(text)
    }

    #[test]
    fn two_sentence_instance_picks_separating_threshold() {
        let inst = SweepInstance {
            scored: vec![
                s(0, 0.2, "unrelated words here."),
                s(1, 0.9, "pt has chest pain."),
            ],
            reference_tokens: toks("pt has chest pain."),
        };
        let out = sweep_threshold(&[inst], &Tokenizer::default()).unwrap();
        assert_eq!(out.candidates.len(), 2);
        assert_eq!(out.chosen_threshold, 0.9);
        assert_eq!(out.best_mean_rouge_l_f1, 1.0);
    }

    #[test]
    fn ties_choose_smallest_threshold() {
        let inst = SweepInstance {
            scored: vec![s(0, 0.1, "same."), s(1, 0.4, "same."), s(2, 0.8, "same.")],
            reference_tokens: toks("same."),
        };
        let out = sweep_threshold(&[inst], &Tokenizer::default()).unwrap();
        assert!(out.candidates.iter().all(|p| p.mean_rouge_l_f1 == 1.0));
        assert_eq!(out.chosen_threshold, 0.1);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let inst = SweepInstance {
            scored: vec![],
            reference_tokens: toks("x"),
        };
        assert!(matches!(
            sweep_threshold(&[inst], &Tokenizer::default()),
            Err(Error::EmptySweep)
        ));
        assert!(sweep_threshold(&[], &Tokenizer::default()).is_err());
    }

    proptest! {
        #[test]
        fn postprocess_is_idempotent(items in proptest::collection::vec(("[ab]{1,2}( [AB])?", 0.0f64..1.0), 0..12)) {
            let scored: Vec<ScoredSentence> = items
                .into_iter()
                .enumerate()
                .map(|(i, (t, sc))| s(i, sc, &t))
                .collect();
            let once = postprocess(&scored);
            let twice = postprocess(&once.sentences);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn raising_threshold_never_adds(
            scores in proptest::collection::vec(0.0f64..1.0, 0..15),
            lo in 0.0f64..1.0,
            delta in 0.0f64..0.5,
        ) {
            let scored: Vec<ScoredSentence> = scores
                .iter()
                .enumerate()
                .map(|(i, &sc)| s(i, sc, &format!("sentence {i}")))
                .collect();
            let low: HashSet<SentenceKey> = apply_cutoff(&scored, lo).sentences.iter().map(|x| x.key).collect();
            let high = apply_cutoff(&scored, lo + delta);
            prop_assert!(high.sentences.iter().all(|x| low.contains(&x.key)));
        }
    }
}
