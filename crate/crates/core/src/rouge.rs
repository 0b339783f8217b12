//! ROUGE-N and ROUGE-L over token sequences.
//!
//! No stemming or stopword removal is applied. ROUGE-L is the summary-level
//! flat-sequence variant: one LCS between the two token lists. Either side
//! being empty scores zero.

use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::text::ngrams;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Builds a score from an overlap count and the two side totals.
    /// F1 is `2·overlap / (candidate + reference)`.
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        if overlap == 0 || candidate == 0 || reference == 0 {
            return Self::default();
        }
        let o = overlap as f64;
        Self {
            precision: o / candidate as f64,
            recall: o / reference as f64,
            f1: 2.0 * o / (candidate + reference) as f64,
        }
    }
}

/// ROUGE-N with clipped (multiset-intersection) n-gram overlap.
pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Result<RougeScore> {
    let (overlap, cand_total, ref_total) = ngram_overlap(candidate, reference, n)?;
    Ok(RougeScore::from_counts(overlap, cand_total, ref_total))
}

/// Returns `(overlap, candidate n-gram count, reference n-gram count)`.
pub fn ngram_overlap<T: Eq + Hash>(
    candidate: &[T],
    reference: &[T],
    n: usize,
) -> Result<(usize, usize, usize)> {
    let cand = ngrams(candidate, n)?;
    let refs = ngrams(reference, n)?;
    let overlap = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    Ok((overlap, cand.values().sum(), refs.values().sum()))
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let lcs = lcs_len(candidate, reference);
    RougeScore::from_counts(lcs, candidate.len(), reference.len())
}

/// Length of the longest common subsequence, O(|a|·|b|) time and
/// O(min(|a|, |b|)) memory.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn bigram_example() {
        let s = rouge_n(&["a", "b", "c"], &["a", "b", "d"], 2).unwrap();
        assert!(close(s.precision, 0.5) && close(s.recall, 0.5) && close(s.f1, 0.5));
    }

    #[test]
    fn identity_and_disjoint() {
        let a = ["x", "y", "z", "x"];
        for n in 1..=4 {
            let s = rouge_n(&a, &a, n).unwrap();
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
        let s = rouge_n(&["a", "b"], &["c", "d"], 1).unwrap();
        assert_eq!(s, RougeScore::default());
        assert_eq!(rouge_l(&["a", "b"], &["c", "d"]), RougeScore::default());
    }

    #[test]
    fn clipped_counts() {
        // candidate repeats "the" more often than the reference
        let (o, c, r) = ngram_overlap(&["the", "the", "the"], &["the", "cat", "the"], 1).unwrap();
        assert_eq!((o, c, r), (2, 3, 3));
    }

    #[test]
    fn lcs_example() {
        let s = rouge_l(&["the", "cat", "sat"], &["the", "cat"]);
        assert!(close(s.precision, 2.0 / 3.0));
        assert!(close(s.recall, 1.0));
        assert!(close(s.f1, 0.8));
    }

    #[test]
    fn empty_side_scores_zero() {
        let empty: [&str; 0] = [];
        assert_eq!(rouge_l(&empty, &["a"]), RougeScore::default());
        assert_eq!(rouge_l(&["a"], &empty), RougeScore::default());
        assert_eq!(rouge_n(&empty, &["a"], 1).unwrap(), RougeScore::default());
        assert_eq!(rouge_n(&["a"], &["a"], 2).unwrap(), RougeScore::default());
    }

    #[test]
    fn reversed_distinct_tokens_share_one() {
        let a = ["p", "q", "r", "s", "t"];
        let mut b = a;
        b.reverse();
        assert_eq!(lcs_len(&a, &b), 1);
    }

    #[test]
    fn zero_order_is_an_error() {
        assert!(rouge_n(&["a"], &["a"], 0).is_err());
    }

    fn seq() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..4, 0..10)
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(a in seq(), b in seq(), n in 1usize..3) {
            let ab = rouge_n(&a, &b, n).unwrap();
            let ba = rouge_n(&b, &a, n).unwrap();
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
            let lab = rouge_l(&a, &b);
            let lba = rouge_l(&b, &a);
            prop_assert_eq!(lab.precision, lba.recall);
            prop_assert_eq!(lab.f1, lba.f1);
        }

        #[test]
        fn appending_reference_token_never_shrinks_lcs(a in seq(), mut b in seq(), t in 0u8..4) {
            let before = lcs_len(&a, &b);
            b.push(t);
            prop_assert!(lcs_len(&a, &b) >= before);
        }

        #[test]
        fn scores_bounded_and_f1_is_harmonic_mean(a in seq(), b in seq()) {
            for s in [rouge_l(&a, &b), rouge_n(&a, &b, 1).unwrap(), rouge_n(&a, &b, 2).unwrap()] {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                let hm = if s.precision + s.recall > 0.0 {
                    2.0 * s.precision * s.recall / (s.precision + s.recall)
                } else {
                    0.0
                };
                prop_assert!((s.f1 - hm).abs() < 1e-12);
            }
        }
    }
}
