//! Tokenization, sentence segmentation and n-gram extraction.
//!
//! Every scorer in the crate sees text through these functions, so the rules
//! are fixed and deliberately simple:
//!
//! - tokens are lowercased whitespace-separated chunks with leading and
//!   trailing punctuation split off one character at a time;
//! - sentences end after `.`, `!` or `?` followed by whitespace, at blank
//!   lines, and before list markers (`#` anywhere after whitespace; `-`, `*`,
//!   `1.` or `1)` at the start of a line).
//!
//! Abbreviations are not special-cased, so "dr. smith" splits after "dr.".

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased surface form.
    pub surface: String,
    /// Byte offsets into the tokenized text.
    pub start: usize,
    pub end: usize,
}

/// Position of a sentence inside an encounter's source pool, serialized as
/// `[doc_index, sent_index]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceKey(pub usize, pub usize);

impl SentenceKey {
    pub fn new(doc: usize, sent: usize) -> Self {
        Self(doc, sent)
    }

    pub fn doc(self) -> usize {
        self.0
    }

    pub fn sent(self) -> usize {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub doc_index: usize,
    pub sent_index: usize,
    /// Trimmed sentence text; equals `document[start..end]`.
    pub raw_text: String,
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn key(&self) -> SentenceKey {
        SentenceKey(self.doc_index, self.sent_index)
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}

/// Tokenizer settings. The default keeps de-identification placeholders as
/// ordinary punctuation-split tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tokenizer {
    /// Collapse each bracketed placeholder such as `[ country 4952 ]` or
    /// `[**Hospital1 18**]` into one class token (`[country]`, `[hospital]`).
    pub mask_deid: bool,
}

impl Tokenizer {
    pub fn masking() -> Self {
        Self { mask_deid: true }
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        self.tokenize_range(text, 0, text.len())
    }

    /// Tokenizes `text[start..end]`, reporting offsets relative to `text`.
    fn tokenize_range(&self, text: &str, start: usize, end: usize) -> Vec<Token> {
        let mut out = Vec::new();
        if !self.mask_deid {
            push_plain_tokens(text, start, end, &mut out);
            return out;
        }
        let mut cursor = start;
        let mut pos = start;
        while pos < end {
            let rest = &text[pos..end];
            if rest.starts_with('[') {
                if let Some((len, class)) = placeholder_at(rest) {
                    push_plain_tokens(text, cursor, pos, &mut out);
                    out.push(Token {
                        surface: format!("[{class}]"),
                        start: pos,
                        end: pos + len,
                    });
                    pos += len;
                    cursor = pos;
                    continue;
                }
            }
            pos += rest.chars().next().map_or(1, char::len_utf8);
        }
        push_plain_tokens(text, cursor, end, &mut out);
        out
    }

    pub fn split_sentences(&self, text: &str) -> Vec<Sentence> {
        self.split_document(text, 0)
    }

    /// Splits one document, stamping every sentence with `doc_index`.
    /// Sentences without tokens are dropped and do not consume an index.
    pub fn split_document(&self, text: &str, doc_index: usize) -> Vec<Sentence> {
        let mut bounds = sentence_cuts(text);
        bounds.push(text.len());
        let mut sentences = Vec::new();
        let mut prev = 0;
        for cut in bounds {
            if cut <= prev {
                continue;
            }
            let piece = &text[prev..cut];
            let lead = piece.len() - piece.trim_start().len();
            let trimmed = piece.trim();
            let (start, end) = (prev + lead, prev + lead + trimmed.len());
            prev = cut;
            if trimmed.is_empty() {
                continue;
            }
            let tokens = self.tokenize_range(text, start, end);
            if tokens.is_empty() {
                continue;
            }
            sentences.push(Sentence {
                tokens,
                doc_index,
                sent_index: sentences.len(),
                raw_text: trimmed.to_string(),
                start,
                end,
            });
        }
        sentences
    }

    /// Sentence pool over several documents, `doc_index` following input order.
    pub fn sentence_pool<'a, I>(&self, docs: I) -> Vec<Sentence>
    where
        I: IntoIterator<Item = &'a str>,
    {
        docs.into_iter()
            .enumerate()
            .flat_map(|(doc, text)| self.split_document(text, doc))
            .collect()
    }

    pub fn surfaces(&self, text: &str) -> Vec<String> {
        self.tokenize(text).into_iter().map(|t| t.surface).collect()
    }
}

pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}

pub fn split_sentences(text: &str) -> Vec<Sentence> {
    Tokenizer::default().split_sentences(text)
}

/// Number of tokens containing at least one alphanumeric character.
pub fn word_count(text: &str) -> usize {
    tokenize(text)
        .iter()
        .filter(|t| t.surface.chars().any(char::is_alphanumeric))
        .count()
}

/// Lowercases and collapses runs of whitespace to a single space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// All contiguous n-grams of `tokens` with their multiplicities.
pub fn ngrams<T: Eq + Hash>(tokens: &[T], n: usize) -> Result<HashMap<&[T], usize>> {
    if n == 0 {
        return Err(Error::ZeroNgramOrder);
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn push_plain_tokens(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let region = &text[start..end];
    let mut chunk_start = None;
    for (i, c) in region
        .char_indices()
        .chain(std::iter::once((region.len(), ' ')))
    {
        match (c.is_whitespace(), chunk_start) {
            (true, Some(s)) => {
                push_chunk(text, start + s, start + i, out);
                chunk_start = None;
            }
            (false, None) => chunk_start = Some(i),
            _ => {}
        }
    }
}

/// One whitespace-free chunk: leading and trailing punctuation become
/// single-character tokens around the core.
fn push_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &text[start..end];
    let mut emit = |s: usize, e: usize| {
        out.push(Token {
            surface: text[s..e].to_lowercase(),
            start: s,
            end: e,
        })
    };
    let core_start = chunk
        .char_indices()
        .find(|&(_, c)| !is_punct(c))
        .map(|(i, _)| i);
    let Some(core_start) = core_start else {
        for (i, c) in chunk.char_indices() {
            emit(start + i, start + i + c.len_utf8());
        }
        return;
    };
    let core_end = chunk
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punct(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(chunk.len());
    for (i, c) in chunk[..core_start].char_indices() {
        emit(start + i, start + i + c.len_utf8());
    }
    emit(start + core_start, start + core_end);
    for (i, c) in chunk[core_end..].char_indices() {
        let s = start + core_end + i;
        emit(s, s + c.len_utf8());
    }
}

const MAX_PLACEHOLDER_CHARS: usize = 80;

/// Recognizes a de-identification placeholder at the start of `s`, returning
/// its byte length and class name.
fn placeholder_at(s: &str) -> Option<(usize, String)> {
    let mut inner_end = None;
    for (count, (i, c)) in s.char_indices().enumerate().skip(1) {
        if count > MAX_PLACEHOLDER_CHARS || c == '\n' || c == '[' {
            return None;
        }
        if c == ']' {
            inner_end = Some(i);
            break;
        }
    }
    let inner_end = inner_end?;
    let inner = &s[1..inner_end];
    if !inner.chars().any(char::is_alphanumeric) {
        return None;
    }
    let class: String = inner
        .chars()
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let class = if class.is_empty() {
        "deid".to_string()
    } else {
        class
    };
    Some((inner_end + 1, class))
}

fn is_horizontal_space(c: char) -> bool {
    c.is_whitespace() && c != '\n'
}

/// Byte offsets at which a new sentence may begin.
fn sentence_cuts(text: &str) -> Vec<usize> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut cuts = Vec::new();
    let mut protected_periods = Vec::new();

    // Line-start list markers.
    let mut line_start = 0;
    for line in text.split('\n') {
        let indent = line.len() - line.trim_start_matches(is_horizontal_space).len();
        let body = &line[indent..];
        if let Some(marker_len) = line_marker_len(body) {
            cuts.push(line_start + indent);
            if body[..marker_len].ends_with('.') {
                protected_periods.push(line_start + indent + marker_len - 1);
            }
        }
        line_start += line.len() + 1;
    }

    for (idx, &(pos, c)) in chars.iter().enumerate() {
        let prev = idx.checked_sub(1).map(|p| chars[p].1);
        let next = chars.get(idx + 1).map(|&(_, n)| n);
        match c {
            '#' if prev.is_none_or(char::is_whitespace) => cuts.push(pos),
            '.' | '!' | '?' if next.is_none_or(char::is_whitespace) => {
                if !protected_periods.contains(&pos) {
                    cuts.push(pos + 1);
                }
            }
            '\n' => {
                let blank = chars[idx + 1..]
                    .iter()
                    .map(|&(_, n)| n)
                    .find(|&n| !is_horizontal_space(n))
                    == Some('\n');
                if blank {
                    cuts.push(pos);
                }
            }
            _ => {}
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts
}

/// Length of a list marker (`-`, `*`, `12.`, `3)`) opening `line`, when the
/// marker is followed by whitespace or ends the line.
fn line_marker_len(line: &str) -> Option<usize> {
    let followed_ok = |at: usize| line[at..].chars().next().is_none_or(char::is_whitespace);
    let first = line.chars().next()?;
    if first == '-' || first == '*' {
        return followed_ok(1).then_some(1);
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if (1..=3).contains(&digits) {
        let after = line[digits..].chars().next();
        if matches!(after, Some('.') | Some(')')) && followed_ok(digits + 1) {
            return Some(digits + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surf(text: &str) -> Vec<String> {
        Tokenizer::default().surfaces(text)
    }

    fn raw(text: &str) -> Vec<String> {
        split_sentences(text)
            .into_iter()
            .map(|s| s.raw_text)
            .collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(surf("Chest pain."), vec!["chest", "pain", "."]);
        assert!(surf("").is_empty());
        assert_eq!(surf("a  b"), vec!["a", "b"]);
        assert_eq!(surf("(HTN),"), vec!["(", "htn", ")", ","]);
        assert_eq!(surf("cr 1.3 b-12 --"), vec!["cr", "1.3", "b-12", "-", "-"]);
    }

    #[test]
    fn token_offsets_point_into_source() {
        let text = "Pt  denies FEVER.";
        for t in tokenize(text) {
            assert_eq!(text[t.start..t.end].to_lowercase(), t.surface);
        }
    }

    #[test]
    fn placeholders_kept_literal_by_default() {
        assert_eq!(
            surf("from [ country 4952 ] today"),
            vec!["from", "[", "country", "4952", "]", "today"]
        );
    }

    #[test]
    fn placeholders_masked_on_request() {
        let t = Tokenizer::masking();
        assert_eq!(
            t.surfaces("from [ country 4952 ] and [**Hospital1 18**] on [**2101-10-20**]."),
            vec![
                "from",
                "[country]",
                "and",
                "[hospital]",
                "on",
                "[deid]",
                "."
            ]
        );
        // brackets without alphanumeric content are plain punctuation
        assert_eq!(t.surfaces("[ ]"), vec!["[", "]"]);
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(raw("no fever. no cough."), vec!["no fever.", "no cough."]);
        assert_eq!(raw("# htn # cad"), vec!["# htn", "# cad"]);
        assert!(raw("").is_empty());
        assert!(raw("  \n\n \t").is_empty());
    }

    #[test]
    fn blank_lines_and_line_markers_split() {
        assert_eq!(
            raw("chief complaint:\n\nchest pain"),
            vec!["chief complaint:", "chest pain"]
        );
        assert_eq!(
            raw("meds:\n1. aspirin 81 mg\n2) lisinopril\n- metoprolol"),
            vec!["meds:", "1. aspirin 81 mg", "2) lisinopril", "- metoprolol"]
        );
        // inline decimals and hyphens do not split
        assert_eq!(
            raw("cr 1.3 up from 1.1 in b-12 def"),
            vec!["cr 1.3 up from 1.1 in b-12 def"]
        );
        // abbreviations split; this is a known limitation
        assert_eq!(raw("seen by dr. smith"), vec!["seen by dr.", "smith"]);
    }

    #[test]
    fn sentence_indices_and_offsets() {
        let text = "first one.  second!\n\nthird?";
        let sents = Tokenizer::default().split_document(text, 4);
        assert_eq!(sents.len(), 3);
        for (i, s) in sents.iter().enumerate() {
            assert_eq!(s.doc_index, 4);
            assert_eq!(s.sent_index, i);
            assert_eq!(&text[s.start..s.end], s.raw_text);
        }
    }

    #[test]
    fn ngram_examples() {
        let toks = ["a", "b", "c"];
        let bi = ngrams(&toks, 2).unwrap();
        assert_eq!(bi.len(), 2);
        assert_eq!(bi[&["a", "b"][..]], 1);
        assert_eq!(bi[&["b", "c"][..]], 1);
        assert!(ngrams(&["a"], 2).unwrap().is_empty());
        let uni = ngrams(&["a", "a"], 1).unwrap();
        assert_eq!(uni[&["a"][..]], 2);
        assert!(matches!(ngrams(&toks, 0), Err(Error::ZeroNgramOrder)));
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize("  A \t b\nC "), "a b c");
    }

    #[test]
    fn word_count_ignores_punctuation() {
        assert_eq!(word_count("Chest pain, resolved."), 3);
    }

    fn noisy_text() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[a-zA-Z]{1,6}",
            "[0-9]{1,3}",
            Just(".".to_string()),
            Just(" ".to_string()),
            Just("\n".to_string()),
            Just("\n\n".to_string()),
            Just("# ".to_string()),
            Just("- ".to_string()),
            Just("1. ".to_string()),
            Just("?".to_string()),
            Just("(".to_string()),
            Just("[ name 12 ]".to_string()),
            Just("é".to_string()),
        ];
        proptest::collection::vec(piece, 0..40).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn surfaces_round_trip(text in noisy_text()) {
            for tok in [Tokenizer::default(), Tokenizer::masking()] {
                let first = tok.surfaces(&text);
                let again = tok.surfaces(&first.join(" "));
                prop_assert_eq!(first, again);
            }
        }

        #[test]
        fn sentences_cover_every_visible_char(text in noisy_text()) {
            let sents = split_sentences(&text);
            for (i, c) in text.char_indices() {
                let hits = sents.iter().filter(|s| s.start <= i && i < s.end).count();
                if c.is_whitespace() {
                    prop_assert!(hits <= 1);
                } else {
                    prop_assert_eq!(hits, 1, "char {:?} at {}", c, i);
                }
            }
            for s in &sents {
                prop_assert!(!s.tokens.is_empty());
                prop_assert_eq!(&text[s.start..s.end], s.raw_text.as_str());
            }
        }

        #[test]
        fn ngram_total_matches_length(toks in proptest::collection::vec(0u8..4, 0..12), n in 1usize..5) {
            let total: usize = ngrams(&toks, n).unwrap().values().sum();
            prop_assert_eq!(total, (toks.len() + 1).saturating_sub(n));
        }
    }
}
