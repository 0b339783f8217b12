//! Clinical notes, encounters and subject-level splits.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::jsonl::{self, SkippedLine};
use crate::sections::{SectionInstance, SectionName};
use crate::text;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClinicalNote {
    pub note_id: String,
    pub subject_id: String,
    pub encounter_id: String,
    /// ISO-8601 timestamp; ordering uses the raw string.
    pub chart_date: String,
    pub category: String,
    pub text: String,
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DD[T ]HH:MM[:SS[.fff]]` and RFC 3339.
pub fn is_valid_chart_date(s: &str) -> bool {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        || FORMATS
            .iter()
            .any(|f| NaiveDateTime::parse_from_str(s, f).is_ok())
        || DateTime::parse_from_rfc3339(s).is_ok()
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub notes: Vec<ClinicalNote>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads a notes JSON Lines file. Lines that fail to decode, carry an
/// unparseable `chart_date`, or repeat an earlier `note_id` are skipped and
/// reported with their line numbers.
pub fn ingest_notes(path: &Path) -> Result<Ingested> {
    let body = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let ingested = ingest_notes_from(body.as_slice()).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    for s in &ingested.skipped {
        warn!("{}:{}: skipped note: {}", path.display(), s.line, s.reason);
    }
    Ok(ingested)
}

pub fn ingest_notes_from<R: std::io::BufRead>(reader: R) -> std::io::Result<Ingested> {
    let mut notes = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut skip = |reason: String| {
            skipped.push(SkippedLine {
                line: idx + 1,
                reason,
            })
        };
        let note: ClinicalNote = match serde_json::from_str(&line) {
            Ok(n) => n,
            Err(e) => {
                skip(e.to_string());
                continue;
            }
        };
        if !is_valid_chart_date(&note.chart_date) {
            skip(format!("invalid chart_date {:?}", note.chart_date));
        } else if !seen.insert(note.note_id.clone()) {
            skip(format!("duplicate note_id {:?}", note.note_id));
        } else {
            notes.push(note);
        }
    }
    Ok(Ingested { notes, skipped })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encounter {
    pub subject_id: String,
    pub encounter_id: String,
    /// Sorted by `(chart_date, note_id)`.
    pub prior_notes: Vec<ClinicalNote>,
    pub discharge_summary: ClinicalNote,
}

impl Encounter {
    pub fn source_texts(&self) -> impl Iterator<Item = &str> {
        self.prior_notes.iter().map(|n| n.text.as_str())
    }

    /// Prior notes joined by blank lines.
    pub fn source_text(&self) -> String {
        self.source_texts().collect::<Vec<_>>().join("\n\n")
    }
}

#[derive(Debug, Clone)]
pub struct AssemblyConfig {
    pub require_admission_note: bool,
    /// Category strings (case-insensitive) that mark an admission note.
    pub admission_categories: Vec<String>,
    /// Category strings (case-insensitive) that mark a discharge summary.
    pub discharge_categories: Vec<String>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            require_admission_note: false,
            admission_categories: vec!["admission".into(), "admission note".into()],
            discharge_categories: vec!["discharge summary".into()],
        }
    }
}

fn category_in(category: &str, list: &[String]) -> bool {
    let c = text::normalize(category);
    list.iter().any(|l| text::normalize(l) == c)
}

/// Why encounters were dropped or trimmed during assembly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyDiagnostics {
    pub no_discharge_summary: usize,
    pub multiple_discharge_summaries: usize,
    pub missing_admission_note: usize,
    /// Notes charted after their discharge summary (not used as sources).
    pub notes_after_discharge: usize,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub encounters: Vec<Encounter>,
    pub diagnostics: AssemblyDiagnostics,
}

fn chart_order(a: &ClinicalNote, b: &ClinicalNote) -> std::cmp::Ordering {
    (&a.chart_date, &a.note_id).cmp(&(&b.chart_date, &b.note_id))
}

/// Groups notes into encounters. Output is sorted by
/// `(subject_id, encounter_id)`, so the input order never matters.
pub fn assemble_encounters(notes: &[ClinicalNote], cfg: &AssemblyConfig) -> Assembly {
    let mut groups: BTreeMap<(&str, &str), Vec<&ClinicalNote>> = BTreeMap::new();
    for n in notes {
        groups
            .entry((n.subject_id.as_str(), n.encounter_id.as_str()))
            .or_default()
            .push(n);
    }
    let mut diagnostics = AssemblyDiagnostics::default();
    let mut encounters = Vec::new();
    for ((subject, encounter), group) in groups {
        let (discharges, mut priors): (Vec<&ClinicalNote>, Vec<&ClinicalNote>) = group
            .into_iter()
            .partition(|n| category_in(&n.category, &cfg.discharge_categories));
        let discharge = match discharges.as_slice() {
            [one] => (*one).clone(),
            [] => {
                diagnostics.no_discharge_summary += 1;
                continue;
            }
            _ => {
                diagnostics.multiple_discharge_summaries += 1;
                continue;
            }
        };
        let before = priors.len();
        priors.retain(|n| n.chart_date <= discharge.chart_date);
        diagnostics.notes_after_discharge += before - priors.len();
        if cfg.require_admission_note
            && !priors
                .iter()
                .any(|n| category_in(&n.category, &cfg.admission_categories))
        {
            diagnostics.missing_admission_note += 1;
            continue;
        }
        let mut prior_notes: Vec<ClinicalNote> = priors.into_iter().cloned().collect();
        prior_notes.sort_by(chart_order);
        encounters.push(Encounter {
            subject_id: subject.to_string(),
            encounter_id: encounter.to_string(),
            prior_notes,
            discharge_summary: discharge,
        });
    }
    Assembly {
        encounters,
        diagnostics,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Dataset(format!("unknown split `{s}`")))
    }
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let all = [train, validation, test];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidRatios(format!(
                "{all:?} contains a negative value"
            )));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatios(format!("{all:?} does not sum to 1")));
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    /// Parses `"0.8,0.1,0.1"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidRatios(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(Error::InvalidRatios(format!(
                "{s:?}: expected three values"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub ratios: SplitRatios,
    pub assignment: BTreeMap<String, Split>,
}

/// Split-file JSON Lines record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub subject_id: String,
    pub split: Split,
}

impl SplitAssignment {
    pub fn split_of(&self, subject_id: &str) -> Option<Split> {
        self.assignment.get(subject_id).copied()
    }

    pub fn subjects(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, s)| **s == split)
            .map(|(k, _)| k.as_str())
    }

    pub fn count(&self, split: Split) -> usize {
        self.subjects(split).count()
    }

    pub fn records(&self) -> Vec<SplitRecord> {
        self.assignment
            .iter()
            .map(|(subject_id, split)| SplitRecord {
                subject_id: subject_id.clone(),
                split: *split,
            })
            .collect()
    }

    pub fn from_records(ratios: SplitRatios, records: Vec<SplitRecord>) -> Self {
        Self {
            ratios,
            assignment: records
                .into_iter()
                .map(|r| (r.subject_id, r.split))
                .collect(),
        }
    }
}

/// Shuffles the distinct subjects with a seeded ChaCha8 permutation and cuts
/// the sequence at `floor(train·n)` and `floor((train+validation)·n)`.
pub fn split_by_subject(
    encounters: &[Encounter],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment> {
    let subjects: BTreeSet<&str> = encounters.iter().map(|e| e.subject_id.as_str()).collect();
    let mut subjects: Vec<&str> = subjects.into_iter().collect();
    let n = subjects.len();
    if n < Split::ALL.len() {
        return Err(Error::TooFewSubjects {
            needed: Split::ALL.len(),
            found: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    subjects.shuffle(&mut rng);
    // The epsilon keeps e.g. 0.7·10 = 7.000000000000001 and 0.9·40 = 35.99.. stable.
    let boundary = |frac: f64| ((frac * n as f64) + 1e-9).floor().min(n as f64) as usize;
    let train_end = boundary(ratios.train);
    let val_end = boundary(ratios.train + ratios.validation).max(train_end);
    let assignment = subjects
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let split = if i < train_end {
                Split::Train
            } else if i < val_end {
                Split::Validation
            } else {
                Split::Test
            };
            (s.to_string(), split)
        })
        .collect();
    Ok(SplitAssignment { ratios, assignment })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }

    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Validation => self.validation += 1,
            Split::Test => self.test += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionStats {
    pub section: SectionName,
    pub counts: SplitCounts,
    /// `None` when the section has no instances.
    pub mean_words: Option<f64>,
    pub mean_sentences: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterStats {
    pub encounters: usize,
    pub mean_documents: Option<f64>,
    pub mean_source_words: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sections: Vec<SectionStats>,
    pub encounters: EncounterStats,
}

impl CorpusStats {
    pub fn section(&self, name: SectionName) -> Option<&SectionStats> {
        self.sections.iter().find(|s| s.section == name)
    }
}

fn mean(sum: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Per-section and per-encounter statistics. Every section gets a row, with
/// `None` means for sections that have no instances. Words are tokens that
/// contain an alphanumeric character.
pub fn corpus_stats(
    instances: &[(Split, SectionInstance)],
    encounters: &[Encounter],
) -> CorpusStats {
    let sections = SectionName::ALL
        .into_iter()
        .map(|name| {
            let mut counts = SplitCounts::default();
            let (mut words, mut sents) = (0, 0);
            for (split, inst) in instances.iter().filter(|(_, i)| i.section == name) {
                counts.bump(*split);
                words += text::word_count(&inst.reference_text);
                sents += text::split_sentences(&inst.reference_text).len();
            }
            SectionStats {
                section: name,
                counts,
                mean_words: mean(words, counts.total()),
                mean_sentences: mean(sents, counts.total()),
            }
        })
        .collect();
    let docs: usize = encounters.iter().map(|e| e.prior_notes.len()).sum();
    let source_words: usize = encounters
        .iter()
        .flat_map(|e| e.source_texts())
        .map(text::word_count)
        .sum();
    CorpusStats {
        sections,
        encounters: EncounterStats {
            encounters: encounters.len(),
            mean_documents: mean(docs, encounters.len()),
            mean_source_words: mean(source_words, encounters.len()),
        },
    }
}

pub fn write_split_file(path: &Path, split: &SplitAssignment) -> Result<()> {
    jsonl::write(path, &split.records())
}
