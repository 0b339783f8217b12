//! On-disk dataset layout written by `build-dataset` and read by every later
//! command.
//!
//! ```text
//! <dir>/encounters.jsonl
//! <dir>/splits.jsonl
//! <dir>/header_rules.json
//! <dir>/sections/<split>/<section>.jsonl
//! <dir>/corpus_stats.json
//! <dir>/corpus_stats.csv
//! <dir>/build_report.json
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    assemble_encounters, corpus_stats, ingest_notes, split_by_subject, write_split_file,
    AssemblyConfig, AssemblyDiagnostics, CorpusStats, Encounter, Split, SplitAssignment,
    SplitCounts, SplitRatios, SplitRecord,
};
use crate::jsonl;
use crate::sections::{extract_reference, HeaderRuleSet, SectionName, SectionRecord};
use crate::text::Tokenizer;
use crate::{Error, Result};

pub const ENCOUNTERS_FILE: &str = "encounters.jsonl";
pub const SPLITS_FILE: &str = "splits.jsonl";
pub const RULES_FILE: &str = "header_rules.json";
pub const STATS_JSON: &str = "corpus_stats.json";
pub const STATS_CSV: &str = "corpus_stats.csv";
pub const REPORT_FILE: &str = "build_report.json";

#[derive(Debug, Clone, Default)]
pub struct BuildConfig {
    pub ratios: SplitRatios,
    pub seed: u64,
    pub assembly: AssemblyConfig,
    pub mask_deid: bool,
}

/// Settings later commands need to reproduce the build's text handling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSettings {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub require_admission_note: bool,
    pub mask_deid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedNote {
    pub line: usize,
    pub reason: String,
}

/// Encounters left out of one section's files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionExclusions {
    pub section: SectionName,
    /// Discharge summary has no header for the section.
    pub no_header: usize,
    /// Header present but the body has no tokens.
    pub empty_reference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub settings: BuildSettings,
    pub notes_read: usize,
    pub skipped_lines: Vec<SkippedNote>,
    pub assembly: AssemblyDiagnostics,
    pub encounters: usize,
    /// Encounters whose prior notes contain no sentences; excluded from every
    /// section.
    pub empty_source: Vec<String>,
    pub subjects: SplitCounts,
    pub exclusions: Vec<SectionExclusions>,
}

pub fn section_file(dir: &Path, split: Split, section: SectionName) -> PathBuf {
    dir.join("sections")
        .join(split.as_str())
        .join(format!("{section}.jsonl"))
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn stats_csv(stats: &CorpusStats) -> String {
    let mut out = String::from("section,train,validation,test,total,mean_words,mean_sentences\n");
    for s in &stats.sections {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.section,
            s.counts.train,
            s.counts.validation,
            s.counts.test,
            s.counts.total(),
            csv_opt(s.mean_words),
            csv_opt(s.mean_sentences)
        );
    }
    out
}

/// Reads notes, assembles and splits encounters, extracts every target
/// section and writes the dataset directory.
pub fn build_dataset(
    notes: &Path,
    rules: &HeaderRuleSet,
    cfg: &BuildConfig,
    out: &Path,
) -> Result<BuildReport> {
    let ingested = ingest_notes(notes)?;
    let assembly = assemble_encounters(&ingested.notes, &cfg.assembly);
    let encounters = assembly.encounters;
    info!(
        "{} notes, {} encounters",
        ingested.notes.len(),
        encounters.len()
    );
    let split = split_by_subject(&encounters, cfg.ratios, cfg.seed)?;
    let tokenizer = Tokenizer {
        mask_deid: cfg.mask_deid,
    };

    let empty_source: Vec<String> = encounters
        .iter()
        .filter(|e| tokenizer.sentence_pool(e.source_texts()).is_empty())
        .map(|e| e.encounter_id.clone())
        .collect();
    for id in &empty_source {
        warn!("encounter {id} has no source sentences and is excluded");
    }

    let mut records: BTreeMap<(Split, SectionName), Vec<SectionRecord>> = BTreeMap::new();
    let mut instances = Vec::new();
    let mut exclusions = Vec::new();
    for section in SectionName::ALL {
        let mut ex = SectionExclusions {
            section,
            no_header: 0,
            empty_reference: 0,
        };
        for enc in &encounters {
            if empty_source.contains(&enc.encounter_id) {
                continue;
            }
            let Some(inst) = extract_reference(enc, section, rules) else {
                ex.no_header += 1;
                continue;
            };
            if tokenizer.tokenize(&inst.reference_text).is_empty() {
                ex.empty_reference += 1;
                continue;
            }
            let s = split
                .split_of(&enc.subject_id)
                .expect("every subject is assigned");
            records
                .entry((s, section))
                .or_default()
                .push(inst.to_record(&enc.discharge_summary.text));
            instances.push((s, inst));
        }
        exclusions.push(ex);
    }

    jsonl::write(&out.join(ENCOUNTERS_FILE), &encounters)?;
    write_split_file(&out.join(SPLITS_FILE), &split)?;
    jsonl::write_text(&out.join(RULES_FILE), &(rules.to_json() + "\n"))?;
    for s in Split::ALL {
        for section in SectionName::ALL {
            let recs = records
                .get(&(s, section))
                .map(Vec::as_slice)
                .unwrap_or_default();
            jsonl::write(&section_file(out, s, section), recs)?;
        }
    }
    let stats = corpus_stats(&instances, &encounters);
    jsonl::write_json(&out.join(STATS_JSON), &stats)?;
    jsonl::write_text(&out.join(STATS_CSV), &stats_csv(&stats))?;

    let report = BuildReport {
        settings: BuildSettings {
            seed: cfg.seed,
            ratios: cfg.ratios,
            require_admission_note: cfg.assembly.require_admission_note,
            mask_deid: cfg.mask_deid,
        },
        notes_read: ingested.notes.len(),
        skipped_lines: ingested
            .skipped
            .into_iter()
            .map(|s| SkippedNote {
                line: s.line,
                reason: s.reason,
            })
            .collect(),
        assembly: assembly.diagnostics,
        encounters: encounters.len(),
        empty_source,
        subjects: SplitCounts {
            train: split.count(Split::Train),
            validation: split.count(Split::Validation),
            test: split.count(Split::Test),
        },
        exclusions,
    };
    jsonl::write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// A built dataset directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub encounters: BTreeMap<String, Encounter>,
    pub split: SplitAssignment,
    pub rules: HeaderRuleSet,
    pub report: BuildReport,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let report: BuildReport = jsonl::read_json(&dir.join(REPORT_FILE))?;
        let encounters: Vec<Encounter> = jsonl::read_strict(&dir.join(ENCOUNTERS_FILE))?;
        let splits: Vec<SplitRecord> = jsonl::read_strict(&dir.join(SPLITS_FILE))?;
        let rules = HeaderRuleSet::load(&dir.join(RULES_FILE))?;
        let mut by_id = BTreeMap::new();
        for e in encounters {
            let id = e.encounter_id.clone();
            if by_id.insert(id.clone(), e).is_some() {
                return Err(Error::Dataset(format!(
                    "duplicate encounter {id} in {}",
                    dir.display()
                )));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            encounters: by_id,
            split: SplitAssignment::from_records(report.settings.ratios, splits),
            rules,
            report,
        })
    }

    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer {
            mask_deid: self.report.settings.mask_deid,
        }
    }

    pub fn encounter(&self, id: &str) -> Result<&Encounter> {
        self.encounters
            .get(id)
            .ok_or_else(|| Error::Dataset(format!("unknown encounter `{id}`")))
    }

    pub fn sections(&self, split: Split, section: SectionName) -> Result<Vec<SectionRecord>> {
        jsonl::read_strict(&section_file(&self.dir, split, section))
    }

    /// Encounters of one split, in id order.
    pub fn split_encounters(&self, split: Split) -> impl Iterator<Item = &Encounter> {
        self.encounters
            .values()
            .filter(move |e| self.split.split_of(&e.subject_id) == Some(split))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClinicalNote;

    fn note(id: &str, subject: &str, enc: &str, date: &str, cat: &str, text: &str) -> ClinicalNote {
        ClinicalNote {
            note_id: id.into(),
            subject_id: subject.into(),
            encounter_id: enc.into(),
            chart_date: date.into(),
            category: cat.into(),
            text: text.into(),
        }
    }

    fn corpus(subjects: usize) -> Vec<ClinicalNote> {
        let mut notes = Vec::new();
        for i in 0..subjects {
            let (s, e) = (format!("s{i:02}"), format!("e{i:02}"));
            notes.push(note(
                &format!("{i}a"),
                &s,
                &e,
                "2100-01-01",
                "admission",
                "Chief Complaint: fever.",
            ));
            let ds = if i == 0 {
                "Chief Complaint:\n\nSocial History: lives alone."
            } else {
                "Chief Complaint: fever.\nSocial History: lives alone."
            };
            notes.push(note(
                &format!("{i}d"),
                &s,
                &e,
                "2100-01-05",
                "discharge summary",
                ds,
            ));
        }
        notes
    }

    fn write_notes(dir: &Path, notes: &[ClinicalNote]) -> PathBuf {
        let p = dir.join("notes.jsonl");
        jsonl::write(&p, notes).unwrap();
        p
    }

    #[test]
    fn ten_subjects_split_and_files() {
        let tmp = tempfile::tempdir().unwrap();
        let notes = write_notes(tmp.path(), &corpus(10));
        let out = tmp.path().join("ds");
        let report = build_dataset(
            &notes,
            &HeaderRuleSet::default_rules(),
            &BuildConfig::default(),
            &out,
        )
        .unwrap();
        assert_eq!(
            (
                report.subjects.train,
                report.subjects.validation,
                report.subjects.test
            ),
            (8, 1, 1)
        );
        for s in Split::ALL {
            for section in SectionName::ALL {
                assert!(section_file(&out, s, section).exists());
            }
        }
        let ds = Dataset::load(&out).unwrap();
        assert_eq!(ds.encounters.len(), 10);
        let fh: usize = Split::ALL
            .iter()
            .map(|&s| ds.sections(s, SectionName::FamilyHistory).unwrap().len())
            .sum();
        assert_eq!(fh, 0);
        let cc = &report.exclusions[0];
        assert_eq!(cc.section, SectionName::ChiefComplaint);
        assert_eq!(cc.empty_reference, 1);
        let total_cc: usize = Split::ALL
            .iter()
            .map(|&s| ds.sections(s, SectionName::ChiefComplaint).unwrap().len())
            .sum();
        assert_eq!(total_cc, 9);
        assert_eq!(ds.split_encounters(Split::Train).count(), 8);
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let notes = write_notes(tmp.path(), &corpus(12));
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        let cfg = BuildConfig {
            seed: 7,
            ..Default::default()
        };
        build_dataset(&notes, &HeaderRuleSet::default_rules(), &cfg, &a).unwrap();
        build_dataset(&notes, &HeaderRuleSet::default_rules(), &cfg, &b).unwrap();
        for f in [
            ENCOUNTERS_FILE,
            SPLITS_FILE,
            STATS_JSON,
            STATS_CSV,
            REPORT_FILE,
            RULES_FILE,
        ] {
            assert_eq!(
                std::fs::read(a.join(f)).unwrap(),
                std::fs::read(b.join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn too_few_subjects_is_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        let notes = write_notes(tmp.path(), &corpus(2));
        let err = build_dataset(
            &notes,
            &HeaderRuleSet::default_rules(),
            &BuildConfig::default(),
            &tmp.path().join("x"),
        );
        assert!(matches!(err, Err(Error::TooFewSubjects { .. })));
    }
}
