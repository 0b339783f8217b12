//! Rule-based extraction of the seven target sections from clinical notes.
//!
//! A header is a case-insensitive literal at the start of a line (after at
//! most three spaces or tabs) followed by a colon. A section body runs from
//! the end of its header to the next line that opens with any known header,
//! or to the end of the document. When one line could match several
//! literals the longest wins, so `medications on admission:` is never read
//! as the generic `medications:` terminator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Encounter;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionName {
    ChiefComplaint,
    FamilyHistory,
    SocialHistory,
    MedicationsOnAdmission,
    PastMedicalHistory,
    HistoryOfPresentIllness,
    BriefHospitalCourse,
}

impl SectionName {
    pub const ALL: [SectionName; 7] = [
        SectionName::ChiefComplaint,
        SectionName::FamilyHistory,
        SectionName::SocialHistory,
        SectionName::MedicationsOnAdmission,
        SectionName::PastMedicalHistory,
        SectionName::HistoryOfPresentIllness,
        SectionName::BriefHospitalCourse,
    ];

    /// Identifier used in file names and wire formats.
    pub fn as_str(self) -> &'static str {
        match self {
            SectionName::ChiefComplaint => "chief_complaint",
            SectionName::FamilyHistory => "family_history",
            SectionName::SocialHistory => "social_history",
            SectionName::MedicationsOnAdmission => "medications_on_admission",
            SectionName::PastMedicalHistory => "past_medical_history",
            SectionName::HistoryOfPresentIllness => "history_of_present_illness",
            SectionName::BriefHospitalCourse => "brief_hospital_course",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SectionName::ChiefComplaint => "Chief Complaint",
            SectionName::FamilyHistory => "Family History",
            SectionName::SocialHistory => "Social History",
            SectionName::MedicationsOnAdmission => "Medications on Admission",
            SectionName::PastMedicalHistory => "Past Medical History",
            SectionName::HistoryOfPresentIllness => "History of Present Illness",
            SectionName::BriefHospitalCourse => "Brief Hospital Course",
        }
    }
}

impl fmt::Display for SectionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SectionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SectionName::ALL
            .into_iter()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| Error::UnknownSection(s.to_string()))
    }
}

/// Who a header literal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderOwner {
    Section(SectionName),
    /// Any other header; only ends the preceding section.
    Terminator,
}

#[derive(Debug, Clone)]
pub struct HeaderRuleSet {
    variants: BTreeMap<SectionName, Vec<String>>,
    terminators: Vec<String>,
    /// Every literal with its owner, longest first.
    patterns: Vec<(String, HeaderOwner)>,
}

const DEFAULT_RULES: &str = include_str!("../data/header_rules.json");
const MAX_INDENT: usize = 3;

impl HeaderRuleSet {
    pub fn new(
        variants: BTreeMap<SectionName, Vec<String>>,
        terminators: Vec<String>,
    ) -> Result<Self> {
        let norm = |v: &str| -> Result<String> {
            let lit = normalize_variant(v);
            if lit.is_empty() {
                return Err(Error::InvalidRules(format!("empty header variant {v:?}")));
            }
            Ok(lit)
        };
        let mut clean = BTreeMap::new();
        let mut owners: BTreeMap<String, HeaderOwner> = BTreeMap::new();
        for name in SectionName::ALL {
            let list = variants.get(&name).map(Vec::as_slice).unwrap_or_default();
            if list.is_empty() {
                return Err(Error::InvalidRules(format!(
                    "section {name} has no header variants"
                )));
            }
            let mut lits = Vec::new();
            for v in list {
                let lit = norm(v)?;
                claim(&mut owners, &lit, HeaderOwner::Section(name))?;
                if !lits.contains(&lit) {
                    lits.push(lit);
                }
            }
            clean.insert(name, lits);
        }
        let mut terms = Vec::new();
        for v in &terminators {
            let lit = norm(v)?;
            claim(&mut owners, &lit, HeaderOwner::Terminator)?;
            if !terms.contains(&lit) {
                terms.push(lit);
            }
        }
        let mut patterns: Vec<(String, HeaderOwner)> = owners.into_iter().collect();
        patterns.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self {
            variants: clean,
            terminators: terms,
            patterns,
        })
    }

    /// Parses the rules file format:
    /// `{"<section_name>": ["variant", ...], "terminators": [...]}`.
    pub fn from_json(body: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(body)
            .map_err(|e| Error::InvalidRules(format!("malformed rules JSON: {e}")))?;
        let mut variants = BTreeMap::new();
        let mut terminators = Vec::new();
        for (key, list) in raw {
            if key == "terminators" {
                terminators = list;
            } else {
                let name = key
                    .parse::<SectionName>()
                    .map_err(|_| Error::InvalidRules(format!("unknown section key `{key}`")))?;
                variants.insert(name, list);
            }
        }
        Self::new(variants, terminators)
    }

    /// Inverse of [`HeaderRuleSet::from_json`], with normalized variants.
    pub fn to_json(&self) -> String {
        let mut raw: BTreeMap<&str, &[String]> = self
            .variants
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
            .collect();
        raw.insert("terminators", &self.terminators);
        serde_json::to_string_pretty(&raw).expect("string maps always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&body)
    }

    /// The rules shipped with the crate.
    pub fn default_rules() -> Self {
        Self::from_json(DEFAULT_RULES).expect("bundled header rules are valid")
    }

    pub fn variants(&self, section: SectionName) -> &[String] {
        &self.variants[&section]
    }

    pub fn terminators(&self) -> &[String] {
        &self.terminators
    }

    /// The header opening the line that starts at `line_start`, if any.
    pub fn header_at_line(&self, text: &str, line_start: usize) -> Option<HeaderMatch> {
        let line = &text[line_start..];
        let indent: usize = line
            .chars()
            .take_while(|&c| c == ' ' || c == '\t')
            .take(MAX_INDENT + 1)
            .count();
        if indent > MAX_INDENT {
            return None;
        }
        let start = line_start + indent;
        self.patterns.iter().find_map(|(lit, owner)| {
            let after = match_literal(text, start, lit)?;
            let rest = &text[after..];
            let gap = rest.len() - rest.trim_start_matches([' ', '\t']).len();
            rest[gap..].starts_with(':').then(|| HeaderMatch {
                owner: *owner,
                start,
                end: after + gap + 1,
            })
        })
    }

    /// All headers in `text`, in document order.
    pub fn headers(&self, text: &str) -> Vec<HeaderMatch> {
        line_starts(text)
            .filter_map(|ls| self.header_at_line(text, ls))
            .collect()
    }
}

fn claim(owners: &mut BTreeMap<String, HeaderOwner>, lit: &str, owner: HeaderOwner) -> Result<()> {
    match owners.get(lit) {
        Some(prev) if *prev != owner => Err(Error::InvalidRules(format!(
            "header variant `{lit}` is claimed twice"
        ))),
        _ => {
            owners.insert(lit.to_string(), owner);
            Ok(())
        }
    }
}

/// Lowercased, whitespace-collapsed literal without its trailing colon.
fn normalize_variant(v: &str) -> String {
    let lower = crate::text::normalize(v);
    lower.trim_end_matches(':').trim_end().to_string()
}

fn line_starts(text: &str) -> impl Iterator<Item = usize> + '_ {
    std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1))
}

/// Case-insensitive literal match at `pos`; returns the end offset.
fn match_literal(text: &str, pos: usize, lit: &str) -> Option<usize> {
    let mut want = lit.chars().peekable();
    let mut end = pos;
    for (i, c) in text[pos..].char_indices() {
        if want.peek().is_none() {
            return Some(pos + i);
        }
        for lc in c.to_lowercase() {
            if want.next() != Some(lc) {
                return None;
            }
        }
        end = pos + i + c.len_utf8();
    }
    want.peek().is_none().then_some(end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderMatch {
    pub owner: HeaderOwner,
    /// Offset of the header literal (after indentation).
    pub start: usize,
    /// Offset just past the colon.
    pub end: usize,
}

/// Location of one extracted section within its document (byte offsets).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionMatch {
    pub section: SectionName,
    pub header_start: usize,
    /// Trimmed body bounds.
    pub start: usize,
    pub end: usize,
}

impl SectionMatch {
    pub fn body<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

/// Finds the first header of `section` and returns the trimmed body up to
/// the next header of any kind.
pub fn extract_section(
    text: &str,
    section: SectionName,
    rules: &HeaderRuleSet,
) -> Option<SectionMatch> {
    let headers = rules.headers(text);
    let idx = headers
        .iter()
        .position(|h| h.owner == HeaderOwner::Section(section))?;
    let header = headers[idx];
    let stop = headers.get(idx + 1).map_or(text.len(), |h| h.start);
    let raw = &text[header.end..stop];
    let lead = raw.len() - raw.trim_start().len();
    let body = raw.trim();
    Some(SectionMatch {
        section,
        header_start: header.start,
        start: header.end + lead,
        end: header.end + lead + body.len(),
    })
}

/// A reference summary: one target section of an encounter's discharge
/// summary. `start`/`end` are byte offsets into the discharge summary text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionInstance {
    pub encounter_id: String,
    pub section: SectionName,
    pub reference_text: String,
    pub start: usize,
    pub end: usize,
}

impl SectionInstance {
    pub fn from_match(encounter_id: &str, text: &str, m: SectionMatch) -> Self {
        Self {
            encounter_id: encounter_id.to_string(),
            section: m.section,
            reference_text: m.body(text).to_string(),
            start: m.start,
            end: m.end,
        }
    }

    /// Wire form; offsets are converted to character (code point) offsets.
    pub fn to_record(&self, document: &str) -> SectionRecord {
        let chars = |byte: usize| document[..byte].chars().count();
        SectionRecord {
            encounter_id: self.encounter_id.clone(),
            section: self.section,
            text: self.reference_text.clone(),
            start: chars(self.start),
            end: chars(self.end),
        }
    }
}

/// Extracted-sections JSON Lines record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub encounter_id: String,
    pub section: SectionName,
    pub text: String,
    /// Character offsets into the discharge summary.
    pub start: usize,
    pub end: usize,
}

/// Extracts a reference section from the encounter's discharge summary.
pub fn extract_reference(
    encounter: &Encounter,
    section: SectionName,
    rules: &HeaderRuleSet,
) -> Option<SectionInstance> {
    let text = &encounter.discharge_summary.text;
    extract_section(text, section, rules)
        .map(|m| SectionInstance::from_match(&encounter.encounter_id, text, m))
}

/// Applies the discharge-summary rules to every prior note, joining the hits
/// with blank lines in chart order. Empty bodies count as hits.
pub fn rule_based_extract_from_priors(
    encounter: &Encounter,
    section: SectionName,
    rules: &HeaderRuleSet,
) -> Option<String> {
    let hits: Vec<&str> = encounter
        .prior_notes
        .iter()
        .filter_map(|note| extract_section(&note.text, section, rules).map(|m| m.body(&note.text)))
        .collect();
    if hits.is_empty() {
        None
    } else {
        Some(hits.join("\n\n"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlagReason {
    TooLong {
        chars: usize,
    },
    ContainsHeader {
        section: SectionName,
        variant: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractionFlag {
    pub document: usize,
    #[serde(flatten)]
    pub reason: FlagReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionDiagnostics {
    pub section: SectionName,
    pub hits: usize,
    pub hit_rate: f64,
    pub flags: Vec<ExtractionFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleDiagnostics {
    pub documents: usize,
    pub sections: Vec<SectionDiagnostics>,
}

impl RuleDiagnostics {
    pub fn flag_count(&self) -> usize {
        self.sections.iter().map(|s| s.flags.len()).sum()
    }
}

/// Runs the rules over sample documents and flags extractions worth a manual
/// look: bodies longer than `max_body_chars`, and bodies that mention another
/// target section's header inline.
pub fn validate_rules(
    rules: &HeaderRuleSet,
    sample: &[&str],
    max_body_chars: usize,
) -> RuleDiagnostics {
    if sample.is_empty() {
        return RuleDiagnostics {
            documents: 0,
            sections: Vec::new(),
        };
    }
    let sections = SectionName::ALL
        .into_iter()
        .map(|section| {
            let mut hits = 0;
            let mut flags = Vec::new();
            for (doc, text) in sample.iter().enumerate() {
                let Some(m) = extract_section(text, section, rules) else {
                    continue;
                };
                hits += 1;
                let body = m.body(text);
                let chars = body.chars().count();
                if chars > max_body_chars {
                    flags.push(ExtractionFlag {
                        document: doc,
                        reason: FlagReason::TooLong { chars },
                    });
                }
                if let Some((other, variant)) = inline_header(rules, section, body) {
                    flags.push(ExtractionFlag {
                        document: doc,
                        reason: FlagReason::ContainsHeader {
                            section: other,
                            variant,
                        },
                    });
                }
            }
            SectionDiagnostics {
                section,
                hits,
                hit_rate: hits as f64 / sample.len() as f64,
                flags,
            }
        })
        .collect();
    RuleDiagnostics {
        documents: sample.len(),
        sections,
    }
}

fn inline_header(
    rules: &HeaderRuleSet,
    own: SectionName,
    body: &str,
) -> Option<(SectionName, String)> {
    let lower = body.to_lowercase();
    let seen: BTreeSet<_> = SectionName::ALL.into_iter().filter(|s| *s != own).collect();
    for other in seen {
        for lit in rules.variants(other) {
            let needle = format!("{lit}:");
            let found = lower.match_indices(&needle).any(|(i, _)| {
                lower[..i]
                    .chars()
                    .next_back()
                    .is_none_or(|c| !c.is_alphanumeric())
            });
            if found {
                return Some((other, needle));
            }
        }
    }
    None
}
