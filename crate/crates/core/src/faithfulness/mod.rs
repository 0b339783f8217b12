//! Entity-overlap faithfulness.
//!
//! Source, reference and system texts are each reduced to a set of
//! normalized entity strings. With S, R and Y for those sets:
//!
//! - B = |(R ∩ S) \ Y|, relevant entities the system missed
//! - C = |Y ∩ R ∩ S|, relevant entities the system kept
//! - F = |(Y ∩ R) \ S|, reference-only entities the system produced
//! - G = |Y \ (S ∪ R)|, incorrect hallucinations
//!
//! Faithfulness-adjusted precision is C/|Y|, recall is C/(B+C), and the
//! incorrect hallucination rate is G/|Y|.

mod annotations;
mod gazetteer;

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::sections::SectionName;
use crate::text::normalize;
use crate::{Error, Result};

pub use annotations::{ingest_entity_annotations, AnnotationKey, AnnotationStore};
pub use gazetteer::Gazetteer;

pub const DEFAULT_BETA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Source,
    Reference,
    System,
}

/// Lowercased, trimmed, internal whitespace collapsed.
pub fn normalize_entity(entity: &str) -> String {
    normalize(entity)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySet {
    entities: BTreeSet<String>,
    pub origin: Origin,
}

impl EntitySet {
    pub fn empty(origin: Origin) -> Self {
        Self {
            entities: BTreeSet::new(),
            origin,
        }
    }

    pub fn new<I, S>(origin: Origin, entities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::empty(origin);
        set.extend(entities);
        set
    }

    pub fn insert(&mut self, entity: &str) -> bool {
        let e = normalize_entity(entity);
        !e.is_empty() && self.entities.insert(e)
    }

    pub(crate) fn insert_normalized(&mut self, entity: String) {
        self.entities.insert(entity);
    }

    pub fn extend<I, S>(&mut self, entities: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for e in entities {
            self.insert(e.as_ref());
        }
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.entities.contains(&normalize_entity(entity))
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(String::as_str)
    }

    pub fn as_set(&self) -> &BTreeSet<String> {
        &self.entities
    }
}

/// Sizes of the seven regions of the source/reference/system Venn diagram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityVennRegions {
    pub source_only: usize,
    pub reference_only: usize,
    pub system_only: usize,
    pub source_reference_only: usize,
    pub source_system_only: usize,
    pub reference_system_only: usize,
    pub all_three: usize,
}

impl EntityVennRegions {
    pub fn b(&self) -> usize {
        self.source_reference_only
    }

    pub fn c(&self) -> usize {
        self.all_three
    }

    pub fn f(&self) -> usize {
        self.reference_system_only
    }

    pub fn g(&self) -> usize {
        self.system_only
    }

    pub fn source_total(&self) -> usize {
        self.source_only + self.source_reference_only + self.source_system_only + self.all_three
    }

    pub fn reference_total(&self) -> usize {
        self.reference_only
            + self.source_reference_only
            + self.reference_system_only
            + self.all_three
    }

    pub fn system_total(&self) -> usize {
        self.system_only + self.source_system_only + self.reference_system_only + self.all_three
    }
}

pub fn venn_regions(
    source: &EntitySet,
    reference: &EntitySet,
    system: &EntitySet,
) -> EntityVennRegions {
    let mut r = EntityVennRegions::default();
    let all: BTreeSet<&String> = source
        .entities
        .iter()
        .chain(&reference.entities)
        .chain(&system.entities)
        .collect();
    for e in all {
        let slot = match (
            source.entities.contains(e),
            reference.entities.contains(e),
            system.entities.contains(e),
        ) {
            (true, false, false) => &mut r.source_only,
            (false, true, false) => &mut r.reference_only,
            (false, false, true) => &mut r.system_only,
            (true, true, false) => &mut r.source_reference_only,
            (true, false, true) => &mut r.source_system_only,
            (false, true, true) => &mut r.reference_system_only,
            (true, true, true) => &mut r.all_three,
            (false, false, false) => unreachable!(),
        };
        *slot += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateFlag {
    EmptySystem,
    EmptyRelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessScores {
    pub fa_precision: f64,
    pub fa_recall: f64,
    pub fa_f_beta: f64,
    pub beta: f64,
    pub incorrect_hallucination_rate: f64,
    pub flags: BTreeSet<DegenerateFlag>,
}

/// Weighted harmonic mean of precision and recall, recall counting `beta`
/// times as much. Zero when both are zero.
pub fn fa_f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == recall {
        return precision;
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBeta(beta))
    }
}

pub fn faithfulness_scores(regions: &EntityVennRegions, beta: f64) -> Result<FaithfulnessScores> {
    check_beta(beta)?;
    let mut flags = BTreeSet::new();
    let system = regions.system_total();
    let relevant = regions.b() + regions.c();
    let (precision, ihr) = if system == 0 {
        flags.insert(DegenerateFlag::EmptySystem);
        (0.0, 0.0)
    } else {
        (
            regions.c() as f64 / system as f64,
            regions.g() as f64 / system as f64,
        )
    };
    let recall = if relevant == 0 {
        flags.insert(DegenerateFlag::EmptyRelevant);
        0.0
    } else {
        regions.c() as f64 / relevant as f64
    };
    Ok(FaithfulnessScores {
        fa_precision: precision,
        fa_recall: recall,
        fa_f_beta: fa_f_beta(precision, recall, beta),
        beta,
        incorrect_hallucination_rate: ihr,
        flags,
    })
}

/// Where entity sets come from.
#[derive(Debug, Clone)]
pub enum EntityBackend {
    Gazetteer(Gazetteer),
    Annotations(AnnotationStore),
}

impl EntityBackend {
    /// Entity set for one text. The annotation backend looks `key` up and
    /// ignores `text`; a missing record yields an empty set.
    pub fn entities(&self, key: &AnnotationKey, text: &str) -> EntitySet {
        match self {
            Self::Gazetteer(g) => g.extract(text, key.origin()),
            Self::Annotations(store) => store.get(key).cloned().unwrap_or_else(|| {
                warn!("no entity annotations for `{key}`, using an empty set");
                EntitySet::empty(key.origin())
            }),
        }
    }
}

/// One evaluation instance, borrowed from the caller.
#[derive(Debug, Clone, Copy)]
pub struct FaithInstance<'a> {
    pub encounter_id: &'a str,
    pub section: SectionName,
    pub system: &'a str,
    pub source: &'a str,
    pub reference: &'a str,
    pub summary: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionFaithfulness {
    /// Macro average; its `flags` are always empty.
    pub mean: FaithfulnessScores,
    pub instances: Vec<FaithfulnessScores>,
    pub n_empty_system: usize,
    pub n_empty_relevant: usize,
}

/// Macro average over already-scored instances, in the given order.
pub fn aggregate(instances: Vec<FaithfulnessScores>, beta: f64) -> Result<SectionFaithfulness> {
    check_beta(beta)?;
    if instances.is_empty() {
        return Err(Error::NoInstances);
    }
    let n = instances.len() as f64;
    let mean_of = |f: fn(&FaithfulnessScores) -> f64| instances.iter().map(f).sum::<f64>() / n;
    let count = |flag| instances.iter().filter(|s| s.flags.contains(&flag)).count();
    Ok(SectionFaithfulness {
        mean: FaithfulnessScores {
            fa_precision: mean_of(|s| s.fa_precision),
            fa_recall: mean_of(|s| s.fa_recall),
            fa_f_beta: mean_of(|s| s.fa_f_beta),
            beta,
            incorrect_hallucination_rate: mean_of(|s| s.incorrect_hallucination_rate),
            flags: BTreeSet::new(),
        },
        n_empty_system: count(DegenerateFlag::EmptySystem),
        n_empty_relevant: count(DegenerateFlag::EmptyRelevant),
        instances,
    })
}

pub fn evaluate_section(
    instances: &[FaithInstance<'_>],
    backend: &EntityBackend,
    beta: f64,
) -> Result<SectionFaithfulness> {
    check_beta(beta)?;
    let scores = instances
        .iter()
        .map(|inst| {
            let enc = inst.encounter_id.to_string();
            let source = backend.entities(
                &AnnotationKey::Source {
                    encounter_id: enc.clone(),
                },
                inst.source,
            );
            let reference = backend.entities(
                &AnnotationKey::Reference {
                    encounter_id: enc.clone(),
                    section: inst.section,
                },
                inst.reference,
            );
            let system = backend.entities(
                &AnnotationKey::System {
                    encounter_id: enc,
                    section: inst.section,
                    system: inst.system.to_string(),
                },
                inst.summary,
            );
            faithfulness_scores(&venn_regions(&source, &reference, &system), beta)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(scores, beta)
}
