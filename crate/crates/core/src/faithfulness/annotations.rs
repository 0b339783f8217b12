use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{EntitySet, Origin};
use crate::jsonl::SkippedLine;
use crate::sections::SectionName;
use crate::{Error, Result};

/// Which text an annotation record belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnnotationKey {
    Source {
        encounter_id: String,
    },
    Reference {
        encounter_id: String,
        section: SectionName,
    },
    System {
        encounter_id: String,
        section: SectionName,
        system: String,
    },
}

impl AnnotationKey {
    pub fn encounter_id(&self) -> &str {
        match self {
            Self::Source { encounter_id }
            | Self::Reference { encounter_id, .. }
            | Self::System { encounter_id, .. } => encounter_id,
        }
    }

    pub fn origin(&self) -> Origin {
        match self {
            Self::Source { .. } => Origin::Source,
            Self::Reference { .. } => Origin::Reference,
            Self::System { .. } => Origin::System,
        }
    }
}

impl fmt::Display for AnnotationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Source { encounter_id } => write!(f, "enc:{encounter_id}:src"),
            Self::Reference {
                encounter_id,
                section,
            } => write!(f, "enc:{encounter_id}:{section}:ref"),
            Self::System {
                encounter_id,
                section,
                system,
            } => write!(f, "enc:{encounter_id}:{section}:sys:{system}"),
        }
    }
}

impl FromStr for AnnotationKey {
    type Err = Error;

    fn from_str(key: &str) -> Result<Self> {
        let bad = || Error::Dataset(format!("unrecognized annotation key `{key}`"));
        let rest = key.strip_prefix("enc:").ok_or_else(bad)?;
        if let Some(id) = rest.strip_suffix(":src") {
            if !id.is_empty() {
                return Ok(Self::Source {
                    encounter_id: id.to_string(),
                });
            }
        }
        if let Some(head) = rest.strip_suffix(":ref") {
            if let Some((id, section)) = head.rsplit_once(':') {
                if let (false, Ok(section)) = (id.is_empty(), section.parse()) {
                    return Ok(Self::Reference {
                        encounter_id: id.to_string(),
                        section,
                    });
                }
            }
        }
        for section in SectionName::ALL {
            let marker = format!(":{section}:sys:");
            if let Some(at) = rest.find(&marker) {
                let (id, system) = (&rest[..at], &rest[at + marker.len()..]);
                if !id.is_empty() && !system.is_empty() {
                    return Ok(Self::System {
                        encounter_id: id.to_string(),
                        section,
                        system: system.to_string(),
                    });
                }
            }
        }
        Err(bad())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct AnnotationRecord {
    key: String,
    entities: Vec<String>,
}

/// Entity sets read from an annotations file.
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    pub sets: BTreeMap<AnnotationKey, EntitySet>,
    /// Malformed lines and lines with unknown keys.
    pub skipped: Vec<SkippedLine>,
}

impl AnnotationStore {
    pub fn get(&self, key: &AnnotationKey) -> Option<&EntitySet> {
        self.sets.get(key)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Reads `{key, entities}` records. Records sharing a key are merged. When
/// `known_encounters` is given, keys for other encounters are skipped.
pub fn ingest_entity_annotations(
    path: &Path,
    known_encounters: Option<&BTreeSet<String>>,
) -> Result<AnnotationStore> {
    let body = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut store = AnnotationStore::default();
    for (idx, line) in body.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut skip = |reason: String| {
            warn!("{}:{line_no}: {reason}", path.display());
            store.skipped.push(SkippedLine {
                line: line_no,
                reason,
            });
        };
        let rec: AnnotationRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                skip(e.to_string());
                continue;
            }
        };
        let key: AnnotationKey = match rec.key.parse() {
            Ok(k) => k,
            Err(e) => {
                skip(e.to_string());
                continue;
            }
        };
        if known_encounters.is_some_and(|known| !known.contains(key.encounter_id())) {
            skip(format!("unknown encounter in key `{}`", rec.key));
            continue;
        }
        let origin = key.origin();
        store
            .sets
            .entry(key)
            .or_insert_with(|| EntitySet::empty(origin))
            .extend(rec.entities);
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn key_round_trip() {
        let keys = [
            "enc:e1:src",
            "enc:e:1:chief_complaint:ref",
            "enc:e1:family_history:sys:oracle_ext",
            "enc:a:b:social_history:sys:my:model",
        ];
        for k in keys {
            let parsed: AnnotationKey = k.parse().unwrap();
            assert_eq!(parsed.to_string(), k);
        }
        let k: AnnotationKey = "enc:e:1:chief_complaint:ref".parse().unwrap();
        assert_eq!(k.encounter_id(), "e:1");
        for bad in [
            "e1:src",
            "enc::src",
            "enc:e1:nope:ref",
            "enc:e1:chief_complaint:sys:",
            "enc:e1",
        ] {
            assert!(bad.parse::<AnnotationKey>().is_err(), "{bad}");
        }
    }

    fn file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn dedups_and_skips() {
        let f = file(&[
            r#"{"key":"enc:e1:src","entities":["HTN","chest pain","htn"]}"#,
            r#"{"key":"enc:e1:chief_complaint:ref","entities":["Chest  Pain","dm","dm"]}"#,
            r#"{"key":"enc:zz:src","entities":["x"]}"#,
            r#"{"key":"bogus","entities":[]}"#,
            r#"{"key":"enc:e1:src","entities":"#,
        ]);
        let known: BTreeSet<String> = ["e1".to_string()].into();
        let store = ingest_entity_annotations(f.path(), Some(&known)).unwrap();
        assert_eq!(store.len(), 2);
        let src = store
            .get(&AnnotationKey::Source {
                encounter_id: "e1".into(),
            })
            .unwrap();
        assert_eq!(src.iter().collect::<Vec<_>>(), vec!["chest pain", "htn"]);
        assert_eq!(src.origin, Origin::Source);
        let lines: Vec<usize> = store.skipped.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);

        let open = ingest_entity_annotations(f.path(), None).unwrap();
        assert_eq!(open.len(), 3);
    }

    #[test]
    fn empty_file() {
        let f = file(&[]);
        let store = ingest_entity_annotations(f.path(), None).unwrap();
        assert!(store.is_empty() && store.skipped.is_empty());
    }
}
