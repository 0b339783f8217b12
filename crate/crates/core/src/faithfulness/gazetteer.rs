use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;

use super::{normalize_entity, EntitySet, Origin};
use crate::text::{Token, Tokenizer};
use crate::{Error, Result};

/// Flat dictionary of entity terms matched by greedy longest match.
///
/// Matching never crosses a line break or a sentence-final token
/// (`.`, `!`, `?`, `#`), so a term found in a summary built from source
/// sentences is always found in the source too.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    terms: HashMap<Vec<String>, String>,
    max_len: usize,
    tokenizer: Tokenizer,
}

fn is_boundary(surface: &str) -> bool {
    matches!(surface, "." | "!" | "?" | "#")
}

impl Gazetteer {
    /// Builds a gazetteer from raw terms. Blank terms are ignored; terms that
    /// contain a boundary token can never match and are dropped with a
    /// warning.
    pub fn new<I, S>(terms: I, tokenizer: Tokenizer) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for raw in terms {
            let raw = raw.as_ref();
            let name = normalize_entity(raw);
            if name.is_empty() {
                continue;
            }
            let toks: Vec<String> = tokenizer.surfaces(&name);
            if toks.iter().any(|t| is_boundary(t)) {
                warn!("gazetteer term `{raw}` spans a sentence boundary and is ignored");
                continue;
            }
            map.entry(toks).or_insert(name);
        }
        if map.is_empty() {
            return Err(Error::EmptyGazetteer);
        }
        let max_len = map.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            terms: map,
            max_len,
            tokenizer,
        })
    }

    /// Parses a gazetteer file: one term per line.
    pub fn from_text(body: &str, tokenizer: Tokenizer) -> Result<Self> {
        Self::new(body.lines(), tokenizer)
    }

    pub fn load(path: &Path, tokenizer: Tokenizer) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&body, tokenizer)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_term_tokens(&self) -> usize {
        self.max_len
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.values().any(|t| t == &normalize_entity(term))
    }

    /// Token runs that a match may not cross.
    fn units(&self, text: &str) -> Vec<Vec<String>> {
        let mut units = Vec::new();
        let mut current: Vec<String> = Vec::new();
        let mut prev: Option<&Token> = None;
        let tokens = self.tokenizer.tokenize(text);
        for tok in &tokens {
            let line_break = prev.is_some_and(|p| text[p.end..tok.start].contains('\n'));
            if (line_break || is_boundary(&tok.surface)) && !current.is_empty() {
                units.push(std::mem::take(&mut current));
            }
            if !is_boundary(&tok.surface) {
                current.push(tok.surface.to_lowercase());
            }
            prev = Some(tok);
        }
        if !current.is_empty() {
            units.push(current);
        }
        units
    }

    /// Left-to-right greedy longest match over the token stream.
    pub fn extract(&self, text: &str, origin: Origin) -> EntitySet {
        let mut found = EntitySet::empty(origin);
        for unit in self.units(text) {
            let mut i = 0;
            while i < unit.len() {
                let longest = (1..=self.max_len.min(unit.len() - i))
                    .rev()
                    .find_map(|n| self.terms.get(&unit[i..i + n]).map(|t| (n, t)));
                match longest {
                    Some((n, term)) => {
                        found.insert_normalized(term.clone());
                        i += n;
                    }
                    None => i += 1,
                }
            }
        }
        found
    }
}
