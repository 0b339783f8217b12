//! The two reference-point extractors: the ROUGE-L oracle and the
//! rule-based section copier.

use crate::corpus::Encounter;
use crate::labeler::{oracle_extract, OracleExtraction};
use crate::sections::{rule_based_extract_from_priors, HeaderRuleSet, SectionName};
use crate::text::Tokenizer;
use crate::Result;

pub const ORACLE_SYSTEM: &str = "oracle_ext";
pub const RULE_BASED_SYSTEM: &str = "rule_based_ext";

/// Oracle summary of `reference` drawn from the encounter's prior notes.
/// The summary keeps the raw pick sequence, one line per reference sentence.
pub fn oracle_summary(
    encounter: &Encounter,
    reference: &str,
    tokenizer: &Tokenizer,
) -> Result<(OracleExtraction, String)> {
    let source = tokenizer.sentence_pool(encounter.source_texts());
    let reference = tokenizer.split_sentences(reference);
    let extraction = oracle_extract(&reference, &source)?;
    let text = extraction.summary();
    Ok((extraction, text))
}

/// Rule-based baseline text; empty when no prior note has the section.
pub fn rule_based_summary(
    encounter: &Encounter,
    section: SectionName,
    rules: &HeaderRuleSet,
) -> String {
    rule_based_extract_from_priors(encounter, section, rules).unwrap_or_default()
}
