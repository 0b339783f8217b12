//! Evaluation of system summaries against a built dataset, and the report
//! files derived from it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::Split;
use crate::dataset::Dataset;
use crate::faithfulness::{
    aggregate, faithfulness_scores, venn_regions, AnnotationKey, EntityBackend, EntitySet,
    FaithfulnessScores,
};
use crate::jsonl;
use crate::pipeline::SummaryRecord;
use crate::rouge::{rouge_l, rouge_n, RougeScore};
use crate::sections::SectionName;
use crate::text::{self, Tokenizer};
use crate::{Error, Result};

pub const TABLE_FILE: &str = "report.txt";
pub const CSV_FILE: &str = "report.csv";
pub const JSON_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "plot_data.csv";
pub const INSTANCES_FILE: &str = "instances.jsonl";

#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub split: Split,
    pub beta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            split: Split::Test,
            beta: crate::faithfulness::DEFAULT_BETA,
        }
    }
}

/// Scores of one system summary against one reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub encounter_id: String,
    pub section: SectionName,
    pub system: String,
    /// The system file had no summary for this instance.
    pub missing: bool,
    pub rouge_1: RougeScore,
    pub rouge_2: RougeScore,
    pub rouge_l: RougeScore,
    pub faithfulness: FaithfulnessScores,
    pub output_words: usize,
    pub output_sentences: usize,
}

/// Macro averages over a row's instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub rouge_1: RougeScore,
    pub rouge_2: RougeScore,
    pub rouge_l: RougeScore,
    pub fa_precision: f64,
    pub fa_recall: f64,
    pub fa_f_beta: f64,
    pub incorrect_hallucination_rate: f64,
    pub mean_output_words: f64,
    pub mean_output_sentences: f64,
    pub mean_reference_words: f64,
    pub mean_reference_sentences: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub section: SectionName,
    pub system: String,
    pub n_instances: usize,
    pub n_missing: usize,
    pub n_empty_system: usize,
    pub n_empty_relevant: usize,
    /// `None` when the section has no instances in the split.
    pub metrics: Option<RowMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub split: Split,
    pub beta: f64,
    /// Sorted by system, then section order.
    pub rows: Vec<ReportRow>,
}

/// Reads summary files; records from all files are pooled.
pub fn load_summaries(paths: &[impl AsRef<Path>]) -> Result<Vec<SummaryRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(jsonl::read_strict::<SummaryRecord>(p.as_ref())?);
    }
    Ok(all)
}

fn mean_rouge(scores: &[&RougeScore]) -> RougeScore {
    let n = scores.len() as f64;
    RougeScore {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

struct EntityCache<'a> {
    backend: &'a EntityBackend,
    sets: BTreeMap<AnnotationKey, EntitySet>,
}

impl EntityCache<'_> {
    fn get(&mut self, key: AnnotationKey, text: impl FnOnce() -> String) -> &EntitySet {
        let backend = self.backend;
        self.sets
            .entry(key)
            .or_insert_with_key(|k| backend.entities(k, &text()))
    }
}

/// Scores every system on every section of `cfg.split`. Summaries absent
/// from the input are scored as empty.
pub fn evaluate(
    dataset: &Dataset,
    summaries: &[SummaryRecord],
    backend: &EntityBackend,
    cfg: &EvalConfig,
) -> Result<(MetricReport, Vec<InstanceScores>)> {
    let mut by_key: BTreeMap<(&str, SectionName, &str), &str> = BTreeMap::new();
    for s in summaries {
        let key = (s.system.as_str(), s.section, s.encounter_id.as_str());
        if by_key.insert(key, &s.text).is_some() {
            warn!(
                "duplicate summary for {} / {} / {}; the last one is used",
                s.system, s.section, s.encounter_id
            );
        }
    }
    let systems: BTreeSet<&str> = summaries.iter().map(|s| s.system.as_str()).collect();
    if systems.is_empty() {
        return Err(Error::NoSystems);
    }
    let tokenizer = dataset.tokenizer();
    let mut cache = EntityCache {
        backend,
        sets: BTreeMap::new(),
    };
    let mut rows = Vec::new();
    let mut all_instances = Vec::new();
    let references: Vec<_> = SectionName::ALL
        .into_iter()
        .map(|sec| dataset.sections(cfg.split, sec).map(|r| (sec, r)))
        .collect::<Result<_>>()?;
    for system in &systems {
        for (section, refs) in &references {
            let mut instances = Vec::with_capacity(refs.len());
            let mut ref_words = 0;
            let mut ref_sents = 0;
            for r in refs {
                let enc = dataset.encounter(&r.encounter_id)?;
                let found = by_key.get(&(*system, *section, r.encounter_id.as_str()));
                let summary = found.copied().unwrap_or("");
                let source = cache
                    .get(
                        AnnotationKey::Source {
                            encounter_id: r.encounter_id.clone(),
                        },
                        || enc.source_text(),
                    )
                    .clone();
                let reference = cache
                    .get(
                        AnnotationKey::Reference {
                            encounter_id: r.encounter_id.clone(),
                            section: *section,
                        },
                        || r.text.clone(),
                    )
                    .clone();
                let sys_key = AnnotationKey::System {
                    encounter_id: r.encounter_id.clone(),
                    section: *section,
                    system: system.to_string(),
                };
                let system_set = backend.entities(&sys_key, summary);
                let faith =
                    faithfulness_scores(&venn_regions(&source, &reference, &system_set), cfg.beta)?;
                ref_words += text::word_count(&r.text);
                ref_sents += tokenizer.split_sentences(&r.text).len();
                instances.push(score_instance(
                    &tokenizer,
                    r.encounter_id.clone(),
                    *section,
                    system,
                    found.is_none(),
                    summary,
                    &r.text,
                    faith,
                )?);
            }
            rows.push(summarize_row(
                *section, system, &instances, ref_words, ref_sents, cfg.beta,
            )?);
            all_instances.extend(instances);
        }
    }
    Ok((
        MetricReport {
            split: cfg.split,
            beta: cfg.beta,
            rows,
        },
        all_instances,
    ))
}

#[allow(clippy::too_many_arguments)]
fn score_instance(
    tokenizer: &Tokenizer,
    encounter_id: String,
    section: SectionName,
    system: &str,
    missing: bool,
    summary: &str,
    reference: &str,
    faithfulness: FaithfulnessScores,
) -> Result<InstanceScores> {
    let cand = tokenizer.surfaces(summary);
    let refs = tokenizer.surfaces(reference);
    Ok(InstanceScores {
        encounter_id,
        section,
        system: system.to_string(),
        missing,
        rouge_1: rouge_n(&cand, &refs, 1)?,
        rouge_2: rouge_n(&cand, &refs, 2)?,
        rouge_l: rouge_l(&cand, &refs),
        faithfulness,
        output_words: text::word_count(summary),
        output_sentences: tokenizer.split_sentences(summary).len(),
    })
}

fn summarize_row(
    section: SectionName,
    system: &str,
    instances: &[InstanceScores],
    ref_words: usize,
    ref_sents: usize,
    beta: f64,
) -> Result<ReportRow> {
    let n = instances.len();
    let mut row = ReportRow {
        section,
        system: system.to_string(),
        n_instances: n,
        n_missing: instances.iter().filter(|i| i.missing).count(),
        n_empty_system: 0,
        n_empty_relevant: 0,
        metrics: None,
    };
    if n == 0 {
        return Ok(row);
    }
    let faith = aggregate(
        instances.iter().map(|i| i.faithfulness.clone()).collect(),
        beta,
    )?;
    row.n_empty_system = faith.n_empty_system;
    row.n_empty_relevant = faith.n_empty_relevant;
    let nf = n as f64;
    let collect = |f: fn(&InstanceScores) -> &RougeScore| {
        mean_rouge(&instances.iter().map(f).collect::<Vec<_>>())
    };
    row.metrics = Some(RowMetrics {
        rouge_1: collect(|i| &i.rouge_1),
        rouge_2: collect(|i| &i.rouge_2),
        rouge_l: collect(|i| &i.rouge_l),
        fa_precision: faith.mean.fa_precision,
        fa_recall: faith.mean.fa_recall,
        fa_f_beta: faith.mean.fa_f_beta,
        incorrect_hallucination_rate: faith.mean.incorrect_hallucination_rate,
        mean_output_words: instances.iter().map(|i| i.output_words).sum::<usize>() as f64 / nf,
        mean_output_sentences: instances.iter().map(|i| i.output_sentences).sum::<usize>() as f64
            / nf,
        mean_reference_words: ref_words as f64 / nf,
        mean_reference_sentences: ref_sents as f64 / nf,
    });
    Ok(row)
}

/// Column names of the CSV report, in order.
pub const CSV_COLUMNS: [&str; 26] = [
    "section",
    "system",
    "n_instances",
    "n_missing",
    "n_empty_system",
    "n_empty_relevant",
    "rouge_1_p",
    "rouge_1_r",
    "rouge_1_f1",
    "rouge_2_p",
    "rouge_2_r",
    "rouge_2_f1",
    "rouge_l_p",
    "rouge_l_r",
    "rouge_l_f1",
    "fa_precision",
    "fa_recall",
    "fa_f_beta",
    "incorrect_hallucination_rate",
    "beta",
    "mean_output_words",
    "mean_output_sentences",
    "mean_reference_words",
    "mean_reference_sentences",
    "split",
    "defined",
];

fn metric_values(m: &RowMetrics) -> [f64; 13] {
    [
        m.rouge_1.precision,
        m.rouge_1.recall,
        m.rouge_1.f1,
        m.rouge_2.precision,
        m.rouge_2.recall,
        m.rouge_2.f1,
        m.rouge_l.precision,
        m.rouge_l.recall,
        m.rouge_l.f1,
        m.fa_precision,
        m.fa_recall,
        m.fa_f_beta,
        m.incorrect_hallucination_rate,
    ]
}

pub fn to_csv(report: &MetricReport) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in &report.rows {
        let mut cells = vec![
            row.section.to_string(),
            row.system.clone(),
            row.n_instances.to_string(),
            row.n_missing.to_string(),
            row.n_empty_system.to_string(),
            row.n_empty_relevant.to_string(),
        ];
        match &row.metrics {
            Some(m) => {
                cells.extend(metric_values(m).iter().map(f64::to_string));
                cells.push(report.beta.to_string());
                cells.extend(
                    [
                        m.mean_output_words,
                        m.mean_output_sentences,
                        m.mean_reference_words,
                        m.mean_reference_sentences,
                    ]
                    .iter()
                    .map(f64::to_string),
                );
            }
            None => {
                cells.extend(std::iter::repeat_n(String::new(), 13));
                cells.push(report.beta.to_string());
                cells.extend(std::iter::repeat_n(String::new(), 4));
            }
        }
        cells.push(report.split.to_string());
        cells.push(row.metrics.is_some().to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

fn triple(a: f64, b: f64, c: f64) -> String {
    format!("{}/{}/{}", pct(a), pct(b), pct(c))
}

/// Aligned plain-text table; scores in percent with one decimal.
pub fn to_table(report: &MetricReport) -> String {
    let fb = format!("FA P/R/F{}", report.beta);
    let header = [
        "section",
        "system",
        "n",
        "missing",
        "R-1 P/R/F",
        "R-2 P/R/F",
        "R-L P/R/F",
        &fb,
        "IHR",
        "out words",
        "out sents",
    ];
    let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for row in &report.rows {
        let mut cells = vec![
            row.section.to_string(),
            row.system.clone(),
            row.n_instances.to_string(),
            row.n_missing.to_string(),
        ];
        match &row.metrics {
            Some(m) => cells.extend([
                triple(m.rouge_1.precision, m.rouge_1.recall, m.rouge_1.f1),
                triple(m.rouge_2.precision, m.rouge_2.recall, m.rouge_2.f1),
                triple(m.rouge_l.precision, m.rouge_l.recall, m.rouge_l.f1),
                triple(m.fa_precision, m.fa_recall, m.fa_f_beta),
                pct(m.incorrect_hallucination_rate),
                format!("{:.1}", m.mean_output_words),
                format!("{:.1}", m.mean_output_sentences),
            ]),
            None => cells.extend(std::iter::repeat_n("-".to_string(), 7)),
        }
        lines.push(cells);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            lines
                .iter()
                .map(|l| l[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        let row: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(row.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    out
}

/// Long-format points for score-vs-output-length plots.
pub fn plot_data(report: &MetricReport) -> String {
    let mut out = String::from("section,mean_output_words,system,metric,value\n");
    for row in &report.rows {
        let Some(m) = &row.metrics else { continue };
        for (metric, value) in [
            ("rouge_l_f1", m.rouge_l.f1),
            (
                "incorrect_hallucination_rate",
                m.incorrect_hallucination_rate,
            ),
        ] {
            let _ = writeln!(
                out,
                "{},{},{},{metric},{value}",
                row.section, m.mean_output_words, row.system
            );
        }
    }
    out
}

/// Writes the table, CSV, JSON, plot data and per-instance scores.
pub fn write_report(out: &Path, report: &MetricReport, instances: &[InstanceScores]) -> Result<()> {
    jsonl::write_text(&out.join(TABLE_FILE), &to_table(report))?;
    jsonl::write_text(&out.join(CSV_FILE), &to_csv(report))?;
    jsonl::write_json(&out.join(JSON_FILE), report)?;
    jsonl::write_text(&out.join(PLOT_FILE), &plot_data(report))?;
    jsonl::write(&out.join(INSTANCES_FILE), instances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(section: SectionName, system: &str, f1: f64) -> ReportRow {
        let r = RougeScore {
            precision: 0.123456,
            recall: 1.0,
            f1,
        };
        ReportRow {
            section,
            system: system.into(),
            n_instances: 2,
            n_missing: 1,
            n_empty_system: 1,
            n_empty_relevant: 0,
            metrics: Some(RowMetrics {
                rouge_1: r,
                rouge_2: r,
                rouge_l: r,
                fa_precision: 0.711,
                fa_recall: 0.852,
                fa_f_beta: 0.836,
                incorrect_hallucination_rate: 0.05,
                mean_output_words: 12.5,
                mean_output_sentences: 2.0,
                mean_reference_words: 10.0,
                mean_reference_sentences: 1.5,
            }),
        }
    }

    fn report() -> MetricReport {
        let mut empty = row(SectionName::FamilyHistory, "b", 0.0);
        empty.metrics = None;
        empty.n_instances = 0;
        MetricReport {
            split: Split::Test,
            beta: 3.0,
            rows: vec![row(SectionName::ChiefComplaint, "a", 0.5), empty],
        }
    }

    #[test]
    fn table_uses_percent_triples() {
        let t = to_table(&report());
        assert!(t.contains("71.1/85.2/83.6"), "{t}");
        assert!(t.contains("12.3/100.0/50.0"));
        assert!(t.lines().nth(1).unwrap().starts_with("---"));
        let widths: BTreeSet<usize> = t
            .lines()
            .skip(2)
            .map(|l| l.find("chief").unwrap_or(0))
            .collect();
        assert_eq!(widths.len(), 1);
    }

    #[test]
    fn csv_shape() {
        let csv = to_csv(&report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.split(',').count(), CSV_COLUMNS.len());
        }
        assert!(lines[1].contains("0.123456"));
        assert!(lines[2].ends_with(",test,false"));
    }

    #[test]
    fn plot_rows_skip_undefined() {
        let p = plot_data(&report());
        assert_eq!(
            p,
            "section,mean_output_words,system,metric,value\n\
             chief_complaint,12.5,a,rouge_l_f1,0.5\n\
             chief_complaint,12.5,a,incorrect_hallucination_rate,0.05\n"
        );
    }
}
