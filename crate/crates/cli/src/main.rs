//! `clinsum`: dataset construction, extract-stage plumbing and evaluation
//! for clinical encounter summarization.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn, LevelFilter};

use clinsum_core::corpus::{AssemblyConfig, Split, SplitRatios};
use clinsum_core::dataset::{build_dataset, BuildConfig, Dataset};
use clinsum_core::faithfulness::{ingest_entity_annotations, EntityBackend, Gazetteer};
use clinsum_core::jsonl;
use clinsum_core::labeler::{build_pseudo_pairs, LabelRecord};
use clinsum_core::pipeline::{
    apply_cutoff, chunk_encounter, merge_scores, oracle_summary, rule_based_summary,
    sweep_threshold, ChunkConfig, MergedRecord, ScoreRecord, Segment, SegmentRecord, SummaryRecord,
    SweepInstance, ThresholdSweepResult, ORACLE_SYSTEM, RULE_BASED_SYSTEM,
};
use clinsum_core::report::{evaluate, load_summaries, write_report, EvalConfig};
use clinsum_core::sections::{HeaderRuleSet, SectionName};

#[derive(Parser)]
#[command(
    name = "clinsum",
    version,
    about = "Clinical encounter summarization toolkit"
)]
struct Cli {
    /// Only report fatal errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset directory from a notes file.
    BuildDataset(BuildArgs),
    /// Write oracle extractive summaries.
    Oracle(SummaryArgs),
    /// Write pseudo sentence-pair labels.
    PseudoLabels(LabelArgs),
    /// Write rule-based summaries copied from prior notes.
    RuleBaseline(SummaryArgs),
    /// Cut encounters into token-bounded segments for an external scorer.
    Chunk(ChunkArgs),
    /// Stitch per-segment scores back into per-encounter lists.
    MergeScores(MergeArgs),
    /// Pick a score cutoff on validation data.
    Sweep(SweepArgs),
    /// Turn merged scores into extractive summaries.
    Cutoff(CutoffArgs),
    /// Score system summaries and write reports.
    Evaluate(EvalArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    notes: PathBuf,
    /// Header rules JSON; the bundled rules when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: SplitRatios,
    /// Drop encounters without an admission note.
    #[arg(long)]
    require_admission: bool,
    /// Treat bracketed de-identification placeholders as single tokens.
    #[arg(long)]
    mask_deid: bool,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// One section; all seven when omitted.
    #[arg(long)]
    section: Option<SectionName>,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    section: Option<SectionName>,
    #[arg(long, default_value = "train")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChunkArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    max_tokens: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    segments: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Merged scores for the validation encounters.
    #[arg(long)]
    merged: PathBuf,
    #[arg(long)]
    section: SectionName,
    #[arg(long, default_value = "validation")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CutoffArgs {
    #[arg(long)]
    merged: PathBuf,
    #[arg(long)]
    section: SectionName,
    #[arg(long, default_value = "extractive")]
    system: String,
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    threshold: Option<f64>,
    /// Sweep result whose chosen threshold is applied.
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Gazetteer,
    Annotations,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Glob of system summary files.
    #[arg(long)]
    systems: String,
    #[arg(long, value_enum, default_value = "gazetteer")]
    entity_backend: Backend,
    #[arg(long, required_if_eq("entity_backend", "gazetteer"))]
    gazetteer: Option<PathBuf>,
    #[arg(long, required_if_eq("entity_backend", "annotations"))]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
}

fn sections(one: Option<SectionName>) -> Vec<SectionName> {
    one.map_or_else(|| SectionName::ALL.to_vec(), |s| vec![s])
}

fn run_build(a: BuildArgs) -> Result<()> {
    let rules = match &a.rules {
        Some(p) => HeaderRuleSet::load(p)?,
        None => HeaderRuleSet::default_rules(),
    };
    let cfg = BuildConfig {
        ratios: a.ratios,
        seed: a.seed,
        assembly: AssemblyConfig {
            require_admission_note: a.require_admission,
            ..Default::default()
        },
        mask_deid: a.mask_deid,
    };
    let report = build_dataset(&a.notes, &rules, &cfg, &a.out)?;
    info!(
        "{} encounters; subjects train/validation/test = {}/{}/{}",
        report.encounters, report.subjects.train, report.subjects.validation, report.subjects.test
    );
    Ok(())
}

fn run_oracle(a: SummaryArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let tok = ds.tokenizer();
    let mut out = Vec::new();
    for section in sections(a.section) {
        for r in ds.sections(a.split, section)? {
            let enc = ds.encounter(&r.encounter_id)?;
            let (_, text) = oracle_summary(enc, &r.text, &tok)
                .with_context(|| format!("oracle for {} / {section}", r.encounter_id))?;
            out.push(SummaryRecord {
                encounter_id: r.encounter_id,
                section,
                system: ORACLE_SYSTEM.to_string(),
                text,
            });
        }
    }
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn run_rule_baseline(a: SummaryArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let mut out = Vec::new();
    for section in sections(a.section) {
        for r in ds.sections(a.split, section)? {
            let enc = ds.encounter(&r.encounter_id)?;
            out.push(SummaryRecord {
                text: rule_based_summary(enc, section, &ds.rules),
                encounter_id: r.encounter_id,
                section,
                system: RULE_BASED_SYSTEM.to_string(),
            });
        }
    }
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn run_labels(a: LabelArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let tok = ds.tokenizer();
    let mut out = Vec::new();
    for section in sections(a.section) {
        for r in ds.sections(a.split, section)? {
            let enc = ds.encounter(&r.encounter_id)?;
            let source = tok.sentence_pool(enc.source_texts());
            let reference = tok.split_sentences(&r.text);
            let set = build_pseudo_pairs(&reference, &source)
                .with_context(|| format!("labels for {} / {section}", r.encounter_id))?;
            out.push(LabelRecord::new(&r.encounter_id, section, &set));
        }
    }
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn run_chunk(a: ChunkArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let tok = ds.tokenizer();
    let cfg = ChunkConfig {
        max_tokens: a.max_tokens as usize,
        ..Default::default()
    };
    let mut out = Vec::new();
    for enc in ds.split_encounters(a.split) {
        let pool = tok.sentence_pool(enc.source_texts());
        out.extend(
            chunk_encounter(&enc.encounter_id, &pool, &cfg)
                .iter()
                .map(Segment::to_record),
        );
    }
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn run_merge(a: MergeArgs) -> Result<()> {
    let segments: Vec<SegmentRecord> = jsonl::read_strict(&a.segments)?;
    let scores: Vec<ScoreRecord> = jsonl::read_strict(&a.scores)?;
    let mut owner = BTreeMap::new();
    let mut by_enc: BTreeMap<String, Vec<Segment>> = BTreeMap::new();
    for rec in segments {
        owner.insert(rec.segment_id.clone(), rec.encounter_id.clone());
        by_enc
            .entry(rec.encounter_id.clone())
            .or_default()
            .push(Segment::from_record(rec));
    }
    let mut score_groups: BTreeMap<String, Vec<ScoreRecord>> = BTreeMap::new();
    for rec in scores {
        let Some(enc) = owner.get(&rec.segment_id) else {
            bail!("scores given for unknown segment {}", rec.segment_id);
        };
        score_groups.entry(enc.clone()).or_default().push(rec);
    }
    let mut out = Vec::new();
    for (enc, segs) in &by_enc {
        let group = score_groups.remove(enc).unwrap_or_default();
        let merged = merge_scores(segs, &group)?;
        out.push(MergedRecord::new(enc, &merged));
    }
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let tok = ds.tokenizer();
    let merged: BTreeMap<String, MergedRecord> = jsonl::read_strict::<MergedRecord>(&a.merged)?
        .into_iter()
        .map(|m| (m.encounter_id.clone(), m))
        .collect();
    let mut instances = Vec::new();
    for r in ds.sections(a.split, a.section)? {
        let scored = match merged.get(&r.encounter_id) {
            Some(m) => m.scored(),
            None => {
                warn!(
                    "no merged scores for {}; scored as an empty summary",
                    r.encounter_id
                );
                Vec::new()
            }
        };
        instances.push(SweepInstance {
            scored,
            reference_tokens: tok.surfaces(&r.text),
        });
    }
    let result = sweep_threshold(&instances, &tok)?;
    info!(
        "chosen threshold {} (mean ROUGE-L F1 {:.4})",
        result.chosen_threshold, result.best_mean_rouge_l_f1
    );
    jsonl::write_json(&a.out, &result)?;
    Ok(())
}

fn run_cutoff(a: CutoffArgs) -> Result<()> {
    let threshold = match (a.threshold, &a.sweep) {
        (Some(t), _) => t,
        (None, Some(p)) => jsonl::read_json::<ThresholdSweepResult>(p)?.chosen_threshold,
        (None, None) => bail!("either --threshold or --sweep is required"),
    };
    let merged: Vec<MergedRecord> = jsonl::read_strict(&a.merged)?;
    let out: Vec<SummaryRecord> = merged
        .iter()
        .map(|m| SummaryRecord {
            encounter_id: m.encounter_id.clone(),
            section: a.section,
            system: a.system.clone(),
            text: apply_cutoff(&m.scored(), threshold).text(),
        })
        .collect();
    jsonl::write(&a.out, &out)?;
    Ok(())
}

fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .with_context(|| format!("bad glob `{pattern}`"))?
        .collect::<Result<_, _>>()?;
    paths.sort();
    Ok(paths)
}

fn run_evaluate(a: EvalArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let backend = match a.entity_backend {
        Backend::Gazetteer => {
            let path = a.gazetteer.as_deref().context("--gazetteer is required")?;
            EntityBackend::Gazetteer(Gazetteer::load(path, ds.tokenizer())?)
        }
        Backend::Annotations => {
            let path = a
                .annotations
                .as_deref()
                .context("--annotations is required")?;
            let known = ds.encounters.keys().cloned().collect();
            EntityBackend::Annotations(ingest_entity_annotations(path, Some(&known))?)
        }
    };
    let paths = expand_glob(&a.systems)?;
    if paths.is_empty() {
        return Err(clinsum_core::Error::NoSystems)
            .with_context(|| format!("no files match `{}`", a.systems));
    }
    let summaries = load_summaries(&paths)?;
    let cfg = EvalConfig {
        split: a.split,
        beta: a.beta,
    };
    let (report, instances) = evaluate(&ds, &summaries, &backend, &cfg)?;
    write_report(&a.out, &report, &instances)?;
    info!(
        "{} report rows written to {}",
        report.rows.len(),
        a.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut logger =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if cli.quiet {
        logger.filter_level(LevelFilter::Error);
    }
    logger.format_timestamp(None).init();
    let result = match cli.command {
        Command::BuildDataset(a) => run_build(a),
        Command::Oracle(a) => run_oracle(a),
        Command::PseudoLabels(a) => run_labels(a),
        Command::RuleBaseline(a) => run_rule_baseline(a),
        Command::Chunk(a) => run_chunk(a),
        Command::MergeScores(a) => run_merge(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Cutoff(a) => run_cutoff(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
