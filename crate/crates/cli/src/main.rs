use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hands_core::analysis::{
    compare_annotations, corpus_stats, hierarchy_coverage, Bucket, CorpusStats, CoverageReport, Identity,
    OverlapReport, RootsMap,
};
use hands_core::bundled;
use hands_core::emit::{read_jsonl, SentenceRecord};
use hands_core::fixtures::{generate, write_fixture, FixtureConfig, Preset};
use hands_core::ingest::{read_hierarchy, read_kb, read_mapping};
use hands_core::metrics::{evaluate, TypingScores};
use hands_core::pipeline::{
    run_hands, run_nds, LexiconFiles, NdsReport, OutputFormat, OutputPaths, PipelineConfig, PosSource, RunReport,
};
use hands_core::{EvalReportF64, KnowledgeBase, TypeHierarchy};

#[derive(Parser)]
#[command(
    name = "hands",
    version,
    about = "Build and analyse distantly supervised entity datasets"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the pipeline subcommands. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Args, Default)]
struct Common {
    /// TOML file with any of the settings below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    kb_types: Option<PathBuf>,
    #[arg(long, global = true)]
    kb_aliases: Option<PathBuf>,
    /// Raw KB type to hierarchy path mapping
    #[arg(long, global = true)]
    mapping: Option<PathBuf>,
    /// Type hierarchy file; the bundled FIGER hierarchy when omitted
    #[arg(long, global = true)]
    hierarchy: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// jsonl, conll or both
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    skip_stage3: bool,
    #[arg(long, global = true)]
    emit_diagnostics: bool,
    #[arg(long, global = true)]
    support_threshold: Option<u64>,
    #[arg(long, global = true)]
    confidence_threshold: Option<f64>,
    #[arg(long, global = true)]
    unknown_as_nonentity: bool,
    #[arg(long, global = true)]
    starters_file: Option<PathBuf>,
    #[arg(long, global = true)]
    titles_file: Option<PathBuf>,
    #[arg(long, global = true)]
    daymonth_file: Option<PathBuf>,
    /// embedded or builtin
    #[arg(long, global = true)]
    pos: Option<PosSource>,
    #[arg(long, global = true)]
    stats_cache: Option<PathBuf>,
    /// Print machine-readable JSON instead of a table
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the three-stage pipeline
    Hands,
    /// Transcribe existing links only (baseline)
    Nds,
    /// Dataset statistics of one or more JSONL datasets
    Stats {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
    },
    /// Overlap between a pipeline dataset and a baseline dataset
    Compare {
        hands: PathBuf,
        nds: PathBuf,
        /// mention, entity or both
        #[arg(long, default_value = "both")]
        identity: String,
    },
    /// Share of hierarchy types below each coarse class
    Coverage {
        /// Roots map (path<TAB>class); defaults to the bundled map for the bundled hierarchy
        #[arg(long)]
        roots: Option<PathBuf>,
        /// Use a bundled hierarchy: figer or typenet
        #[arg(long, conflicts_with = "roots")]
        bundled: Option<String>,
    },
    /// Score a predicted dataset against gold
    Eval {
        gold: PathBuf,
        pred: PathBuf,
        /// Score every gold sentence, not only those present in both files
        #[arg(long)]
        all_sentences: bool,
    },
    /// Write a synthetic corpus, KB and gold annotations
    Fixtures {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        documents: usize,
        /// default or realistic-mix
        #[arg(long, default_value = "default")]
        preset: Preset,
    },
}

/// Settings readable from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    kb_types: Option<PathBuf>,
    kb_aliases: Option<PathBuf>,
    mapping: Option<PathBuf>,
    hierarchy: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    format: Option<OutputFormat>,
    threads: Option<usize>,
    chunk_size: Option<usize>,
    skip_stage3: Option<bool>,
    emit_diagnostics: Option<bool>,
    support_threshold: Option<u64>,
    confidence_threshold: Option<f64>,
    unknown_as_nonentity: Option<bool>,
    starter_count: Option<usize>,
    starters_file: Option<PathBuf>,
    titles_file: Option<PathBuf>,
    daymonth_file: Option<PathBuf>,
    pos: Option<PosSource>,
    stats_cache: Option<PathBuf>,
    abort_on_overlap: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
struct Inputs {
    corpus: PathBuf,
    kb_types: PathBuf,
    kb_aliases: PathBuf,
    mapping: PathBuf,
    hierarchy: Option<PathBuf>,
    out_dir: PathBuf,
    format: OutputFormat,
    emit_diagnostics: bool,
    stats_cache: Option<PathBuf>,
    starters_file: Option<PathBuf>,
    titles_file: Option<PathBuf>,
    daymonth_file: Option<PathBuf>,
}

/// Effective settings after merging flags, config file and defaults.
struct Settings {
    inputs: Inputs,
    pipeline: PipelineConfig,
}

fn required(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or(file)
        .ok_or_else(|| hands_core::Error::Config(format!("--{name} is required")).into())
}

fn settings(common: &Common) -> Result<Settings> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).map_err(|e| hands_core::Error::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let defaults = PipelineConfig::default();
    let mut pipeline = PipelineConfig {
        skip_stage3: common.skip_stage3 || file.skip_stage3.unwrap_or(defaults.skip_stage3),
        starter_count: file.starter_count.unwrap_or(defaults.starter_count),
        pos: common.pos.or(file.pos).unwrap_or(defaults.pos),
        threads: common.threads.or(file.threads).unwrap_or(defaults.threads),
        chunk_size: file.chunk_size.unwrap_or(defaults.chunk_size),
        abort_on_overlap: file.abort_on_overlap.unwrap_or(defaults.abort_on_overlap),
        ..defaults
    };
    pipeline.stage1.support_threshold = common
        .support_threshold
        .or(file.support_threshold)
        .unwrap_or(pipeline.stage1.support_threshold);
    pipeline.stage1.confidence_threshold = common
        .confidence_threshold
        .or(file.confidence_threshold)
        .unwrap_or(pipeline.stage1.confidence_threshold);
    pipeline.stage2.unknown_as_nonentity = common.unknown_as_nonentity || file.unknown_as_nonentity.unwrap_or(false);
    pipeline.validate()?;

    let inputs = Inputs {
        corpus: required(common.corpus.clone(), file.corpus, "corpus")?,
        kb_types: required(common.kb_types.clone(), file.kb_types, "kb-types")?,
        kb_aliases: required(common.kb_aliases.clone(), file.kb_aliases, "kb-aliases")?,
        mapping: required(common.mapping.clone(), file.mapping, "mapping")?,
        hierarchy: common.hierarchy.clone().or(file.hierarchy),
        out_dir: required(common.out_dir.clone(), file.out_dir, "out-dir")?,
        format: common.format.or(file.format).unwrap_or_default(),
        emit_diagnostics: common.emit_diagnostics || file.emit_diagnostics.unwrap_or(false),
        stats_cache: common.stats_cache.clone().or(file.stats_cache),
        starters_file: common.starters_file.clone().or(file.starters_file),
        titles_file: common.titles_file.clone().or(file.titles_file),
        daymonth_file: common.daymonth_file.clone().or(file.daymonth_file),
    };
    Ok(Settings { inputs, pipeline })
}

fn load_hierarchy(path: Option<&Path>) -> Result<TypeHierarchy> {
    match path {
        Some(p) => Ok(read_hierarchy(p)?),
        None => Ok(bundled::figer_hierarchy()),
    }
}

fn load_kb(inputs: &Inputs, h: &TypeHierarchy) -> Result<KnowledgeBase> {
    let mapping = read_mapping(&inputs.mapping, h)?;
    let kb = read_kb(&inputs.kb_types, &inputs.kb_aliases, &mapping, h)?;
    log::info!("knowledge base: {} entities", kb.entity_count());
    Ok(kb)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct HandsReport<'a> {
    inputs: &'a Inputs,
    #[serde(flatten)]
    run: &'a RunReport,
}

fn cmd_hands(common: &Common) -> Result<()> {
    let s = settings(common)?;
    let h = load_hierarchy(s.inputs.hierarchy.as_deref())?;
    let kb = load_kb(&s.inputs, &h)?;
    let lexicons = LexiconFiles {
        starters: s.inputs.starters_file.clone(),
        titles: s.inputs.titles_file.clone(),
        day_month: s.inputs.daymonth_file.clone(),
    };
    let outputs = OutputPaths::in_dir(&s.inputs.out_dir, "hands", s.inputs.format, s.inputs.emit_diagnostics);
    let run = run_hands(
        &s.inputs.corpus,
        &kb,
        &h,
        &s.pipeline,
        &lexicons,
        s.inputs.stats_cache.as_deref(),
        &outputs,
    )?;
    let report = HandsReport {
        inputs: &s.inputs,
        run: &run,
    };
    write_json(&s.inputs.out_dir.join("report.json"), &report)?;
    if common.json {
        return print_json(&report);
    }
    let c = &run.counts;
    println!("documents            {:>10}", c.documents);
    println!("documents skipped    {:>10}", run.documents_skipped);
    println!("sentences            {:>10}", c.sentences);
    println!("links in             {:>10}", c.stage1_anchors_in);
    println!("  retained           {:>10}", c.stage1_retained);
    println!("  non-referential    {:>10}", c.stage1_unlinked_non_referential);
    println!("  non-entity         {:>10}", c.stage1_unlinked_non_entity);
    println!("  unknown            {:>10}", c.stage1_unlinked_unknown);
    println!("links inferred       {:>10}", c.stage2_inferred_entity);
    println!("non-entity spans     {:>10}", c.stage2_inferred_non_entity);
    println!("ambiguous skips      {:>10}", c.stage2_ambiguous);
    println!("sentences selected   {:>10}", c.sentences_selected);
    println!("sentences discarded  {:>10}", c.sentences_discarded);
    println!("selected fraction    {:>10.4}", run.selected_fraction);
    println!("mentions             {:>10}", c.mentions);
    Ok(())
}

#[derive(Serialize)]
struct NdsRunReport<'a> {
    inputs: &'a Inputs,
    config: &'a PipelineConfig,
    #[serde(flatten)]
    run: &'a NdsReport,
}

fn cmd_nds(common: &Common) -> Result<()> {
    let s = settings(common)?;
    let h = load_hierarchy(s.inputs.hierarchy.as_deref())?;
    let kb = load_kb(&s.inputs, &h)?;
    let outputs = OutputPaths::in_dir(&s.inputs.out_dir, "nds", s.inputs.format, false);
    let run = run_nds(&s.inputs.corpus, &kb, &h, &s.pipeline, &outputs)?;
    let report = NdsRunReport {
        inputs: &s.inputs,
        config: &s.pipeline,
        run: &run,
    };
    write_json(&s.inputs.out_dir.join("nds.report.json"), &report)?;
    if common.json {
        return print_json(&report);
    }
    println!("documents  {:>10}", run.documents);
    println!("sentences  {:>10}", run.sentences);
    println!("mentions   {:>10}", run.mentions);
    Ok(())
}

fn cmd_stats(common: &Common, datasets: &[PathBuf]) -> Result<()> {
    let mut all = Vec::new();
    for path in datasets {
        let records = read_jsonl(path)?;
        let stats: CorpusStats<f64> = corpus_stats(&records);
        all.push((path.display().to_string(), stats));
    }
    if common.json {
        let map: serde_json::Map<String, serde_json::Value> = all
            .into_iter()
            .map(|(k, v)| Ok((k, serde_json::to_value(v)?)))
            .collect::<Result<_>>()?;
        return print_json(&map);
    }
    for (path, s) in all {
        println!("{path}");
        println!("  sentences                {:>10}", s.sentences);
        println!("  tokens                   {:>10}", s.tokens);
        println!("  unique tokens            {:>10}", s.unique_tokens);
        println!("  mean sentence length     {:>10.2}", s.mean_sentence_length);
        println!("  mentions                 {:>10}", s.mentions);
        println!("  unique mention surfaces  {:>10}", s.unique_mention_surfaces);
        println!("  unique entities          {:>10}", s.unique_entities);
        println!("  labels per mention       {:>10.3}", s.mean_labels_per_mention);
        println!("  types used               {:>10}", s.num_types_used);
    }
    Ok(())
}

fn cmd_compare(common: &Common, hands: &Path, nds: &Path, identity: &str) -> Result<()> {
    let identities = match identity {
        "both" => vec![Identity::Mention, Identity::Entity],
        other => vec![other.parse::<Identity>()?],
    };
    let h = read_jsonl(hands)?;
    let n = read_jsonl(nds)?;
    let mut reports: Vec<OverlapReport> = Vec::new();
    for identity in identities {
        let report = compare_annotations(&h, &n, identity)?;
        report.check_partition()?;
        reports.push(report);
    }
    if common.json {
        return print_json(&reports);
    }
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "identity", "|H|", "|N|", "|H-N|", "|H&N|", "|N-H|"
    );
    for r in &reports {
        println!(
            "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
            r.identity.to_string(),
            r.h,
            r.n,
            r.h_minus_n,
            r.intersection,
            r.n_minus_h
        );
    }
    if let Some(r) = reports.iter().find(|r| r.dropped_sentences > 0) {
        println!(
            "{} sentences not present in both files were ignored",
            r.dropped_sentences
        );
    }
    Ok(())
}

fn cmd_coverage(common: &Common, roots: Option<&Path>, which: Option<&str>) -> Result<()> {
    let (h, map) = match (which, roots) {
        (Some("figer"), _) => (bundled::figer_hierarchy(), bundled::figer_roots()),
        (Some("typenet"), _) => (bundled::typenet_hierarchy(), bundled::typenet_roots()),
        (Some(other), _) => {
            return Err(hands_core::Error::Config(format!(
                "unknown bundled hierarchy {other:?} (expected figer or typenet)"
            ))
            .into())
        }
        (None, Some(path)) => (load_hierarchy(common.hierarchy.as_deref())?, RootsMap::load(path)?),
        (None, None) if common.hierarchy.is_none() => (bundled::figer_hierarchy(), bundled::figer_roots()),
        (None, None) => bail!(hands_core::Error::Config("--roots is required with --hierarchy".into())),
    };
    let report: CoverageReport<f64> = hierarchy_coverage(&h, &map);
    for path in &report.unmapped_top_level {
        log::warn!("top-level type {path} has no class; counted as NONE");
    }
    if common.json {
        return print_json(&report);
    }
    println!("{} types", report.total_types);
    for b in Bucket::ALL {
        println!(
            "  {:<5} {:>6} {:>7.1}%",
            b.name(),
            report.counts.get(&b).copied().unwrap_or(0),
            100.0 * report.fractions.get(&b).copied().unwrap_or(0.0)
        );
    }
    println!("not covered by a coarse class: {:.1}%", 100.0 * report.not_covered);
    println!(
        "MISC share of covered types:   {:.1}%",
        100.0 * report.misc_share_of_rest
    );
    Ok(())
}

fn shared(records: Vec<SentenceRecord>, keys: &BTreeSet<(String, usize)>) -> Vec<SentenceRecord> {
    records
        .into_iter()
        .filter(|r| keys.contains(&(r.doc.clone(), r.sent)))
        .collect()
}

fn print_typing(name: &str, t: &TypingScores<f64>) {
    println!(
        "{name:<11} strict {:.4}  macro P {:.4} R {:.4} F1 {:.4}  micro P {:.4} R {:.4} F1 {:.4}",
        t.strict,
        t.loose_macro.precision,
        t.loose_macro.recall,
        t.loose_macro.f1,
        t.loose_micro.precision,
        t.loose_micro.recall,
        t.loose_micro.f1
    );
}

fn cmd_eval(common: &Common, gold: &Path, pred: &Path, all_sentences: bool) -> Result<()> {
    let mut gold = read_jsonl(gold)?;
    let mut pred = read_jsonl(pred)?;
    if !all_sentences {
        let g: BTreeSet<(String, usize)> = gold.iter().map(|r| (r.doc.clone(), r.sent)).collect();
        let p: BTreeSet<(String, usize)> = pred.iter().map(|r| (r.doc.clone(), r.sent)).collect();
        let keys: BTreeSet<(String, usize)> = g.intersection(&p).cloned().collect();
        if keys.len() < g.len() || keys.len() < p.len() {
            log::warn!(
                "scoring the {} sentences present in both files ({} gold, {} predicted)",
                keys.len(),
                g.len(),
                p.len()
            );
        }
        gold = shared(gold, &keys);
        pred = shared(pred, &keys);
    }
    let report: EvalReportF64 = evaluate(&gold, &pred)?;
    if common.json {
        return print_json(&report);
    }
    println!(
        "gold mentions {}, predicted mentions {}",
        report.gold_mentions, report.predicted_mentions
    );
    let d = &report.detection;
    println!("detection   P {:.4} R {:.4} F1 {:.4}", d.precision, d.recall, d.f1);
    print_typing("typing", &report.typing);
    print_typing("end-to-end", &report.end_to_end);
    Ok(())
}

fn cmd_fixtures(common: &Common, seed: u64, documents: usize, preset: Preset) -> Result<()> {
    let out_dir = common
        .out_dir
        .clone()
        .ok_or_else(|| hands_core::Error::Config("--out-dir is required".into()))?;
    let fixture = generate(FixtureConfig {
        seed,
        documents,
        preset,
    });
    let files = write_fixture(&fixture, &out_dir)?;
    if common.json {
        return print_json(&serde_json::json!({ "files": files, "planted": fixture.planted }));
    }
    println!("wrote {} documents to {}", fixture.documents.len(), out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Hands => cmd_hands(c),
        Command::Nds => cmd_nds(c),
        Command::Stats { datasets } => cmd_stats(c, datasets),
        Command::Compare { hands, nds, identity } => cmd_compare(c, hands, nds, identity),
        Command::Coverage { roots, bundled } => cmd_coverage(c, roots.as_deref(), bundled.as_deref()),
        Command::Eval {
            gold,
            pred,
            all_sentences,
        } => cmd_eval(c, gold, pred, *all_sentences),
        Command::Fixtures {
            seed,
            documents,
            preset,
        } => cmd_fixtures(c, *seed, *documents, *preset),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<hands_core::Error>()) {
        Some(e) if !e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
