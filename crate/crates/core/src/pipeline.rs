//! Corpus-level drivers.
//!
//! The full pipeline reads the corpus twice. The first pass collects link
//! statistics and sentence starters; the second pass runs the three stages
//! over chunks of documents on a worker pool and hands the per-document
//! results to a sink in corpus order, so output does not depend on the
//! number of workers.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emit::{ConllWriter, JsonlWriter, SentenceRecord};
use crate::error::{Error, Result};
use crate::ingest::{read_corpus, OverlapPolicy};
use crate::io::{content_hash, AtomicWriter};
use crate::link_stats::{LinkStats, StatsCache};
use crate::model::{sentence_mentions, AnchorKind, AnnotatedSentence, Document, KnowledgeBase, TypeHierarchy};
use crate::nds::nds_annotate;
use crate::pos::{BuiltinTagger, EmbeddedTagger, PosTagger};
use crate::stage1::{apply_stage1, LinkCategory, LinkContext, Stage1Config, UnlinkRecord};
use crate::stage2::{build_tries, infer_links, InferEvent, InferOutcome, OutgoingLinkSet, Stage2Config};
use crate::stage3::{judge_sentences, SelectionLexicons, SentenceVerdict, StarterCounter, DEFAULT_STARTER_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosSource {
    /// Tags stored in the corpus records.
    Embedded,
    #[default]
    Builtin,
}

impl FromStr for PosSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" => Ok(PosSource::Embedded),
            "builtin" => Ok(PosSource::Builtin),
            other => Err(Error::Config(format!(
                "unknown pos source {other:?} (expected embedded or builtin)"
            ))),
        }
    }
}

impl PosSource {
    pub fn tagger(self) -> &'static dyn PosTagger {
        match self {
            PosSource::Embedded => &EmbeddedTagger,
            PosSource::Builtin => &BuiltinTagger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stage1: Stage1Config,
    pub stage2: Stage2Config,
    pub skip_stage3: bool,
    pub starter_count: usize,
    pub pos: PosSource,
    pub threads: usize,
    /// Documents handed to the worker pool at a time.
    pub chunk_size: usize,
    /// Abort on a document with overlapping anchors instead of skipping it.
    pub abort_on_overlap: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stage1: Stage1Config::default(),
            stage2: Stage2Config::default(),
            skip_stage3: false,
            starter_count: DEFAULT_STARTER_COUNT,
            pos: PosSource::default(),
            threads: 1,
            chunk_size: 256,
            abort_on_overlap: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.stage1.validate()?;
        if self.starter_count < 1 {
            return Err(Error::Config("starter list length must be at least 1".into()));
        }
        if self.threads < 1 || self.chunk_size < 1 {
            return Err(Error::Config("threads and chunk size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn overlap_policy(&self) -> OverlapPolicy {
        if self.abort_on_overlap {
            OverlapPolicy::Abort
        } else {
            OverlapPolicy::Skip
        }
    }
}

/// Results of the statistics pass.
#[derive(Debug, Clone)]
pub struct FirstPass {
    pub stats: LinkStats,
    pub starters: Vec<String>,
    pub from_cache: bool,
}

pub fn collect_first_pass(docs: impl IntoIterator<Item = Result<Document>>, starter_count: usize) -> Result<FirstPass> {
    let mut stats = LinkStats::new();
    let mut starters = StarterCounter::default();
    for doc in docs {
        let doc = doc?;
        stats.observe_document(&doc);
        starters.observe_document(&doc);
    }
    Ok(FirstPass {
        stats,
        starters: starters.top(starter_count),
        from_cache: false,
    })
}

/// Statistics pass over a corpus file, optionally served from a cache keyed
/// by the corpus content hash.
pub fn first_pass(corpus: &Path, config: &PipelineConfig, cache: Option<&Path>) -> Result<FirstPass> {
    let hash = match cache {
        Some(path) => {
            let hash = content_hash(corpus)?;
            if let Some(entry) = StatsCache::load(path)? {
                if entry.corpus_hash == hash && entry.starters_k == config.starter_count {
                    log::info!("using cached link statistics from {}", path.display());
                    return Ok(FirstPass {
                        stats: entry.stats,
                        starters: entry.starters,
                        from_cache: true,
                    });
                }
                log::info!("stats cache {} is stale; recomputing", path.display());
            }
            Some(hash)
        }
        None => None,
    };
    let pass = collect_first_pass(read_corpus(corpus, config.overlap_policy())?, config.starter_count)?;
    if let (Some(path), Some(corpus_hash)) = (cache, hash) {
        StatsCache {
            corpus_hash,
            stats: pass.stats.clone(),
            starters: pass.starters.clone(),
            starters_k: config.starter_count,
        }
        .store(path)?;
    }
    Ok(pass)
}

/// Per-stage counters; all fields add up across documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub stage1_anchors_in: usize,
    pub stage1_retained: usize,
    pub stage1_unlinked_non_referential: usize,
    pub stage1_unlinked_non_entity: usize,
    pub stage1_unlinked_unknown: usize,
    pub stage2_anchors_in: usize,
    pub stage2_inferred_entity: usize,
    pub stage2_inferred_non_entity: usize,
    pub stage2_ambiguous: usize,
    pub stage2_anchors_out: usize,
    pub sentences_selected: usize,
    pub sentences_discarded: usize,
    pub mentions: usize,
}

impl StageCounts {
    pub fn add(&mut self, o: &StageCounts) {
        self.documents += o.documents;
        self.sentences += o.sentences;
        self.tokens += o.tokens;
        self.stage1_anchors_in += o.stage1_anchors_in;
        self.stage1_retained += o.stage1_retained;
        self.stage1_unlinked_non_referential += o.stage1_unlinked_non_referential;
        self.stage1_unlinked_non_entity += o.stage1_unlinked_non_entity;
        self.stage1_unlinked_unknown += o.stage1_unlinked_unknown;
        self.stage2_anchors_in += o.stage2_anchors_in;
        self.stage2_inferred_entity += o.stage2_inferred_entity;
        self.stage2_inferred_non_entity += o.stage2_inferred_non_entity;
        self.stage2_ambiguous += o.stage2_ambiguous;
        self.stage2_anchors_out += o.stage2_anchors_out;
        self.sentences_selected += o.sentences_selected;
        self.sentences_discarded += o.sentences_discarded;
        self.mentions += o.mentions;
    }

    pub fn stage1_unlinked(&self) -> usize {
        self.stage1_unlinked_non_referential + self.stage1_unlinked_non_entity + self.stage1_unlinked_unknown
    }

    /// Checks that anchors and sentences are accounted for at every stage.
    pub fn reconcile(&self) -> Result<()> {
        let ok = self.stage1_anchors_in == self.stage1_retained + self.stage1_unlinked()
            && self.stage2_anchors_in == self.stage1_retained
            && self.stage2_anchors_out
                == self.stage2_anchors_in + self.stage2_inferred_entity + self.stage2_inferred_non_entity
            && self.sentences == self.sentences_selected + self.sentences_discarded;
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!("stage counts do not reconcile: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub doc_id: String,
    pub sentence: usize,
    pub token: usize,
    pub text: String,
}

/// One line of the diagnostics stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Diagnostic {
    Unlink(UnlinkRecord),
    Infer(InferEvent),
    Discard(DiscardRecord),
}

#[derive(Debug, Clone, Default)]
pub struct DocOutcome {
    pub sentences: Vec<AnnotatedSentence>,
    pub diagnostics: Vec<Diagnostic>,
    pub counts: StageCounts,
}

/// Read-only state for the transform pass.
pub struct Pipeline<'a> {
    pub kb: &'a KnowledgeBase,
    pub hierarchy: &'a TypeHierarchy,
    pub stats: &'a LinkStats,
    pub lexicons: &'a SelectionLexicons,
    pub config: &'a PipelineConfig,
}

impl Pipeline<'_> {
    fn context(&self) -> LinkContext<'_> {
        LinkContext {
            kb: self.kb,
            hierarchy: self.hierarchy,
            stats: self.stats,
        }
    }

    /// Runs all stages on one document.
    pub fn process(&self, doc: &Document) -> Result<DocOutcome> {
        let ctx = self.context();
        let cfg = self.config;
        let mut counts = StageCounts {
            documents: 1,
            sentences: doc.sentences.len(),
            tokens: doc.token_count(),
            ..StageCounts::default()
        };
        let mut diagnostics = Vec::new();

        let outgoing = OutgoingLinkSet::collect(doc, &ctx, &cfg.stage1);
        let (after1, unlinks) = apply_stage1(doc, &ctx, &cfg.stage1);
        counts.stage1_anchors_in = doc.anchors.len();
        counts.stage1_retained = after1.anchors.len();
        for u in &unlinks {
            match u.category {
                LinkCategory::EntityLink => counts.stage1_unlinked_non_referential += 1,
                LinkCategory::NonEntityLink => counts.stage1_unlinked_non_entity += 1,
                LinkCategory::Unknown => counts.stage1_unlinked_unknown += 1,
            }
        }
        diagnostics.extend(unlinks.into_iter().map(Diagnostic::Unlink));

        let tries = build_tries(&outgoing, self.kb, self.stats, &cfg.stage2);
        let (after2, events) = infer_links(&after1, &tries);
        after2
            .validate()
            .map_err(|e| Error::Invariant(e.to_string()).in_stage("stage II"))?;
        counts.stage2_anchors_in = after1.anchors.len();
        counts.stage2_anchors_out = after2.anchors.len();
        for e in &events {
            match &e.outcome {
                InferOutcome::Linked {
                    kind: AnchorKind::NonEntity,
                    ..
                } => counts.stage2_inferred_non_entity += 1,
                InferOutcome::Linked { .. } => counts.stage2_inferred_entity += 1,
                InferOutcome::Ambiguous { .. } => counts.stage2_ambiguous += 1,
            }
        }
        diagnostics.extend(events.into_iter().map(Diagnostic::Infer));

        let sentences = if cfg.skip_stage3 {
            (0..after2.sentences.len())
                .map(|i| AnnotatedSentence {
                    doc_id: after2.id.clone(),
                    sentence: i,
                    tokens: after2.sentences[i].clone(),
                    mentions: sentence_mentions(&after2, i, self.kb, self.hierarchy),
                })
                .collect()
        } else {
            let verdicts = judge_sentences(&after2, cfg.pos.tagger(), self.lexicons, self.kb, self.hierarchy)
                .map_err(|e| e.in_stage("stage III"))?;
            let mut kept = Vec::new();
            for v in verdicts {
                match v {
                    SentenceVerdict::Selected(s) => kept.push(s),
                    SentenceVerdict::Discarded { sentence, token } => {
                        counts.sentences_discarded += 1;
                        diagnostics.push(Diagnostic::Discard(DiscardRecord {
                            doc_id: after2.id.clone(),
                            sentence,
                            token,
                            text: after2.sentences[sentence][token].clone(),
                        }));
                    }
                }
            }
            kept
        };
        counts.sentences_selected = sentences.len();
        counts.mentions = sentences.iter().map(|s| s.mentions.len()).sum();
        Ok(DocOutcome {
            sentences,
            diagnostics,
            counts,
        })
    }

    /// Transform pass over an in-memory or streamed document sequence.
    pub fn run_docs<I, S>(&self, docs: I, mut sink: S) -> Result<StageCounts>
    where
        I: IntoIterator<Item = Result<Document>>,
        S: FnMut(DocOutcome) -> Result<()>,
    {
        self.config.validate()?;
        let mut total = StageCounts::default();
        drive(
            docs,
            self.config.threads,
            self.config.chunk_size,
            |d| self.process(d),
            |outcome| {
                total.add(&outcome.counts);
                sink(outcome)
            },
        )?;
        total.reconcile()?;
        Ok(total)
    }
}

/// Maps `f` over documents in parallel chunks and feeds results to `sink`
/// in input order.
pub fn drive<T, I, F, S>(docs: I, threads: usize, chunk_size: usize, f: F, mut sink: S) -> Result<()>
where
    T: Send,
    I: IntoIterator<Item = Result<Document>>,
    F: Fn(&Document) -> Result<T> + Sync,
    S: FnMut(T) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut docs = docs.into_iter();
    loop {
        let chunk: Vec<Document> = docs.by_ref().take(chunk_size.max(1)).collect::<Result<_>>()?;
        if chunk.is_empty() {
            return Ok(());
        }
        let results: Vec<Result<T>> = if threads <= 1 {
            chunk.iter().map(&f).collect()
        } else {
            pool.install(|| chunk.par_iter().map(&f).collect())
        };
        for r in results {
            sink(r?)?;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Jsonl,
    Conll,
    #[default]
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(OutputFormat::Jsonl),
            "conll" => Ok(OutputFormat::Conll),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (expected jsonl, conll or both)"
            ))),
        }
    }
}

/// Output files of one run, named `<stem>.jsonl`, `<stem>.conll` and
/// `<stem>.diagnostics.jsonl` inside `dir`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub jsonl: Option<PathBuf>,
    pub conll: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path, stem: &str, format: OutputFormat, diagnostics: bool) -> Self {
        let with = |ext: &str| dir.join(format!("{stem}.{ext}"));
        OutputPaths {
            jsonl: matches!(format, OutputFormat::Jsonl | OutputFormat::Both).then(|| with("jsonl")),
            conll: matches!(format, OutputFormat::Conll | OutputFormat::Both).then(|| with("conll")),
            diagnostics: diagnostics.then(|| with("diagnostics.jsonl")),
        }
    }
}

/// Writers for the dataset files; files appear only on [`DatasetSink::finish`].
pub struct DatasetSink {
    jsonl: Option<JsonlWriter>,
    conll: Option<ConllWriter>,
    diagnostics: Option<AtomicWriter>,
}

impl DatasetSink {
    pub fn create(paths: &OutputPaths) -> Result<Self> {
        Ok(DatasetSink {
            jsonl: paths.jsonl.as_deref().map(JsonlWriter::create).transpose()?,
            conll: paths.conll.as_deref().map(ConllWriter::create).transpose()?,
            diagnostics: paths.diagnostics.as_deref().map(AtomicWriter::create).transpose()?,
        })
    }

    pub fn write_sentences(&mut self, sentences: &[AnnotatedSentence]) -> Result<()> {
        for s in sentences {
            let record = SentenceRecord::from(s);
            if let Some(w) = self.jsonl.as_mut() {
                w.write_record(&record)?;
            }
            if let Some(w) = self.conll.as_mut() {
                w.write_record(&record)?;
            }
        }
        Ok(())
    }

    pub fn write_diagnostics(&mut self, diagnostics: &[Diagnostic]) -> Result<()> {
        if let Some(w) = self.diagnostics.as_mut() {
            for d in diagnostics {
                w.write_all(serde_json::to_string(d)?.as_bytes())?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn write(&mut self, outcome: &DocOutcome) -> Result<()> {
        self.write_sentences(&outcome.sentences)?;
        self.write_diagnostics(&outcome.diagnostics)
    }

    pub fn finish(self) -> Result<()> {
        if let Some(w) = self.jsonl {
            w.finish()?;
        }
        if let Some(w) = self.conll {
            w.finish()?;
        }
        if let Some(w) = self.diagnostics {
            w.finish()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub counts: StageCounts,
    pub documents_skipped: usize,
    pub selected_fraction: f64,
    pub stats_from_cache: bool,
    pub frequent_starters: usize,
    pub outputs: OutputPaths,
    pub config: PipelineConfig,
}

/// Optional lexicon overrides; `None` keeps the bundled defaults or, for
/// starters, the list computed from the corpus.
#[derive(Debug, Clone, Default)]
pub struct LexiconFiles {
    pub starters: Option<PathBuf>,
    pub titles: Option<PathBuf>,
    pub day_month: Option<PathBuf>,
}

impl LexiconFiles {
    pub fn build(&self, computed_starters: Vec<String>) -> Result<SelectionLexicons> {
        use crate::stage3::PhraseLexicon;
        let starters = match &self.starters {
            Some(p) => crate::io::read_entries(p)?,
            None => computed_starters,
        };
        let mut lex = SelectionLexicons::new(starters);
        if let Some(p) = &self.titles {
            lex.occupational_titles = PhraseLexicon::load(p)?;
        }
        if let Some(p) = &self.day_month {
            lex.day_month_names = PhraseLexicon::load(p)?;
        }
        Ok(lex)
    }
}

/// Both passes over a corpus file, writing the dataset files.
pub fn run_hands(
    corpus: &Path,
    kb: &KnowledgeBase,
    hierarchy: &TypeHierarchy,
    config: &PipelineConfig,
    lexicon_files: &LexiconFiles,
    stats_cache: Option<&Path>,
    outputs: &OutputPaths,
) -> Result<RunReport> {
    config.validate()?;
    let first = first_pass(corpus, config, stats_cache).map_err(|e| e.in_stage("link statistics"))?;
    let lexicons = lexicon_files.build(first.starters.clone())?;
    let pipeline = Pipeline {
        kb,
        hierarchy,
        stats: &first.stats,
        lexicons: &lexicons,
        config,
    };
    let mut reader = read_corpus(corpus, config.overlap_policy())?;
    let mut sink = DatasetSink::create(outputs)?;
    let counts = pipeline.run_docs(reader.by_ref(), |outcome| sink.write(&outcome))?;
    sink.finish()?;
    let skipped = reader.skipped();
    let report = RunReport {
        selected_fraction: if counts.sentences == 0 {
            0.0
        } else {
            counts.sentences_selected as f64 / counts.sentences as f64
        },
        counts,
        documents_skipped: skipped,
        stats_from_cache: first.from_cache,
        frequent_starters: lexicons.frequent_starters().len(),
        outputs: outputs.clone(),
        config: config.clone(),
    };
    log::info!(
        "{} documents, {} of {} sentences selected, {} mentions",
        counts.documents,
        counts.sentences_selected,
        counts.sentences,
        counts.mentions
    );
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NdsReport {
    pub documents: usize,
    pub documents_skipped: usize,
    pub sentences: usize,
    pub mentions: usize,
    pub outputs: Option<OutputPaths>,
}

/// Baseline annotation of a corpus file.
pub fn run_nds(
    corpus: &Path,
    kb: &KnowledgeBase,
    hierarchy: &TypeHierarchy,
    config: &PipelineConfig,
    outputs: &OutputPaths,
) -> Result<NdsReport> {
    config.validate()?;
    let mut reader = read_corpus(corpus, config.overlap_policy())?;
    let mut sink = DatasetSink::create(outputs)?;
    let mut report = NdsReport::default();
    drive(
        reader.by_ref(),
        config.threads,
        config.chunk_size,
        |doc| Ok(nds_annotate(doc, kb, hierarchy)),
        |sentences: Vec<AnnotatedSentence>| {
            report.documents += 1;
            report.sentences += sentences.len();
            report.mentions += sentences.iter().map(|s| s.mentions.len()).sum::<usize>();
            sink.write_sentences(&sentences)
        },
    )?;
    sink.finish()?;
    report.documents_skipped = reader.skipped();
    report.outputs = Some(outputs.clone());
    Ok(report)
}
