//! Dataset writers and the JSONL reader used by analysis and evaluation.
//!
//! JSONL: one sentence per line,
//! `{"doc":..,"sent":..,"tokens":[..],"mentions":[{"b":..,"e":..,"entity":..,"labels":[..]}]}`
//! with mentions ordered by start and labels sorted.
//!
//! CoNLL: one `token TAG [labels]` line per token, a blank line after each
//! sentence. Tags are BIO over the single class `ENT`; the `B-ENT` line also
//! carries the mention's labels joined with `|`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_lines, AtomicWriter};
use crate::model::{AnnotatedSentence, EntityId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionRecord {
    pub b: usize,
    pub e: usize,
    pub entity: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc: String,
    pub sent: usize,
    pub tokens: Vec<String>,
    pub mentions: Vec<MentionRecord>,
}

impl From<&AnnotatedSentence> for SentenceRecord {
    fn from(s: &AnnotatedSentence) -> Self {
        let mut mentions: Vec<MentionRecord> = s
            .mentions
            .iter()
            .map(|m| MentionRecord {
                b: m.span.start,
                e: m.span.end,
                entity: m.entity.0.clone(),
                labels: m.labels.iter().cloned().collect(),
            })
            .collect();
        mentions.sort_by(|a, b| (a.b, a.e, &a.entity).cmp(&(b.b, b.e, &b.entity)));
        SentenceRecord {
            doc: s.doc_id.clone(),
            sent: s.sentence,
            tokens: s.tokens.clone(),
            mentions,
        }
    }
}

impl SentenceRecord {
    /// Checks bounds and non-overlap of the mentions.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.mentions.len());
        for m in &self.mentions {
            if m.b >= m.e || m.e > self.tokens.len() {
                return Err(format!("mention {}..{} out of bounds", m.b, m.e));
            }
            if m.labels.is_empty() {
                return Err(format!("mention {}..{} has no labels", m.b, m.e));
            }
            spans.push((m.b, m.e));
        }
        spans.sort();
        if let Some(w) = spans.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(format!(
                "overlapping mentions {}..{} and {}..{}",
                w[0].0, w[0].1, w[1].0, w[1].1
            ));
        }
        Ok(())
    }

    pub fn label_set(m: &MentionRecord) -> BTreeSet<String> {
        m.labels.iter().cloned().collect()
    }

    pub fn entity_of(m: &MentionRecord) -> EntityId {
        EntityId(m.entity.clone())
    }
}

pub struct JsonlWriter {
    out: AtomicWriter,
    written: usize,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(JsonlWriter {
            out: AtomicWriter::create(path)?,
            written: 0,
        })
    }

    pub fn write(&mut self, sentence: &AnnotatedSentence) -> Result<()> {
        self.write_record(&SentenceRecord::from(sentence))
    }

    pub fn write_record(&mut self, record: &SentenceRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.out.write_all(&line)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<usize> {
        self.out.finish()?;
        Ok(self.written)
    }
}

pub fn write_jsonl<'a>(sentences: impl IntoIterator<Item = &'a AnnotatedSentence>, path: &Path) -> Result<usize> {
    let mut w = JsonlWriter::create(path)?;
    for s in sentences {
        w.write(s)?;
    }
    w.finish()
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SentenceRecord>> {
    let file = path.display().to_string();
    let mut out = Vec::new();
    for item in read_lines(path)? {
        let (line_no, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&file, line_no, format!("malformed record: {e}")))?;
        record.validate().map_err(|m| Error::parse(&file, line_no, m))?;
        out.push(record);
    }
    Ok(out)
}

/// Renders one sentence in CoNLL form, including the trailing blank line.
pub fn conll_block(record: &SentenceRecord) -> Result<String> {
    record
        .validate()
        .map_err(|m| Error::Invariant(format!("sentence {}:{}: {m}", record.doc, record.sent)))?;
    let mut tags: Vec<String> = vec!["O".to_string(); record.tokens.len()];
    for m in &record.mentions {
        tags[m.b] = format!("B-ENT {}", m.labels.join("|"));
        for tag in &mut tags[m.b + 1..m.e] {
            *tag = "I-ENT".to_string();
        }
    }
    let mut block = String::new();
    for (token, tag) in record.tokens.iter().zip(&tags) {
        block.push_str(token);
        block.push(' ');
        block.push_str(tag);
        block.push('\n');
    }
    block.push('\n');
    Ok(block)
}

pub struct ConllWriter {
    out: AtomicWriter,
}

impl ConllWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(ConllWriter {
            out: AtomicWriter::create(path)?,
        })
    }

    pub fn write(&mut self, sentence: &AnnotatedSentence) -> Result<()> {
        self.write_record(&SentenceRecord::from(sentence))
    }

    pub fn write_record(&mut self, record: &SentenceRecord) -> Result<()> {
        self.out.write_all(conll_block(record)?.as_bytes())
    }

    pub fn finish(self) -> Result<()> {
        self.out.finish()
    }
}

pub fn write_conll<'a>(sentences: impl IntoIterator<Item = &'a AnnotatedSentence>, path: &Path) -> Result<()> {
    let mut w = ConllWriter::create(path)?;
    for s in sentences {
        w.write(s)?;
    }
    w.finish()
}

/// A sentence read back from CoNLL: tokens and `(start, end, labels)` chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub tokens: Vec<String>,
    pub chunks: Vec<(usize, usize, Vec<String>)>,
}

/// Strict BIO reader: any irregularity a conlleval-style scorer would warn
/// about (unknown tag, `I-` without an open chunk, bad column count) is an error.
pub fn parse_conll(text: &str) -> Result<Vec<ConllSentence>> {
    let mut out = Vec::new();
    let mut current = ConllSentence {
        tokens: vec![],
        chunks: vec![],
    };
    let mut open = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !current.tokens.is_empty() {
                out.push(std::mem::replace(
                    &mut current,
                    ConllSentence {
                        tokens: vec![],
                        chunks: vec![],
                    },
                ));
            }
            open = false;
            continue;
        }
        let cols: Vec<&str> = line.split(' ').collect();
        let index = current.tokens.len();
        match cols.as_slice() {
            [token, "O"] => {
                current.tokens.push(token.to_string());
                open = false;
            }
            [token, "B-ENT", labels] => {
                current.tokens.push(token.to_string());
                let labels = labels.split('|').map(str::to_string).collect();
                current.chunks.push((index, index + 1, labels));
                open = true;
            }
            [token, "I-ENT"] if open => {
                current.tokens.push(token.to_string());
                current.chunks.last_mut().expect("open chunk").1 = index + 1;
            }
            [_, "I-ENT"] => return Err(Error::parse("conll", line_no, "I-ENT without a preceding chunk")),
            _ => return Err(Error::parse("conll", line_no, format!("unrecognised line {line:?}"))),
        }
    }
    if !current.tokens.is_empty() {
        out.push(current);
    }
    Ok(out)
}
