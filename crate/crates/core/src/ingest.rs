//! Readers for the linked corpus, knowledge base, type mapping and hierarchy.
//!
//! Corpus files hold one JSON document record per line:
//!
//! ```text
//! {"id":"d1","self_entity":"Bill_Gates","sentences":[["Gates","founded","Microsoft"]],
//!  "anchors":[{"s":0,"b":2,"e":3,"t":"Microsoft"}]}
//! ```
//!
//! `self_entity` and `pos` (tags aligned with `sentences`) are optional. Anchor
//! records may carry `"k"` (`inferred` / `non_entity`) when a processed corpus
//! is written back out.
//!
//! KB files are tab separated: `entity<TAB>raw_type`, `entity<TAB>alias`, and
//! the mapping file `raw_type<TAB>/type/path`. The hierarchy file holds one type
//! path per line. Blank lines and `#` comments are skipped in every tabular file.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{clean_entry, read_lines, AtomicWriter};
use crate::model::{AnchorKind, Document, EntityId, KnowledgeBase, TokenSpan, TypeHierarchy};

/// What to do with a corpus document whose anchors overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapPolicy {
    /// Stop reading with an error.
    Abort,
    /// Drop the document and log a warning.
    #[default]
    Skip,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnchorRecord {
    s: usize,
    b: usize,
    e: usize,
    t: String,
    #[serde(default = "link_kind", skip_serializing_if = "is_link")]
    k: AnchorKind,
}

fn link_kind() -> AnchorKind {
    AnchorKind::Link
}

fn is_link(kind: &AnchorKind) -> bool {
    *kind == AnchorKind::Link
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    self_entity: Option<String>,
    sentences: Vec<Vec<String>>,
    #[serde(default)]
    anchors: Vec<AnchorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<Vec<String>>>,
}

enum LineError {
    Overlap(String),
    Invalid(String),
}

fn record_to_document(record: DocumentRecord) -> std::result::Result<Document, LineError> {
    if record.id.is_empty() {
        return Err(LineError::Invalid("empty document id".into()));
    }
    if record
        .sentences
        .iter()
        .any(|s| s.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)))
    {
        return Err(LineError::Invalid(
            "tokens must be non-empty and contain no whitespace".into(),
        ));
    }
    let mut spans: Vec<(TokenSpan, AnchorKind)> = record
        .anchors
        .iter()
        .map(|a| (TokenSpan::new(a.s, a.b, a.e), a.k))
        .collect();
    spans.sort();
    if let Some(w) = spans.windows(2).find(|w| w[0].0.overlaps(&w[1].0)) {
        return Err(LineError::Overlap(format!(
            "overlapping anchors in sentence {} ({}..{} and {}..{})",
            w[0].0.sentence, w[0].0.start, w[0].0.end, w[1].0.start, w[1].0.end
        )));
    }
    let links = record
        .anchors
        .iter()
        .map(|a| (TokenSpan::new(a.s, a.b, a.e), EntityId(a.t.clone())))
        .collect();
    let mut doc =
        Document::new(record.id, record.self_entity.map(EntityId), record.sentences, links).map_err(|e| match e {
            Error::Input(msg) => LineError::Invalid(msg),
            other => LineError::Invalid(other.to_string()),
        })?;
    // Document::new sorts anchors by span, as `spans` is sorted
    for (anchor, (_, kind)) in doc.anchors.iter_mut().zip(&spans) {
        anchor.kind = *kind;
    }
    if let Some(pos) = record.pos {
        doc = doc.with_pos(pos).map_err(|e| LineError::Invalid(e.to_string()))?;
    }
    Ok(doc)
}

/// Parses one corpus line. Overlapping anchors are reported as an error here;
/// [`CorpusReader`] applies the [`OverlapPolicy`].
pub fn parse_document(line: &str, file: &str, line_no: usize) -> Result<Document> {
    let record: DocumentRecord =
        serde_json::from_str(line).map_err(|e| Error::parse(file, line_no, format!("malformed record: {e}")))?;
    record_to_document(record).map_err(|e| match e {
        LineError::Overlap(m) | LineError::Invalid(m) => Error::parse(file, line_no, m),
    })
}

/// Streaming corpus reader yielding documents in file order.
pub struct CorpusReader {
    lines: Box<dyn Iterator<Item = Result<(usize, String)>> + Send>,
    file: String,
    policy: OverlapPolicy,
    skipped: usize,
}

impl CorpusReader {
    /// Documents dropped so far because of overlapping anchors.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (line_no, line) = match self.lines.next()? {
                Ok(pair) => pair,
                Err(e) => return Some(Err(e)),
            };
            if line.trim().is_empty() {
                continue;
            }
            let record: DocumentRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => return Some(Err(Error::parse(&self.file, line_no, format!("malformed record: {e}")))),
            };
            let id = record.id.clone();
            match record_to_document(record) {
                Ok(doc) => return Some(Ok(doc)),
                Err(LineError::Overlap(msg)) if self.policy == OverlapPolicy::Skip => {
                    log::warn!("{}:{line_no}: skipping document {id}: {msg}", self.file);
                    self.skipped += 1;
                }
                Err(LineError::Overlap(msg)) | Err(LineError::Invalid(msg)) => {
                    return Some(Err(Error::parse(&self.file, line_no, msg)))
                }
            }
        }
    }
}

pub fn read_corpus(path: &Path, policy: OverlapPolicy) -> Result<CorpusReader> {
    Ok(CorpusReader {
        lines: Box::new(read_lines(path)?),
        file: path.display().to_string(),
        policy,
        skipped: 0,
    })
}

/// Serializes one document as a corpus line (without the trailing newline).
pub fn document_to_line(doc: &Document) -> String {
    let record = DocumentRecord {
        id: doc.id.clone(),
        self_entity: doc.self_entity.as_ref().map(|e| e.0.clone()),
        sentences: doc.sentences.clone(),
        anchors: doc
            .anchors
            .iter()
            .map(|a| AnchorRecord {
                s: a.span.sentence,
                b: a.span.start,
                e: a.span.end,
                t: a.target.0.clone(),
                k: a.kind,
            })
            .collect(),
        pos: doc.pos.clone(),
    };
    serde_json::to_string(&record).expect("document records always serialize")
}

pub fn write_corpus<'a>(docs: impl IntoIterator<Item = &'a Document>, path: &Path) -> Result<()> {
    let mut out = AtomicWriter::create(path)?;
    for doc in docs {
        out.write_all(document_to_line(doc).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.finish()
}

/// Reads a hierarchy file, adding (and warning about) missing prefixes.
pub fn read_hierarchy(path: &Path) -> Result<TypeHierarchy> {
    let file = path.display().to_string();
    let mut paths = Vec::new();
    for item in read_lines(path)? {
        let (line_no, line) = item?;
        let Some(entry) = clean_entry(&line) else { continue };
        if !entry.starts_with('/') {
            return Err(Error::parse(
                &file,
                line_no,
                format!("type path {entry:?} does not start with '/'"),
            ));
        }
        paths.push(entry.to_string());
    }
    let (hierarchy, added) = TypeHierarchy::prefix_closed(&paths)?;
    for prefix in &added {
        log::warn!("{file}: added missing prefix {prefix}");
    }
    Ok(hierarchy)
}

/// Raw KB type → hierarchy path(s).
#[derive(Debug, Clone, Default)]
pub struct TypeMapping {
    map: HashMap<String, BTreeSet<String>>,
}

impl TypeMapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one mapping entry after checking the image exists in `hierarchy`.
    pub fn insert(&mut self, raw: impl Into<String>, path: impl Into<String>, hierarchy: &TypeHierarchy) -> Result<()> {
        let path = path.into();
        if !hierarchy.contains(&path) {
            return Err(Error::Input(format!(
                "mapping target {path} is not in the type hierarchy"
            )));
        }
        self.map.entry(raw.into()).or_default().insert(path);
        Ok(())
    }

    pub fn get(&self, raw: &str) -> Option<&BTreeSet<String>> {
        self.map.get(raw)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn images(&self) -> impl Iterator<Item = &String> {
        self.map.values().flatten()
    }
}

fn split_pair<'a>(line: &'a str, file: &str, line_no: usize) -> Result<(&'a str, &'a str)> {
    let mut parts = line.splitn(2, '\t');
    match (parts.next(), parts.next()) {
        (Some(a), Some(b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim(), b.trim())),
        _ => Err(Error::parse(file, line_no, "expected two tab-separated columns")),
    }
}

fn for_each_pair(path: &Path, mut f: impl FnMut(&str, &str, usize) -> Result<()>) -> Result<()> {
    let file = path.display().to_string();
    for item in read_lines(path)? {
        let (line_no, line) = item?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if clean_entry(trimmed).is_none() {
            continue;
        }
        let (a, b) = split_pair(trimmed, &file, line_no)?;
        f(a, b, line_no).map_err(|e| match e {
            Error::Input(m) => Error::parse(&file, line_no, m),
            other => other,
        })?;
    }
    Ok(())
}

pub fn read_mapping(path: &Path, hierarchy: &TypeHierarchy) -> Result<TypeMapping> {
    let mut mapping = TypeMapping::new();
    for_each_pair(path, |raw, target, _| mapping.insert(raw, target, hierarchy))?;
    Ok(mapping)
}

/// Loads entity types (translated through `mapping`) and aliases.
///
/// Entities whose raw types are all unmapped are kept with an empty type set.
pub fn read_kb(
    types_path: &Path,
    aliases_path: &Path,
    mapping: &TypeMapping,
    hierarchy: &TypeHierarchy,
) -> Result<KnowledgeBase> {
    if let Some(bad) = mapping.images().find(|p| !hierarchy.contains(p)) {
        return Err(Error::Input(format!(
            "mapping target {bad} is not in the type hierarchy"
        )));
    }
    let mut kb = KnowledgeBase::new();
    let mut unmapped = 0usize;
    for_each_pair(types_path, |entity, raw, _| {
        let id = EntityId::new(entity);
        match mapping.get(raw) {
            Some(paths) => paths.iter().for_each(|p| kb.add_type(id.clone(), p.clone())),
            None => {
                unmapped += 1;
                kb.add_entity(id);
            }
        }
        Ok(())
    })?;
    if unmapped > 0 {
        log::debug!("{unmapped} KB type assertions had no mapping");
    }
    for_each_pair(aliases_path, |entity, alias, _| {
        kb.add_alias(EntityId::new(entity), alias);
        Ok(())
    })?;
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_one_document() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            r#"{"id":"d1","sentences":[["Gates","founded","Microsoft","."],["It","grew","."]],"anchors":[{"s":0,"b":2,"e":3,"t":"Microsoft"}]}"#,
        );
        let docs: Vec<_> = read_corpus(&p, OverlapPolicy::Abort)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].sentences.len(), 2);
        assert_eq!(docs[0].anchors[0].surface, toks("Microsoft"));
        assert_eq!(docs[0].anchors[0].kind, AnchorKind::Link);
    }

    #[test]
    fn out_of_bounds_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "\n{\"id\":\"d1\",\"sentences\":[[\"a\",\"b\"]],\"anchors\":[{\"s\":0,\"b\":1,\"e\":3,\"t\":\"x\"}]}\n",
        );
        let err = read_corpus(&p, OverlapPolicy::Skip)
            .unwrap()
            .next()
            .unwrap()
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "{msg}");
        assert!(msg.contains("span out of bounds"), "{msg}");
    }

    #[test]
    fn malformed_line_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", "{\"id\":\"d1\"}\n");
        let err = read_corpus(&p, OverlapPolicy::Skip)
            .unwrap()
            .next()
            .unwrap()
            .unwrap_err();
        assert!(err.to_string().contains(":1: malformed record"));
    }

    #[test]
    fn empty_file_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", "");
        assert_eq!(read_corpus(&p, OverlapPolicy::Abort).unwrap().count(), 0);
    }

    #[test]
    fn overlap_policy() {
        let dir = tempfile::tempdir().unwrap();
        let body = concat!(
            r#"{"id":"bad","sentences":[["a","b","c"]],"anchors":[{"s":0,"b":0,"e":2,"t":"x"},{"s":0,"b":1,"e":3,"t":"y"}]}"#,
            "\n",
            r#"{"id":"good","sentences":[["a"]]}"#,
            "\n"
        );
        let p = write(dir.path(), "c.jsonl", body);
        let mut reader = read_corpus(&p, OverlapPolicy::Skip).unwrap();
        let docs: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "good");
        assert_eq!(reader.skipped(), 1);
        let err = read_corpus(&p, OverlapPolicy::Abort)
            .unwrap()
            .next()
            .unwrap()
            .unwrap_err();
        assert!(err.to_string().contains("overlapping anchors"));
    }

    #[test]
    fn corpus_round_trip_with_kinds_and_pos() {
        let dir = tempfile::tempdir().unwrap();
        let mut doc = Document::new(
            "d",
            Some("Bill_Gates".into()),
            vec![toks("Gates met RBI people")],
            vec![
                (TokenSpan::new(0, 0, 1), "Bill_Gates".into()),
                (TokenSpan::new(0, 2, 3), "Run_batted_in".into()),
            ],
        )
        .unwrap()
        .with_pos(vec![toks("NNP VBD NNP NNS")])
        .unwrap();
        doc.anchors[1].kind = AnchorKind::NonEntity;
        let p = dir.path().join("c.jsonl.gz");
        write_corpus([&doc], &p).unwrap();
        let back: Vec<_> = read_corpus(&p, OverlapPolicy::Abort)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(back, vec![doc]);
    }

    #[test]
    fn hierarchy_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "h.txt", "/person\n/person/artist\n");
        assert_eq!(read_hierarchy(&p).unwrap().len(), 2);
        let p = write(dir.path(), "h2.txt", "# comment\n/person/artist\n");
        let h = read_hierarchy(&p).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec!["/person", "/person/artist"]);
        let p = write(dir.path(), "h3.txt", "/person\nperson/artist\n");
        assert!(read_hierarchy(&p).unwrap_err().to_string().contains(":2:"));
    }

    #[test]
    fn kb_loading() {
        let dir = tempfile::tempdir().unwrap();
        let h = TypeHierarchy::from_paths(["/person", "/organization/company"]).unwrap();
        let mapping = write(
            dir.path(),
            "m.tsv",
            "people.person\t/person\nbusiness.business_operation\t/organization/company\n",
        );
        let types = write(
            dir.path(),
            "t.tsv",
            "Bill_Gates\tpeople.person\nBill_Gates\tbook.author\nRun_batted_in\tsports.statistic\n",
        );
        let aliases = write(
            dir.path(),
            "a.tsv",
            "Bill_Gates\tGates\nBill_Gates\tWilliam Henry Gates\nBill_Gates\tgates\n",
        );
        let mapping = read_mapping(&mapping, &h).unwrap();
        let kb = read_kb(&types, &aliases, &mapping, &h).unwrap();
        let gates = EntityId::from("Bill_Gates");
        assert_eq!(kb.types(&gates).unwrap(), &BTreeSet::from(["/person".to_string()]));
        assert_eq!(kb.aliases(&gates), &[toks("Gates"), toks("William Henry Gates")]);
        let rbi = EntityId::from("Run_batted_in");
        assert!(kb.types(&rbi).unwrap().is_empty());
        assert!(kb.contains(&rbi));
    }

    #[test]
    fn mapping_target_must_exist() {
        let dir = tempfile::tempdir().unwrap();
        let h = TypeHierarchy::from_paths(["/person"]).unwrap();
        let m = write(dir.path(), "m.tsv", "people.person\t/person\nfilm.film\t/art/film\n");
        let err = read_mapping(&m, &h).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        let bad = write(dir.path(), "bad.tsv", "only-one-column\n");
        assert!(read_mapping(&bad, &h).is_err());
    }
}
