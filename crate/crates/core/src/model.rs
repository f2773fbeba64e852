//! Shared data model: documents with hyperlink anchors, the type hierarchy,
//! the knowledge base, and the annotated mentions every stage emits.
//!
//! Tokenization happens upstream. Sentences are token lists and anchors are
//! half-open token ranges inside a single sentence.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a knowledge-base entity (the hyperlink target).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Display name implied by a title-style identifier: underscores become
    /// spaces and a trailing parenthesised disambiguator is dropped, so
    /// `Mercury_(planet)` yields `["Mercury"]`.
    pub fn canonical_name(&self) -> Vec<String> {
        let spaced = self.0.replace('_', " ");
        let mut name = spaced.trim();
        if name.ends_with(')') {
            if let Some(open) = name.rfind(" (") {
                name = name[..open].trim_end();
            }
        }
        name.split_whitespace().map(str::to_string).collect()
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

/// Case folding used for every case-insensitive comparison.
///
/// Locale-independent Unicode lowercasing, so results do not depend on the host.
pub fn fold(token: &str) -> String {
    token.to_lowercase()
}

pub fn has_uppercase(token: &str) -> bool {
    token.chars().any(char::is_uppercase)
}

/// True when the token's first character is uppercase.
pub fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// True iff no token contains an uppercase character.
///
/// An empty phrase is not a lowercase phrase; anchors are never empty.
pub fn is_lowercase_phrase<S: AsRef<str>>(tokens: &[S]) -> bool {
    !tokens.is_empty() && !tokens.iter().any(|t| has_uppercase(t.as_ref()))
}

/// Token-wise case-insensitive equality of two sequences.
pub fn ci_equal<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.as_ref() == y.as_ref() || fold(x.as_ref()) == fold(y.as_ref()))
}

pub fn fold_all<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens.iter().map(|t| fold(t.as_ref())).collect()
}

/// Half-open token range `[start, end)` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(sentence: usize, start: usize, end: usize) -> Self {
        TokenSpan { sentence, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.sentence == other.sentence && self.start < other.end && other.start < self.end
    }

    pub fn contains_token(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }
}

/// How an anchor came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    /// A hyperlink present in the input corpus.
    Link,
    /// An entity link added by candidate-name matching.
    Inferred,
    /// A span matched to a known non-entity. It counts as explained text but
    /// never becomes a mention.
    NonEntity,
}

impl AnchorKind {
    pub fn is_entity(self) -> bool {
        !matches!(self, AnchorKind::NonEntity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub span: TokenSpan,
    pub target: EntityId,
    /// The covered tokens, verbatim.
    pub surface: Vec<String>,
    pub kind: AnchorKind,
}

/// A tokenized document with its hyperlinks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    /// The entity the document is about, when known.
    pub self_entity: Option<EntityId>,
    pub sentences: Vec<Vec<String>>,
    /// Sorted by span; pairwise non-overlapping.
    pub anchors: Vec<Anchor>,
    /// Optional precomputed part-of-speech tags, aligned with `sentences`.
    pub pos: Option<Vec<Vec<String>>>,
}

impl Document {
    /// Builds a validated document from `(span, target)` pairs. Surfaces are
    /// taken from the sentence tokens.
    pub fn new(
        id: impl Into<String>,
        self_entity: Option<EntityId>,
        sentences: Vec<Vec<String>>,
        links: Vec<(TokenSpan, EntityId)>,
    ) -> Result<Self> {
        let mut doc = Document {
            id: id.into(),
            self_entity,
            sentences,
            anchors: Vec::with_capacity(links.len()),
            pos: None,
        };
        for (span, target) in links {
            doc.check_span(&span)?;
            let surface = doc.tokens(&span).to_vec();
            doc.anchors.push(Anchor {
                span,
                target,
                surface,
                kind: AnchorKind::Link,
            });
        }
        doc.anchors.sort_by_key(|a| a.span);
        doc.check_overlaps()?;
        Ok(doc)
    }

    pub fn with_pos(mut self, pos: Vec<Vec<String>>) -> Result<Self> {
        if pos.len() != self.sentences.len() || pos.iter().zip(&self.sentences).any(|(p, s)| p.len() != s.len()) {
            return Err(Error::Input(format!(
                "document {}: pos tags not aligned with tokens",
                self.id
            )));
        }
        self.pos = Some(pos);
        Ok(self)
    }

    pub fn tokens(&self, span: &TokenSpan) -> &[String] {
        &self.sentences[span.sentence][span.start..span.end]
    }

    pub fn check_span(&self, span: &TokenSpan) -> Result<()> {
        let Some(sentence) = self.sentences.get(span.sentence) else {
            return Err(Error::Input(format!(
                "document {}: anchor sentence {} does not exist",
                self.id, span.sentence
            )));
        };
        if span.start >= span.end || span.end > sentence.len() {
            return Err(Error::Input(format!(
                "document {}: span out of bounds ({}:{}..{} in sentence of {} tokens)",
                self.id,
                span.sentence,
                span.start,
                span.end,
                sentence.len()
            )));
        }
        Ok(())
    }

    fn check_overlaps(&self) -> Result<()> {
        for pair in self.anchors.windows(2) {
            if pair[0].span.overlaps(&pair[1].span) {
                return Err(Error::Input(format!(
                    "document {}: overlapping anchors at sentence {} ({}..{} and {}..{})",
                    self.id,
                    pair[0].span.sentence,
                    pair[0].span.start,
                    pair[0].span.end,
                    pair[1].span.start,
                    pair[1].span.end
                )));
            }
        }
        Ok(())
    }

    /// Checks every structural invariant: spans in bounds, surfaces verbatim,
    /// anchors sorted and non-overlapping.
    pub fn validate(&self) -> Result<()> {
        for anchor in &self.anchors {
            self.check_span(&anchor.span)?;
            if anchor.surface.as_slice() != self.tokens(&anchor.span) {
                return Err(Error::Invariant(format!(
                    "document {}: anchor surface differs from covered tokens",
                    self.id
                )));
            }
        }
        if self.anchors.windows(2).any(|w| w[0].span > w[1].span) {
            return Err(Error::Invariant(format!("document {}: anchors not sorted", self.id)));
        }
        self.check_overlaps()
    }

    pub fn sentence_anchors(&self, sentence: usize) -> impl Iterator<Item = &Anchor> {
        self.anchors.iter().filter(move |a| a.span.sentence == sentence)
    }

    /// Per-token flag: covered by some anchor (of any kind).
    pub fn linked_mask(&self, sentence: usize) -> Vec<bool> {
        let mut mask = vec![false; self.sentences[sentence].len()];
        for anchor in self.sentence_anchors(sentence) {
            for flag in &mut mask[anchor.span.start..anchor.span.end] {
                *flag = true;
            }
        }
        mask
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Rooted forest of slash-delimited type paths, closed under prefixes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeHierarchy {
    paths: BTreeSet<String>,
}

impl TypeHierarchy {
    /// Builds the prefix closure of `paths`, returning the hierarchy and the
    /// prefixes that had to be added.
    pub fn prefix_closed<I, S>(paths: I) -> Result<(Self, Vec<String>)>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut given = BTreeSet::new();
        for path in paths {
            let path = path.as_ref().trim();
            validate_path(path)?;
            given.insert(path.trim_end_matches('/').to_string());
        }
        let mut all = given.clone();
        for path in &given {
            for prefix in proper_prefixes(path) {
                all.insert(prefix.to_string());
            }
        }
        let added = all.difference(&given).cloned().collect();
        Ok((TypeHierarchy { paths: all }, added))
    }

    pub fn from_paths<I, S>(paths: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::prefix_closed(paths).map(|(h, _)| h)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.paths.contains(path)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.paths.iter().map(String::as_str)
    }

    pub fn top_level(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|p| p[1..].find('/').is_none())
    }
}

fn validate_path(path: &str) -> Result<()> {
    if !path.starts_with('/') {
        return Err(Error::Input(format!("type path {path:?} does not start with '/'")));
    }
    if path.len() < 2 || path.trim_end_matches('/').split('/').skip(1).any(str::is_empty) {
        return Err(Error::Input(format!("type path {path:?} has an empty segment")));
    }
    Ok(())
}

/// `/a/b/c` yields `/a/b` then `/a`.
fn proper_prefixes(path: &str) -> impl Iterator<Item = &str> {
    let mut end = path.len();
    std::iter::from_fn(move || {
        let cut = path[..end].rfind('/')?;
        if cut == 0 {
            return None;
        }
        end = cut;
        Some(&path[..cut])
    })
}

/// The path itself followed by its ancestors, deepest first.
pub fn path_and_ancestors(path: &str) -> impl Iterator<Item = &str> {
    std::iter::once(path).chain(proper_prefixes(path))
}

/// Entity types (in hierarchy vocabulary) and candidate names.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    types: HashMap<EntityId, BTreeSet<String>>,
    aliases: HashMap<EntityId, Vec<Vec<String>>>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, entity: EntityId, path: impl Into<String>) {
        self.types.entry(entity).or_default().insert(path.into());
    }

    /// Registers an entity with no types (so it is known but out of scope).
    pub fn add_entity(&mut self, entity: EntityId) {
        self.types.entry(entity).or_default();
    }

    /// Adds an alias split on whitespace. Empty aliases and case-insensitive
    /// duplicates are ignored; returns whether the alias was stored.
    pub fn add_alias(&mut self, entity: EntityId, alias: &str) -> bool {
        let tokens: Vec<String> = alias.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return false;
        }
        let list = self.aliases.entry(entity).or_default();
        if list.iter().any(|existing| ci_equal(existing, &tokens)) {
            return false;
        }
        list.push(tokens);
        true
    }

    pub fn types(&self, entity: &EntityId) -> Option<&BTreeSet<String>> {
        self.types.get(entity)
    }

    pub fn aliases(&self, entity: &EntityId) -> &[Vec<String>] {
        self.aliases.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, entity: &EntityId) -> bool {
        self.types.contains_key(entity) || self.aliases.contains_key(entity)
    }

    /// Aliases plus the identifier's canonical display name, deduplicated
    /// case-insensitively.
    pub fn candidate_names(&self, entity: &EntityId) -> Vec<Vec<String>> {
        let mut names = self.aliases(entity).to_vec();
        let canonical = entity.canonical_name();
        if !canonical.is_empty() && !names.iter().any(|n| ci_equal(n, &canonical)) {
            names.push(canonical);
        }
        names
    }

    pub fn entity_count(&self) -> usize {
        let mut ids: BTreeSet<&EntityId> = self.types.keys().collect();
        ids.extend(self.aliases.keys());
        ids.len()
    }
}

/// `kb.types(entity) ∩ hierarchy`; empty for unknown entities.
pub fn labels_in_scope(entity: &EntityId, kb: &KnowledgeBase, hierarchy: &TypeHierarchy) -> BTreeSet<String> {
    kb.types(entity)
        .map(|types| types.iter().filter(|t| hierarchy.contains(t)).cloned().collect())
        .unwrap_or_default()
}

/// An entity mention in the output dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnnotatedMention {
    pub doc_id: String,
    pub span: TokenSpan,
    pub entity: EntityId,
    /// Never empty.
    pub labels: BTreeSet<String>,
}

/// One output sentence with its mentions, sorted by span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub doc_id: String,
    pub sentence: usize,
    pub tokens: Vec<String>,
    pub mentions: Vec<AnnotatedMention>,
}

/// Mentions for the entity anchors of one sentence whose targets have
/// in-scope labels.
pub fn sentence_mentions(
    doc: &Document,
    sentence: usize,
    kb: &KnowledgeBase,
    hierarchy: &TypeHierarchy,
) -> Vec<AnnotatedMention> {
    doc.sentence_anchors(sentence)
        .filter(|a| a.kind.is_entity())
        .filter_map(|a| {
            let labels = labels_in_scope(&a.target, kb, hierarchy);
            (!labels.is_empty()).then(|| AnnotatedMention {
                doc_id: doc.id.clone(),
                span: a.span,
                entity: a.target.clone(),
                labels,
            })
        })
        .collect()
}
