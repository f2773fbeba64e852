//! Link inference over unlinked text.
//!
//! Candidates are restricted to the document's own outgoing links. Two tries
//! are built per document: one over the candidate names of every entity and
//! non-entity target, and one over lowercase-dominant entities only. The
//! first pass starts matches at capitalized unlinked tokens; the second pass
//! matches anywhere in the text that is still unlinked.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::link_stats::{is_lowercase_dominant, LinkStats};
use crate::model::{fold, is_capitalized, Anchor, AnchorKind, Document, EntityId, KnowledgeBase, TokenSpan};
use crate::stage1::{target_category, LinkCategory, LinkContext, Stage1Config};

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<String, usize>,
    targets: BTreeSet<EntityId>,
}

/// Token-keyed trie over case-folded candidate names.
#[derive(Debug, Clone)]
pub struct CandidateTrie {
    nodes: Vec<TrieNode>,
}

impl Default for CandidateTrie {
    fn default() -> Self {
        CandidateTrie {
            nodes: vec![TrieNode::default()],
        }
    }
}

impl CandidateTrie {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: AsRef<str>>(&mut self, key: &[S], target: EntityId) {
        if key.is_empty() {
            return;
        }
        let mut node = 0;
        for token in key {
            let folded = fold(token.as_ref());
            node = match self.nodes[node].children.get(&folded) {
                Some(&child) => child,
                None => {
                    let child = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(folded, child);
                    child
                }
            };
        }
        self.nodes[node].targets.insert(target);
    }

    /// Targets stored under exactly `key` (compared case-insensitively).
    pub fn get<S: AsRef<str>>(&self, key: &[S]) -> Option<&BTreeSet<EntityId>> {
        let mut node = 0;
        for token in key {
            node = *self.nodes[node].children.get(&fold(token.as_ref()))?;
        }
        let targets = &self.nodes[node].targets;
        (!targets.is_empty()).then_some(targets)
    }

    /// Longest key starting at `start` that stays within unblocked tokens.
    /// Returns the exclusive end index and the key's targets.
    pub fn longest_match(
        &self,
        tokens: &[String],
        start: usize,
        blocked: &[bool],
    ) -> Option<(usize, &BTreeSet<EntityId>)> {
        let mut node = 0;
        let mut best = None;
        for (i, token) in tokens.iter().enumerate().skip(start) {
            if blocked[i] {
                break;
            }
            match self.nodes[node].children.get(&fold(token)) {
                Some(&child) => node = child,
                None => break,
            }
            if !self.nodes[node].targets.is_empty() {
                best = Some((i + 1, &self.nodes[node].targets));
            }
        }
        best
    }

    pub fn is_empty(&self) -> bool {
        self.nodes[0].children.is_empty()
    }

    /// All `(key, targets)` pairs, keys in case-folded form, sorted.
    pub fn entries(&self) -> Vec<(Vec<String>, BTreeSet<EntityId>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::<String>::new())];
        while let Some((node, key)) = stack.pop() {
            if !self.nodes[node].targets.is_empty() {
                out.push((key.clone(), self.nodes[node].targets.clone()));
            }
            for (token, &child) in &self.nodes[node].children {
                let mut next = key.clone();
                next.push(token.clone());
                stack.push((child, next));
            }
        }
        out.sort();
        out
    }
}

/// Link targets of the original document with their categories.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutgoingLinkSet {
    entries: BTreeMap<EntityId, LinkCategory>,
}

impl OutgoingLinkSet {
    /// Collects targets from the document's anchors as given (call this on
    /// the document before Stage I), plus `self_entity`.
    pub fn collect(doc: &Document, ctx: &LinkContext<'_>, cfg: &Stage1Config) -> Self {
        let mut entries = BTreeMap::new();
        let targets = doc
            .anchors
            .iter()
            .filter(|a| a.kind == AnchorKind::Link)
            .map(|a| &a.target)
            .chain(doc.self_entity.as_ref());
        for target in targets {
            entries
                .entry(target.clone())
                .or_insert_with(|| target_category(target, ctx, cfg));
        }
        OutgoingLinkSet { entries }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (EntityId, LinkCategory)>) -> Self {
        OutgoingLinkSet {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn category(&self, target: &EntityId) -> Option<LinkCategory> {
        self.entries.get(target).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, LinkCategory)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage2Config {
    /// Treat unknown links as non-entities when building the tries.
    pub unknown_as_nonentity: bool,
}

impl Stage2Config {
    fn effective(&self, category: LinkCategory) -> LinkCategory {
        match category {
            LinkCategory::Unknown if self.unknown_as_nonentity => LinkCategory::NonEntityLink,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CandidateTries {
    pub all: CandidateTrie,
    pub lowercase: CandidateTrie,
    /// Category of each inserted target after applying [`Stage2Config`].
    categories: BTreeMap<EntityId, LinkCategory>,
}

impl CandidateTries {
    fn category(&self, target: &EntityId) -> LinkCategory {
        self.categories.get(target).copied().unwrap_or(LinkCategory::Unknown)
    }
}

pub fn build_tries(out: &OutgoingLinkSet, kb: &KnowledgeBase, stats: &LinkStats, cfg: &Stage2Config) -> CandidateTries {
    let mut tries = CandidateTries::default();
    for (target, category) in out.iter() {
        let category = cfg.effective(category);
        if category == LinkCategory::Unknown {
            continue;
        }
        tries.categories.insert(target.clone(), category);
        let lowercase = category == LinkCategory::EntityLink && is_lowercase_dominant(target, stats);
        for name in kb.candidate_names(target) {
            tries.all.insert(&name, target.clone());
            if lowercase {
                tries.lowercase.insert(&name, target.clone());
            }
        }
    }
    tries
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InferOutcome {
    Linked {
        target: EntityId,
        kind: AnchorKind,
    },
    /// The key named two or more entity targets; nothing was added.
    Ambiguous {
        targets: Vec<EntityId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferEvent {
    pub doc_id: String,
    pub span: TokenSpan,
    pub pass: u8,
    #[serde(flatten)]
    pub outcome: InferOutcome,
}

enum Resolution {
    Link(EntityId, AnchorKind),
    Ambiguous(Vec<EntityId>),
}

fn resolve(targets: &BTreeSet<EntityId>, tries: &CandidateTries) -> Resolution {
    let entities: Vec<&EntityId> = targets
        .iter()
        .filter(|t| tries.category(t) == LinkCategory::EntityLink)
        .collect();
    match entities.as_slice() {
        [single] => Resolution::Link((*single).clone(), AnchorKind::Inferred),
        [] => {
            // only non-entity targets remain; BTreeSet order makes the pick stable
            let target = targets.iter().next().expect("trie keys carry targets");
            Resolution::Link(target.clone(), AnchorKind::NonEntity)
        }
        many => Resolution::Ambiguous(many.iter().map(|t| (*t).clone()).collect()),
    }
}

#[allow(clippy::too_many_arguments)]
fn scan_pass(
    doc: &Document,
    sentence: usize,
    trie: &CandidateTrie,
    tries: &CandidateTries,
    pass: u8,
    mask: &mut [bool],
    added: &mut Vec<Anchor>,
    events: &mut Vec<InferEvent>,
) {
    let tokens = &doc.sentences[sentence];
    let mut i = 0;
    while i < tokens.len() {
        if mask[i] || (pass == 1 && !is_capitalized(&tokens[i])) {
            i += 1;
            continue;
        }
        let Some((end, targets)) = trie.longest_match(tokens, i, mask) else {
            i += 1;
            continue;
        };
        let span = TokenSpan::new(sentence, i, end);
        match resolve(targets, tries) {
            Resolution::Link(target, kind) => {
                mask[i..end].iter_mut().for_each(|m| *m = true);
                events.push(InferEvent {
                    doc_id: doc.id.clone(),
                    span,
                    pass,
                    outcome: InferOutcome::Linked {
                        target: target.clone(),
                        kind,
                    },
                });
                added.push(Anchor {
                    span,
                    target,
                    surface: tokens[i..end].to_vec(),
                    kind,
                });
                i = end;
            }
            Resolution::Ambiguous(targets) => {
                events.push(InferEvent {
                    doc_id: doc.id.clone(),
                    span,
                    pass,
                    outcome: InferOutcome::Ambiguous { targets },
                });
                i += 1;
            }
        }
    }
}

/// Adds links over unlinked text. Existing anchors are never altered.
pub fn infer_links(doc: &Document, tries: &CandidateTries) -> (Document, Vec<InferEvent>) {
    let mut added = Vec::new();
    let mut events = Vec::new();
    for sentence in 0..doc.sentences.len() {
        let mut mask = doc.linked_mask(sentence);
        if !tries.all.is_empty() {
            scan_pass(doc, sentence, &tries.all, tries, 1, &mut mask, &mut added, &mut events);
        }
        if !tries.lowercase.is_empty() {
            scan_pass(
                doc,
                sentence,
                &tries.lowercase,
                tries,
                2,
                &mut mask,
                &mut added,
                &mut events,
            );
        }
    }
    let mut anchors = doc.anchors.clone();
    anchors.extend(added);
    anchors.sort_by_key(|a| a.span);
    (Document { anchors, ..doc.clone() }, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TypeHierarchy;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn gates_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        let gates = EntityId::from("Bill_Gates");
        kb.add_type(gates.clone(), "/person");
        for alias in ["Gates", "William Henry Gates", "Bill Gates"] {
            kb.add_alias(gates.clone(), alias);
        }
        kb.add_type("lactic_acid".into(), "/chemistry");
        kb.add_alias("lactic_acid".into(), "lactic acid");
        kb
    }

    fn lowercase_stats() -> LinkStats {
        let mut stats = LinkStats::new();
        for i in 0..10 {
            stats.observe(&"lactic_acid".into(), i < 8);
        }
        stats
    }

    #[test]
    fn trie_basics() {
        let mut trie = CandidateTrie::new();
        trie.insert(&toks("Bill Gates"), "Bill_Gates".into());
        trie.insert(&toks("Bill"), "Bill_(name)".into());
        assert!(trie.get(&toks("bill gates")).is_some());
        assert!(trie.get(&toks("bill")).is_some());
        assert!(trie.get(&toks("gates")).is_none());
        let tokens = toks("Bill Gates spoke");
        let (end, targets) = trie.longest_match(&tokens, 0, &[false; 3]).unwrap();
        assert_eq!(end, 2);
        assert!(targets.contains(&EntityId::from("Bill_Gates")));
        let (end, _) = trie.longest_match(&tokens, 0, &[false, true, false]).unwrap();
        assert_eq!(end, 1);
        assert!(trie.longest_match(&tokens, 2, &[false; 3]).is_none());
    }

    #[test]
    fn tries_for_gates() {
        let out = OutgoingLinkSet::from_entries([("Bill_Gates".into(), LinkCategory::EntityLink)]);
        let tries = build_tries(&out, &gates_kb(), &LinkStats::new(), &Stage2Config::default());
        let keys: Vec<Vec<String>> = tries.all.entries().into_iter().map(|(k, _)| k).collect();
        assert_eq!(
            keys,
            vec![toks("bill gates"), toks("gates"), toks("william henry gates")]
        );
        assert!(tries.lowercase.is_empty());
    }

    #[test]
    fn lowercase_entity_in_both_tries() {
        let out = OutgoingLinkSet::from_entries([("lactic_acid".into(), LinkCategory::EntityLink)]);
        let tries = build_tries(&out, &gates_kb(), &lowercase_stats(), &Stage2Config::default());
        assert!(tries.all.get(&toks("lactic acid")).is_some());
        assert!(tries.lowercase.get(&toks("lactic acid")).is_some());
    }

    #[test]
    fn empty_outgoing_set() {
        let tries = build_tries(
            &OutgoingLinkSet::default(),
            &gates_kb(),
            &LinkStats::new(),
            &Stage2Config::default(),
        );
        assert!(tries.all.is_empty() && tries.lowercase.is_empty());
    }

    #[test]
    fn unknowns_are_inert_unless_flagged() {
        let mut kb = gates_kb();
        kb.add_alias("Mystery".into(), "Mystery");
        let out = OutgoingLinkSet::from_entries([("Mystery".into(), LinkCategory::Unknown)]);
        let tries = build_tries(&out, &kb, &LinkStats::new(), &Stage2Config::default());
        assert!(tries.all.is_empty());
        let tries = build_tries(
            &out,
            &kb,
            &LinkStats::new(),
            &Stage2Config {
                unknown_as_nonentity: true,
            },
        );
        assert!(tries.all.get(&toks("mystery")).is_some());
    }

    #[test]
    fn lowercase_phrase_linked_in_second_pass() {
        let kb = gates_kb();
        let doc = Document::new(
            "d",
            None,
            vec![toks("It produces lactic acid ."), toks("Gates studied lactic acid .")],
            vec![(TokenSpan::new(1, 2, 4), "lactic_acid".into())],
        )
        .unwrap();
        let out = OutgoingLinkSet::from_entries([("lactic_acid".into(), LinkCategory::EntityLink)]);
        let tries = build_tries(&out, &kb, &lowercase_stats(), &Stage2Config::default());
        let (result, events) = infer_links(&doc, &tries);
        assert_eq!(result.anchors.len(), 2);
        assert_eq!(result.anchors[0].span, TokenSpan::new(0, 2, 4));
        assert_eq!(result.anchors[0].kind, AnchorKind::Inferred);
        assert_eq!(events[0].pass, 2);
    }

    #[test]
    fn jazz_without_candidate_stays_unlinked() {
        let kb = gates_kb();
        let doc = Document::new("d", None, vec![toks("Gates loved Jazz .")], vec![]).unwrap();
        let out = OutgoingLinkSet::from_entries([("Bill_Gates".into(), LinkCategory::EntityLink)]);
        let tries = build_tries(&out, &kb, &LinkStats::new(), &Stage2Config::default());
        let (result, _) = infer_links(&doc, &tries);
        assert_eq!(result.anchors.len(), 1);
        assert_eq!(result.anchors[0].surface, toks("Gates"));
    }

    #[test]
    fn lowercase_tokens_ignored_in_first_pass() {
        let kb = gates_kb();
        let doc = Document::new("d", None, vec![toks("the gates opened")], vec![]).unwrap();
        let out = OutgoingLinkSet::from_entries([("Bill_Gates".into(), LinkCategory::EntityLink)]);
        let tries = build_tries(&out, &kb, &LinkStats::new(), &Stage2Config::default());
        assert!(infer_links(&doc, &tries).0.anchors.is_empty());
    }

    #[test]
    fn ambiguous_keys_are_skipped() {
        let mut kb = gates_kb();
        kb.add_type("Melinda_Gates".into(), "/person");
        kb.add_alias("Melinda_Gates".into(), "Gates");
        let doc = Document::new("d", None, vec![toks("Gates spoke .")], vec![]).unwrap();
        let out = OutgoingLinkSet::from_entries([
            ("Bill_Gates".into(), LinkCategory::EntityLink),
            ("Melinda_Gates".into(), LinkCategory::EntityLink),
        ]);
        let tries = build_tries(&out, &kb, &LinkStats::new(), &Stage2Config::default());
        let (result, events) = infer_links(&doc, &tries);
        assert!(result.anchors.is_empty());
        assert!(matches!(events[0].outcome, InferOutcome::Ambiguous { ref targets } if targets.len() == 2));
    }

    #[test]
    fn non_entity_matches_consume_span() {
        let mut kb = gates_kb();
        kb.add_entity("Run_batted_in".into());
        kb.add_alias("Run_batted_in".into(), "RBI");
        let doc = Document::new("d", None, vec![toks("He had one RBI .")], vec![]).unwrap();
        let out = OutgoingLinkSet::from_entries([("Run_batted_in".into(), LinkCategory::NonEntityLink)]);
        let tries = build_tries(&out, &kb, &LinkStats::new(), &Stage2Config::default());
        let (result, _) = infer_links(&doc, &tries);
        assert_eq!(result.anchors.len(), 1);
        assert_eq!(result.anchors[0].kind, AnchorKind::NonEntity);
        result.validate().unwrap();
    }

    #[test]
    fn outgoing_set_includes_self_entity() {
        let kb = gates_kb();
        let h = TypeHierarchy::from_paths(["/person"]).unwrap();
        let stats = LinkStats::new();
        let ctx = LinkContext {
            kb: &kb,
            hierarchy: &h,
            stats: &stats,
        };
        let doc = Document::new(
            "d",
            Some("Bill_Gates".into()),
            vec![toks("He founded Microsoft")],
            vec![(TokenSpan::new(0, 2, 3), "Microsoft".into())],
        )
        .unwrap();
        let out = OutgoingLinkSet::collect(&doc, &ctx, &Stage1Config::default());
        assert_eq!(out.category(&"Bill_Gates".into()), Some(LinkCategory::EntityLink));
        assert_eq!(out.category(&"Microsoft".into()), Some(LinkCategory::Unknown));
        assert_eq!(out.len(), 2);
    }
}
