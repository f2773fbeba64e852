//! Corpus-wide anchor counts per link target.
//!
//! Counts are taken once over the original input anchors and drive both the
//! non-entity rule and the lowercase-dominance test.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::AtomicWriter;
use crate::model::{is_lowercase_phrase, Document, EntityId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCounts {
    pub total: u64,
    /// Anchors whose surface is a lowercase phrase; never exceeds `total`.
    pub lowercase: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    counts: BTreeMap<EntityId, TargetCounts>,
}

impl LinkStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe_document(&mut self, doc: &Document) {
        for anchor in doc.anchors.iter().filter(|a| a.kind == crate::model::AnchorKind::Link) {
            self.observe(&anchor.target, is_lowercase_phrase(&anchor.surface));
        }
    }

    pub fn observe(&mut self, target: &EntityId, lowercase: bool) {
        let entry = self.counts.entry(target.clone()).or_default();
        entry.total += 1;
        entry.lowercase += u64::from(lowercase);
    }

    /// Counts for `target`, `(0, 0)` when never anchored.
    pub fn get(&self, target: &EntityId) -> TargetCounts {
        self.counts.get(target).copied().unwrap_or_default()
    }

    /// Adds another partition's counts. Associative and commutative.
    pub fn merge(&mut self, other: &LinkStats) {
        for (target, counts) in &other.counts {
            let entry = self.counts.entry(target.clone()).or_default();
            entry.total += counts.total;
            entry.lowercase += counts.lowercase;
        }
    }

    pub fn targets(&self) -> usize {
        self.counts.len()
    }

    pub fn total_anchors(&self) -> u64 {
        self.counts.values().map(|c| c.total).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, &TargetCounts)> {
        self.counts.iter()
    }
}

pub fn compute_link_stats<'a>(corpus: impl IntoIterator<Item = &'a Document>) -> LinkStats {
    let mut stats = LinkStats::new();
    for doc in corpus {
        stats.observe_document(doc);
    }
    stats
}

/// More than half of the target's anchors are lowercase phrases.
pub fn is_lowercase_dominant(target: &EntityId, stats: &LinkStats) -> bool {
    counts_lowercase_dominant(stats.get(target))
}

pub fn counts_lowercase_dominant(counts: TargetCounts) -> bool {
    counts.total > 0 && 2 * counts.lowercase > counts.total
}

/// On-disk cache entry: stats (and any other first-pass results) keyed by the
/// hash of the corpus they were computed from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsCache {
    pub corpus_hash: String,
    pub stats: LinkStats,
    pub starters: Vec<String>,
    pub starters_k: usize,
}

impl StatsCache {
    /// Loads the cache if it exists; `Ok(None)` when absent.
    pub fn load(path: &Path) -> Result<Option<StatsCache>> {
        match std::fs::read(path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        let mut w = AtomicWriter::create(path)?;
        w.write_all(&serde_json::to_vec(self)?)?;
        w.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TokenSpan;

    fn doc_with(surfaces: &[&str], target: &str) -> Document {
        let sentences = surfaces.iter().map(|s| vec![s.to_string()]).collect();
        let links = (0..surfaces.len())
            .map(|i| (TokenSpan::new(i, 0, 1), EntityId::from(target)))
            .collect();
        Document::new("d", None, sentences, links).unwrap()
    }

    #[test]
    fn counts_anchor_case() {
        let doc = doc_with(&["RBI", "rbi", "rbi"], "Run_batted_in");
        let stats = compute_link_stats([&doc]);
        let c = stats.get(&"Run_batted_in".into());
        assert_eq!((c.total, c.lowercase), (3, 2));
        assert_eq!(stats.total_anchors(), 3);
    }

    #[test]
    fn empty_and_absent() {
        let stats = compute_link_stats(std::iter::empty());
        assert!(stats.is_empty());
        assert_eq!(stats.get(&"x".into()), TargetCounts::default());
        assert!(!is_lowercase_dominant(&"x".into(), &stats));
    }

    #[test]
    fn dominance_is_strict() {
        assert!(counts_lowercase_dominant(TargetCounts {
            total: 100,
            lowercase: 51
        }));
        assert!(!counts_lowercase_dominant(TargetCounts {
            total: 100,
            lowercase: 50
        }));
        assert!(!counts_lowercase_dominant(TargetCounts { total: 0, lowercase: 0 }));
        assert!(counts_lowercase_dominant(TargetCounts { total: 1, lowercase: 1 }));
        assert!(!counts_lowercase_dominant(TargetCounts { total: 2, lowercase: 1 }));
    }

    #[test]
    fn lactic_acid_is_lowercase_dominant() {
        let doc = doc_with(&["lactic acid", "lactic acid", "Lactic acid"], "lactic_acid");
        let stats = compute_link_stats([&doc]);
        assert!(is_lowercase_dominant(&"lactic_acid".into(), &stats));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.json");
        assert!(StatsCache::load(&path).unwrap().is_none());
        let doc = doc_with(&["a", "B"], "t");
        let cache = StatsCache {
            corpus_hash: "abc".into(),
            stats: compute_link_stats([&doc]),
            starters: vec!["the".into()],
            starters_k: 150,
        };
        cache.store(&path).unwrap();
        let back = StatsCache::load(&path).unwrap().unwrap();
        assert_eq!(back.stats, cache.stats);
        assert_eq!(back.corpus_hash, "abc");
    }
}
