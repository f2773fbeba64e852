//! Dataset-level analyses: corpus statistics, overlap between two annotated
//! versions of a corpus, and coverage of a type hierarchy by coarse buckets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emit::SentenceRecord;
use crate::error::{Error, Result};
use crate::io::read_entries;
use crate::model::{path_and_ancestors, TypeHierarchy};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats<F> {
    pub sentences: usize,
    pub mentions: usize,
    pub unique_entities: usize,
    /// Distinct mention strings (tokens joined by a space), case-sensitive.
    pub unique_mention_surfaces: usize,
    pub tokens: usize,
    pub unique_tokens: usize,
    pub mean_sentence_length: F,
    pub mean_labels_per_mention: F,
    pub num_types_used: usize,
}

/// Order-independent accumulator behind [`CorpusStats`].
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    sentences: usize,
    mentions: usize,
    tokens: usize,
    labels: usize,
    entities: HashSet<String>,
    surfaces: HashSet<String>,
    vocabulary: HashSet<String>,
    types: HashSet<String>,
}

impl StatsAccumulator {
    pub fn observe(&mut self, record: &SentenceRecord) {
        self.sentences += 1;
        self.tokens += record.tokens.len();
        self.vocabulary.extend(record.tokens.iter().cloned());
        for m in &record.mentions {
            self.mentions += 1;
            self.labels += m.labels.len();
            self.entities.insert(m.entity.clone());
            self.surfaces.insert(record.tokens[m.b..m.e].join(" "));
            self.types.extend(m.labels.iter().cloned());
        }
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        self.sentences += other.sentences;
        self.mentions += other.mentions;
        self.tokens += other.tokens;
        self.labels += other.labels;
        self.entities.extend(other.entities);
        self.surfaces.extend(other.surfaces);
        self.vocabulary.extend(other.vocabulary);
        self.types.extend(other.types);
    }

    pub fn finish<F: Scalar>(&self) -> CorpusStats<F> {
        CorpusStats {
            sentences: self.sentences,
            mentions: self.mentions,
            unique_entities: self.entities.len(),
            unique_mention_surfaces: self.surfaces.len(),
            tokens: self.tokens,
            unique_tokens: self.vocabulary.len(),
            mean_sentence_length: F::ratio(self.tokens, self.sentences),
            mean_labels_per_mention: F::ratio(self.labels, self.mentions),
            num_types_used: self.types.len(),
        }
    }
}

pub fn corpus_stats<F: Scalar>(records: &[SentenceRecord]) -> CorpusStats<F> {
    let mut acc = StatsAccumulator::default();
    for r in records {
        acc.observe(r);
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// (doc, sentence, start, end, entity), counted with multiplicity.
    Mention,
    /// Entity id, counted once.
    Entity,
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mention" => Ok(Identity::Mention),
            "entity" => Ok(Identity::Entity),
            other => Err(Error::Config(format!(
                "unknown identity {other:?} (expected mention or entity)"
            ))),
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Identity::Mention => "mention",
            Identity::Entity => "entity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub identity: Identity,
    pub h: usize,
    pub n: usize,
    pub h_minus_n: usize,
    pub intersection: usize,
    pub n_minus_h: usize,
    /// Sentence keys present in only one of the inputs and left out.
    pub dropped_sentences: usize,
}

impl OverlapReport {
    pub fn check_partition(&self) -> Result<()> {
        if self.h != self.h_minus_n + self.intersection || self.n != self.n_minus_h + self.intersection {
            return Err(Error::Invariant(format!("overlap partition does not add up: {self:?}")));
        }
        Ok(())
    }
}

type MentionKey<'a> = (&'a str, usize, usize, usize, &'a str);

fn mention_multiset<'a>(
    records: &'a [SentenceRecord],
    keep: &HashSet<(&str, usize)>,
) -> HashMap<MentionKey<'a>, usize> {
    let mut out = HashMap::new();
    for r in records.iter().filter(|r| keep.contains(&(r.doc.as_str(), r.sent))) {
        for m in &r.mentions {
            *out.entry((r.doc.as_str(), r.sent, m.b, m.e, m.entity.as_str()))
                .or_insert(0) += 1;
        }
    }
    out
}

/// Overlap of two annotations of the same corpus. Only sentence keys found
/// in both inputs are compared; the rest are dropped with a warning.
pub fn compare_annotations(h: &[SentenceRecord], n: &[SentenceRecord], identity: Identity) -> Result<OverlapReport> {
    let h_keys: HashSet<(&str, usize)> = h.iter().map(|r| (r.doc.as_str(), r.sent)).collect();
    let n_keys: HashSet<(&str, usize)> = n.iter().map(|r| (r.doc.as_str(), r.sent)).collect();
    let shared: HashSet<(&str, usize)> = h_keys.intersection(&n_keys).copied().collect();
    let dropped = h_keys.len() + n_keys.len() - 2 * shared.len();
    if dropped > 0 {
        log::warn!(
            "{dropped} sentence keys appear in only one input; comparing the {} shared ones",
            shared.len()
        );
    }

    let (hs, ns, hn, nh, both) = match identity {
        Identity::Mention => {
            let hm = mention_multiset(h, &shared);
            let nm = mention_multiset(n, &shared);
            let mut both = 0;
            for (k, c) in &hm {
                both += (*c).min(nm.get(k).copied().unwrap_or(0));
            }
            let hs: usize = hm.values().sum();
            let ns: usize = nm.values().sum();
            (hs, ns, hs - both, ns - both, both)
        }
        Identity::Entity => {
            let entities = |records: &[SentenceRecord]| -> BTreeSet<String> {
                records
                    .iter()
                    .filter(|r| shared.contains(&(r.doc.as_str(), r.sent)))
                    .flat_map(|r| r.mentions.iter().map(|m| m.entity.clone()))
                    .collect()
            };
            let he = entities(h);
            let ne = entities(n);
            (
                he.len(),
                ne.len(),
                he.difference(&ne).count(),
                ne.difference(&he).count(),
                he.intersection(&ne).count(),
            )
        }
    };
    let report = OverlapReport {
        identity,
        h: hs,
        n: ns,
        h_minus_n: hn,
        intersection: both,
        n_minus_h: nh,
        dropped_sentences: dropped,
    };
    report.check_partition()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "MISC")]
    Misc,
    #[serde(rename = "NONE")]
    None,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [Bucket::Per, Bucket::Loc, Bucket::Org, Bucket::Misc, Bucket::None];

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Per => "PER",
            Bucket::Loc => "LOC",
            Bucket::Org => "ORG",
            Bucket::Misc => "MISC",
            Bucket::None => "NONE",
        }
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bucket::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown bucket {s:?} (expected PER, LOC, ORG, MISC or NONE)")))
    }
}

/// Subtree root → bucket. A type takes the bucket of its nearest mapped
/// ancestor (itself included).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RootsMap {
    roots: BTreeMap<String, Bucket>,
}

impl RootsMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, bucket: Bucket) {
        self.roots.insert(path.into(), bucket);
    }

    pub fn bucket_of(&self, path: &str) -> Option<Bucket> {
        path_and_ancestors(path).find_map(|p| self.roots.get(p).copied())
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut map = RootsMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (path, bucket) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(file, i + 1, "expected path<TAB>bucket"))?;
            let bucket = bucket
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(file, i + 1, e.to_string()))?;
            map.insert(path.trim(), bucket);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = read_entries(path)?;
        Self::parse(&entries.join("\n"), &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport<F> {
    pub total_types: usize,
    pub counts: BTreeMap<Bucket, usize>,
    pub fractions: BTreeMap<Bucket, F>,
    /// Share of types outside all four coarse classes.
    pub not_covered: F,
    /// Share of the types outside PER/LOC/ORG that fall under MISC.
    pub misc_share_of_rest: F,
    pub unmapped_top_level: Vec<String>,
}

pub fn hierarchy_coverage<F: Scalar>(hierarchy: &TypeHierarchy, roots: &RootsMap) -> CoverageReport<F> {
    let mut counts: BTreeMap<Bucket, usize> = Bucket::ALL.iter().map(|b| (*b, 0)).collect();
    let mut unmapped = Vec::new();
    for path in hierarchy.iter() {
        let bucket = roots.bucket_of(path).unwrap_or_else(|| {
            if hierarchy.top_level().any(|t| t == path) {
                unmapped.push(path.to_string());
            }
            Bucket::None
        });
        *counts.get_mut(&bucket).unwrap() += 1;
    }
    if !unmapped.is_empty() {
        log::warn!(
            "{} top-level types have no bucket and count as NONE: {}",
            unmapped.len(),
            unmapped.join(", ")
        );
    }
    let total = hierarchy.len();
    let fractions = counts.iter().map(|(b, c)| (*b, F::ratio(*c, total))).collect();
    let rest = counts[&Bucket::Misc] + counts[&Bucket::None];
    CoverageReport {
        total_types: total,
        not_covered: F::ratio(counts[&Bucket::None], total),
        misc_share_of_rest: F::ratio(counts[&Bucket::Misc], rest),
        counts,
        fractions,
        unmapped_top_level: unmapped,
    }
}
