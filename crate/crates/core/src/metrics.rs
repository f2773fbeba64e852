//! Detection and typing scores.
//!
//! Detection is exact-span matching with conlleval semantics. Typing uses
//! three measures over per-mention label sets `g` (gold) and `p` (predicted):
//!
//! * strict: share of mentions with `p == g`;
//! * loose macro: precision is the mean of `|g∩p|/|p|` (a term is 0 when
//!   `p` is empty), recall the mean of `|g∩p|/|g|`;
//! * loose micro: precision `Σ|g∩p| / Σ|p|`, recall `Σ|g∩p| / Σ|g|`.
//!
//! Every F1 is the harmonic mean of its precision and recall, 0 when both are 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::emit::SentenceRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type LabelSet = BTreeSet<String>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

impl<F: Scalar> Prf<F> {
    pub fn new(precision: F, recall: F) -> Self {
        Prf {
            precision,
            recall,
            f1: F::harmonic(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TypingScores<F> {
    pub strict: F,
    pub loose_macro: Prf<F>,
    pub loose_micro: Prf<F>,
}

/// Sentence-scoped mention extent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanKey {
    pub doc: String,
    pub sent: usize,
    pub start: usize,
    pub end: usize,
}

impl SpanKey {
    pub fn new(doc: impl Into<String>, sent: usize, start: usize, end: usize) -> Self {
        SpanKey {
            doc: doc.into(),
            sent,
            start,
            end,
        }
    }
}

fn check_side(spans: &[SpanKey], side: &str) -> Result<BTreeSet<SpanKey>> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.doc == b.doc && a.sent == b.sent && b.start < a.end {
            return Err(Error::Input(format!(
                "{side} spans overlap in {}:{} ({}..{} and {}..{})",
                a.doc, a.sent, a.start, a.end, b.start, b.end
            )));
        }
    }
    Ok(sorted.into_iter().collect())
}

/// Exact-span precision, recall and F1. Overlapping spans within one side
/// are rejected.
pub fn detection_prf<F: Scalar>(gold: &[SpanKey], pred: &[SpanKey]) -> Result<Prf<F>> {
    let gold = check_side(gold, "gold")?;
    let pred = check_side(pred, "predicted")?;
    let hits = pred.intersection(&gold).count();
    Ok(Prf::new(F::ratio(hits, pred.len()), F::ratio(hits, gold.len())))
}

/// Scores aligned `(gold, pred)` label-set pairs.
fn score_pairs<'a, F: Scalar>(pairs: impl IntoIterator<Item = (&'a LabelSet, &'a LabelSet)>) -> TypingScores<F> {
    let mut n = 0usize;
    let mut exact = 0usize;
    let mut macro_p = F::zero();
    let mut macro_r = F::zero();
    let (mut overlap, mut pred_total, mut gold_total) = (0usize, 0usize, 0usize);
    for (g, p) in pairs {
        n += 1;
        let common = g.intersection(p).count();
        exact += usize::from(g == p);
        macro_p = macro_p + F::ratio(common, p.len());
        macro_r = macro_r + F::ratio(common, g.len());
        overlap += common;
        pred_total += p.len();
        gold_total += g.len();
    }
    if n == 0 {
        return TypingScores::default();
    }
    let count = F::from_count(n);
    TypingScores {
        strict: F::ratio(exact, n),
        loose_macro: Prf::new(macro_p / count, macro_r / count),
        loose_micro: Prf::new(F::ratio(overlap, pred_total), F::ratio(overlap, gold_total)),
    }
}

/// Typing scores on gold mentions. Gold mentions without a prediction count
/// as an empty predicted set; a prediction for a mention absent from gold is
/// an error.
pub fn typing_scores<K, F>(gold: &BTreeMap<K, LabelSet>, pred: &BTreeMap<K, LabelSet>) -> Result<TypingScores<F>>
where
    K: Ord + Debug,
    F: Scalar,
{
    if let Some(extra) = pred.keys().find(|k| !gold.contains_key(k)) {
        return Err(Error::Input(format!(
            "predicted mention {extra:?} is not a gold mention"
        )));
    }
    let empty = LabelSet::new();
    Ok(score_pairs(
        gold.iter().map(|(k, g)| (g, pred.get(k).unwrap_or(&empty))),
    ))
}

/// Joint detection and typing: the union of gold and predicted mentions is
/// scored, with a missing side standing in as an empty label set.
pub fn end_to_end_scores<K, F>(gold: &BTreeMap<K, LabelSet>, pred: &BTreeMap<K, LabelSet>) -> TypingScores<F>
where
    K: Ord,
    F: Scalar,
{
    let empty = LabelSet::new();
    let keys: BTreeSet<&K> = gold.keys().chain(pred.keys()).collect();
    score_pairs(
        keys.into_iter()
            .map(|k| (gold.get(k).unwrap_or(&empty), pred.get(k).unwrap_or(&empty))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    pub gold_mentions: usize,
    pub predicted_mentions: usize,
    pub detection: Prf<F>,
    /// Typing on gold spans.
    pub typing: TypingScores<F>,
    pub end_to_end: TypingScores<F>,
}

/// Mention spans and label sets of a dataset, keyed by span.
pub fn mentions_by_span(records: &[SentenceRecord]) -> BTreeMap<SpanKey, LabelSet> {
    let mut out = BTreeMap::new();
    for r in records {
        for m in &r.mentions {
            out.insert(
                SpanKey::new(r.doc.clone(), r.sent, m.b, m.e),
                SentenceRecord::label_set(m),
            );
        }
    }
    out
}

/// Scores a predicted dataset against a gold dataset.
pub fn evaluate<F: Scalar>(gold: &[SentenceRecord], pred: &[SentenceRecord]) -> Result<EvalReport<F>> {
    let gold_map = mentions_by_span(gold);
    let pred_map = mentions_by_span(pred);
    let gold_spans: Vec<SpanKey> = gold_map.keys().cloned().collect();
    let pred_spans: Vec<SpanKey> = pred_map.keys().cloned().collect();
    let on_gold: BTreeMap<SpanKey, LabelSet> = pred_map
        .iter()
        .filter(|(k, _)| gold_map.contains_key(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(EvalReport {
        gold_mentions: gold_map.len(),
        predicted_mentions: pred_map.len(),
        detection: detection_prf(&gold_spans, &pred_spans)?,
        typing: typing_scores(&gold_map, &on_gold)?,
        end_to_end: end_to_end_scores(&gold_map, &pred_map),
    })
}

/// Counts identical spans and label sets; handy for debugging reports.
pub fn label_histogram(records: &[SentenceRecord]) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    for r in records {
        for m in &r.mentions {
            for l in &m.labels {
                *out.entry(l.clone()).or_default() += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[&str]) -> LabelSet {
        labels.iter().map(|s| s.to_string()).collect()
    }

    fn key(i: usize) -> SpanKey {
        SpanKey::new("d", i, 0, 1)
    }

    #[test]
    fn detection_identity_and_empty() {
        let gold = vec![key(0), key(1)];
        let p: Prf<f64> = detection_prf(&gold, &gold).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        let p: Prf<f64> = detection_prf(&gold, &[]).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn detection_partial() {
        let gold = vec![key(0), key(1), key(2), key(3)];
        let pred = vec![key(0), key(1), key(2), key(7), key(8)];
        let p: Prf<f64> = detection_prf(&gold, &pred).unwrap();
        assert_eq!(p.precision, 0.6);
        assert_eq!(p.recall, 0.75);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn detection_rejects_overlap() {
        let pred = vec![SpanKey::new("d", 0, 0, 3), SpanKey::new("d", 0, 2, 4)];
        assert!(detection_prf::<f64>(&[], &pred).is_err());
        let fine = vec![
            SpanKey::new("d", 0, 0, 2),
            SpanKey::new("d", 0, 2, 4),
            SpanKey::new("d", 1, 0, 4),
        ];
        assert!(detection_prf::<f64>(&fine, &fine).is_ok());
    }

    #[test]
    fn typing_examples() {
        let gold = BTreeMap::from([(1, set(&["A", "B"]))]);
        let pred = BTreeMap::from([(1, set(&["A"]))]);
        let s: TypingScores<f64> = typing_scores(&gold, &pred).unwrap();
        assert_eq!(s.strict, 0.0);
        assert_eq!((s.loose_macro.precision, s.loose_macro.recall), (1.0, 0.5));
        assert_eq!((s.loose_micro.precision, s.loose_micro.recall), (1.0, 0.5));

        let gold = BTreeMap::from([(1, set(&["A"])), (2, set(&["C"]))]);
        let pred = BTreeMap::from([(1, set(&["A", "B"])), (2, set(&["C"]))]);
        let s: TypingScores<f64> = typing_scores(&gold, &pred).unwrap();
        assert_eq!(s.strict, 0.5);
        assert!((s.loose_micro.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.loose_micro.recall, 1.0);

        let s: TypingScores<f32> = typing_scores(&gold, &gold).unwrap();
        assert_eq!(s.strict, 1.0);
        assert_eq!(s.loose_macro.f1, 1.0);
        assert_eq!(s.loose_micro.f1, 1.0);
    }

    #[test]
    fn typing_rejects_unknown_prediction() {
        let gold = BTreeMap::from([(1, set(&["A"]))]);
        let pred = BTreeMap::from([(2, set(&["A"]))]);
        assert!(typing_scores::<_, f64>(&gold, &pred).is_err());
    }

    #[test]
    fn end_to_end_examples() {
        let gold = BTreeMap::from([(1, set(&["A"])), (2, set(&["B"]))]);
        let s: TypingScores<f64> = end_to_end_scores(&gold, &gold);
        assert_eq!(s.loose_micro.f1, 1.0);
        let none = BTreeMap::new();
        let s: TypingScores<f64> = end_to_end_scores(&gold, &none);
        assert_eq!(s, TypingScores::default());
        let half = BTreeMap::from([(1, set(&["A"]))]);
        let s: TypingScores<f64> = end_to_end_scores(&gold, &half);
        assert_eq!(s.loose_micro.recall, 0.5);
        assert_eq!(s.loose_micro.precision, 1.0);
        let spurious = BTreeMap::from([(1, set(&["A"])), (2, set(&["B"])), (3, set(&["C", "D"]))]);
        let s: TypingScores<f64> = end_to_end_scores(&gold, &spurious);
        assert_eq!(s.loose_micro.precision, 0.5);
        assert_eq!(s.loose_micro.recall, 1.0);
    }
}
