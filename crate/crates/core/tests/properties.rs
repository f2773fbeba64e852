use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use hands_core::analysis::{corpus_stats, StatsAccumulator};
use hands_core::emit::{MentionRecord, SentenceRecord};
use hands_core::link_stats::{compute_link_stats, LinkStats};
use hands_core::metrics::{detection_prf, typing_scores, LabelSet, SpanKey};
use hands_core::stage1::{apply_stage1, LinkContext, Stage1Config};
use hands_core::stage2::{build_tries, infer_links, OutgoingLinkSet, Stage2Config};
use hands_core::{AnchorKind, Document, EntityId, KnowledgeBase, TokenSpan, TypeHierarchy};

const WORDS: &[&str] = &["Ora", "ora", "Vel", "vel", "Tam", "of", "the", "Kir"];
const TARGETS: &[&str] = &["Ora", "Vel_Tam", "ora_vel", "Kir_(band)", "Tam"];

fn observations() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0..TARGETS.len(), any::<bool>()), 0..40)
}

fn stats_of(obs: &[(usize, bool)]) -> LinkStats {
    let mut s = LinkStats::new();
    for &(t, lower) in obs {
        s.observe(&EntityId::new(TARGETS[t]), lower);
    }
    s
}

fn small_doc() -> impl Strategy<Value = Document> {
    (
        prop::collection::vec(prop::collection::vec(prop::sample::select(WORDS), 1..10), 1..4),
        prop::collection::vec((any::<bool>(), 1usize..3, 0..TARGETS.len()), 30),
        prop::option::of(0..TARGETS.len()),
    )
        .prop_map(|(sentences, picks, self_entity)| {
            let sentences: Vec<Vec<String>> = sentences
                .into_iter()
                .map(|s| s.into_iter().map(String::from).collect())
                .collect();
            let mut links = Vec::new();
            let mut k = 0;
            for (s, tokens) in sentences.iter().enumerate() {
                let mut i = 0;
                while i < tokens.len() {
                    let (start, width, target) = picks[k % picks.len()];
                    k += 1;
                    if start {
                        let end = (i + width).min(tokens.len());
                        links.push((TokenSpan::new(s, i, end), EntityId::new(TARGETS[target])));
                        i = end;
                    } else {
                        i += 1;
                    }
                }
            }
            Document::new("p", self_entity.map(|t| EntityId::new(TARGETS[t])), sentences, links).unwrap()
        })
}

fn kb() -> (KnowledgeBase, TypeHierarchy) {
    let mut kb = KnowledgeBase::new();
    kb.add_type("Ora".into(), "/location");
    kb.add_type("Vel_Tam".into(), "/person");
    kb.add_alias("Vel_Tam".into(), "Vel");
    kb.add_alias("Vel_Tam".into(), "Tam");
    kb.add_type("Kir_(band)".into(), "/organization");
    kb.add_alias("Kir_(band)".into(), "the Kir");
    kb.add_entity("ora_vel".into());
    kb.add_type("Tam".into(), "/person");
    let h = TypeHierarchy::from_paths(["/location", "/person", "/organization"]).unwrap();
    (kb, h)
}

fn record() -> impl Strategy<Value = SentenceRecord> {
    (
        prop::collection::vec(prop::sample::select(WORDS), 1..8),
        0usize..4,
        prop::collection::vec(prop::sample::select(vec!["/a", "/b", "/c"]), 1..3),
        0usize..3,
    )
        .prop_map(|(tokens, entity, labels, sent)| {
            let tokens: Vec<String> = tokens.into_iter().map(String::from).collect();
            let mut labels: Vec<String> = labels.into_iter().map(String::from).collect();
            labels.sort();
            labels.dedup();
            SentenceRecord {
                doc: format!("d{entity}"),
                sent,
                mentions: vec![MentionRecord {
                    b: 0,
                    e: 1,
                    entity: format!("E{entity}"),
                    labels,
                }],
                tokens,
            }
        })
}

fn label_set(min: usize) -> impl Strategy<Value = LabelSet> {
    prop::collection::btree_set(prop::sample::select(vec!["/a", "/b", "/c", "/d", "/e"]), min..4)
        .prop_map(|s| s.into_iter().map(String::from).collect())
}

// gold mentions always carry at least one label
fn typing_instance() -> impl Strategy<Value = (BTreeMap<usize, LabelSet>, BTreeMap<usize, LabelSet>)> {
    prop::collection::vec((label_set(1), prop::option::of(label_set(0))), 1..8).prop_map(|pairs| {
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for (k, (g, p)) in pairs.into_iter().enumerate() {
            gold.insert(k, g);
            if let Some(p) = p {
                pred.insert(k, p);
            }
        }
        (gold, pred)
    })
}

fn span_keys() -> impl Strategy<Value = Vec<SpanKey>> {
    prop::collection::btree_set((0usize..4, 0usize..6), 0..12).prop_map(|cells| {
        cells
            .into_iter()
            .map(|(sent, start)| SpanKey::new("d", sent, start * 2, start * 2 + 1))
            .collect()
    })
}

proptest! {
    #[test]
    fn link_stats_merge_is_associative(a in observations(), b in observations(), c in observations()) {
        let (sa, sb, sc) = (stats_of(&a), stats_of(&b), stats_of(&c));
        let mut left = sa.clone();
        left.merge(&sb);
        left.merge(&sc);
        let mut bc = sb.clone();
        bc.merge(&sc);
        let mut right = sa.clone();
        right.merge(&bc);
        prop_assert_eq!(&left, &right);
        let mut swapped = sb.clone();
        swapped.merge(&sa);
        swapped.merge(&sc);
        prop_assert_eq!(&left, &swapped);
        let all: Vec<_> = a.iter().chain(&b).chain(&c).copied().collect();
        prop_assert_eq!(left, stats_of(&all));
    }

    #[test]
    fn link_stats_split_equals_whole(docs in prop::collection::vec(small_doc(), 1..6), cut in 0usize..6) {
        let cut = cut.min(docs.len());
        let mut parts = compute_link_stats(&docs[..cut]);
        parts.merge(&compute_link_stats(&docs[cut..]));
        prop_assert_eq!(parts, compute_link_stats(&docs));
    }

    #[test]
    fn stage1_keeps_a_subset(doc in small_doc(), obs in observations()) {
        let (kb, h) = kb();
        let stats = stats_of(&obs);
        let ctx = LinkContext { kb: &kb, hierarchy: &h, stats: &stats };
        let (after, removed) = apply_stage1(&doc, &ctx, &Stage1Config::default());
        prop_assert_eq!(after.anchors.len() + removed.len(), doc.anchors.len());
        for a in &after.anchors {
            prop_assert!(doc.anchors.contains(a));
        }
        prop_assert_eq!(&after.sentences, &doc.sentences);
    }

    #[test]
    fn stage2_preserves_anchors_and_never_overlaps(doc in small_doc(), obs in observations(), unknown in any::<bool>()) {
        let (kb, h) = kb();
        let stats = stats_of(&obs);
        let ctx = LinkContext { kb: &kb, hierarchy: &h, stats: &stats };
        let cfg = Stage1Config::default();
        let outgoing = OutgoingLinkSet::collect(&doc, &ctx, &cfg);
        let (after1, _) = apply_stage1(&doc, &ctx, &cfg);
        let tries = build_tries(&outgoing, &kb, &stats, &Stage2Config { unknown_as_nonentity: unknown });
        let (after2, events) = infer_links(&after1, &tries);
        prop_assert!(after2.validate().is_ok());
        for a in &after1.anchors {
            prop_assert!(after2.anchors.contains(a));
        }
        let added: Vec<_> = after2.anchors.iter().filter(|a| a.kind != AnchorKind::Link).collect();
        prop_assert_eq!(added.len() + after1.anchors.len(), after2.anchors.len());
        for a in added {
            prop_assert!(outgoing.category(&a.target).is_some(), "{} is not an outgoing link", a.target);
        }
        let (again, _) = infer_links(&after1, &tries);
        prop_assert_eq!(again, after2.clone());
        prop_assert!(events.iter().all(|e| e.pass == 1 || e.pass == 2));
    }

    #[test]
    fn corpus_stats_ignore_order(records in prop::collection::vec(record(), 0..10), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
            }
        }
        prop_assert_eq!(corpus_stats::<f64>(&records), corpus_stats::<f64>(&shuffled));
    }

    #[test]
    fn stats_accumulator_merge_matches_single_pass(records in prop::collection::vec(record(), 0..10), cut in 0usize..10) {
        let cut = cut.min(records.len());
        let mut a = StatsAccumulator::default();
        let mut b = StatsAccumulator::default();
        records[..cut].iter().for_each(|r| a.observe(r));
        records[cut..].iter().for_each(|r| b.observe(r));
        b.merge(a);
        prop_assert_eq!(b.finish::<f64>(), corpus_stats::<f64>(&records));
        prop_assert_eq!(corpus_stats::<f32>(&records).mentions, records.len());
    }

    #[test]
    fn detection_swaps_precision_and_recall(gold in span_keys(), pred in span_keys()) {
        let forward = detection_prf::<f64>(&gold, &pred).unwrap();
        let backward = detection_prf::<f64>(&pred, &gold).unwrap();
        prop_assert_eq!(forward.precision, backward.recall);
        prop_assert_eq!(forward.recall, backward.precision);
        prop_assert_eq!(forward.f1, backward.f1);
        for v in [forward.precision, forward.recall, forward.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn adding_a_correct_prediction_never_lowers_detection_recall(gold in span_keys(), pred in span_keys(), pick in any::<prop::sample::Index>()) {
        prop_assume!(!gold.is_empty());
        let before = detection_prf::<f64>(&gold, &pred).unwrap();
        let extra = gold[pick.index(gold.len())].clone();
        let mut more: BTreeSet<SpanKey> = pred.into_iter().collect();
        more.insert(extra);
        let more: Vec<SpanKey> = more.into_iter().collect();
        let after = detection_prf::<f64>(&gold, &more).unwrap();
        prop_assert!(after.recall >= before.recall);
    }

    #[test]
    fn strict_never_exceeds_macro_f1((gold, pred) in typing_instance()) {
        let s = typing_scores::<usize, f64>(&gold, &pred).unwrap();
        prop_assert!(s.strict <= s.loose_macro.f1 + 1e-15, "{s:?}");
        prop_assert!(s.loose_macro.precision >= s.strict && s.loose_macro.recall >= s.strict);
        for v in [s.strict, s.loose_macro.f1, s.loose_micro.f1, s.loose_micro.precision, s.loose_micro.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn perfect_typing_scores_one((gold, _) in typing_instance()) {
        let s = typing_scores::<usize, f64>(&gold, &gold).unwrap();
        prop_assert_eq!(s.strict, 1.0);
        prop_assert_eq!(s.loose_macro.f1, 1.0);
        prop_assert_eq!(s.loose_micro.f1, 1.0);
    }
}

fn labels(items: &[&str]) -> LabelSet {
    items.iter().map(|s| s.to_string()).collect()
}

/// Pooled overlap can fall below the exact-match rate: one mention is exact,
/// the other over-predicts heavily.
#[test]
fn strict_can_exceed_micro_f1() {
    let gold = BTreeMap::from([(0, labels(&["/a"])), (1, labels(&["/b"]))]);
    let pred = BTreeMap::from([(0, labels(&["/a"])), (1, labels(&["/c", "/d", "/e", "/f"]))]);
    let s = typing_scores::<usize, f64>(&gold, &pred).unwrap();
    assert_eq!(s.strict, 0.5);
    assert_eq!(s.loose_micro.precision, 0.2);
    assert_eq!(s.loose_micro.recall, 0.5);
    assert!((s.loose_micro.f1 - 2.0 / 7.0).abs() < 1e-15);
    assert!(s.strict > s.loose_micro.f1);
    assert!(s.strict <= s.loose_macro.f1);
}
