//! Naive distant supervision: every original hyperlink whose target has
//! in-scope types becomes a mention. Nothing is unlinked, inferred or
//! filtered, so this produces the comparison set for the full pipeline.

use crate::model::{sentence_mentions, AnchorKind, AnnotatedSentence, Document, KnowledgeBase, TypeHierarchy};

pub fn nds_annotate(doc: &Document, kb: &KnowledgeBase, hierarchy: &TypeHierarchy) -> Vec<AnnotatedSentence> {
    let original = Document {
        anchors: doc
            .anchors
            .iter()
            .filter(|a| a.kind == AnchorKind::Link)
            .cloned()
            .collect(),
        ..doc.clone()
    };
    (0..original.sentences.len())
        .map(|index| AnnotatedSentence {
            doc_id: original.id.clone(),
            sentence: index,
            tokens: original.sentences[index].clone(),
            mentions: sentence_mentions(&original, index, kb, hierarchy),
        })
        .collect()
}
