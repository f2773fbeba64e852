//! Sentence selection.
//!
//! A sentence is kept only when every unlinked token containing an uppercase
//! character is explained as a non-entity by one of four exceptions:
//!
//! 1. it is sentence-initial and is a frequent sentence starter or carries a
//!    permissible closed-class tag;
//! 2. it is tagged as an adjective;
//! 3. it belongs to an occupational title;
//! 4. it belongs to a day or month name.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_entries;
use crate::model::{
    fold, fold_all, has_uppercase, sentence_mentions, AnnotatedSentence, Document, KnowledgeBase, TypeHierarchy,
};
use crate::pos::PosTagger;

pub const DEFAULT_STARTER_COUNT: usize = 150;

pub const DEFAULT_PERMISSIBLE_POS: &[&str] = &[
    "DT", "IN", "PRP", "PRP$", "CC", "WDT", "WP", "WRB", "TO", "MD", "EX", "RB",
];

const ADJECTIVE_TAGS: &[&str] = &["JJ", "JJR", "JJS"];

const DEFAULT_TITLES: &str = include_str!("../data/occupational_titles.txt");
const DEFAULT_DAY_MONTH: &str = include_str!("../data/day_month_names.txt");

/// Case-folded word or multi-word phrase list.
#[derive(Debug, Clone, Default)]
pub struct PhraseLexicon {
    by_first: HashMap<String, Vec<Vec<String>>>,
    max_len: usize,
}

impl PhraseLexicon {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = PhraseLexicon::default();
        for entry in entries {
            let words: Vec<&str> = entry.as_ref().split_whitespace().collect();
            if words.is_empty() || words[0].starts_with('#') {
                continue;
            }
            let phrase = fold_all(&words);
            lex.max_len = lex.max_len.max(phrase.len());
            let bucket = lex.by_first.entry(phrase[0].clone()).or_default();
            if !bucket.contains(&phrase) {
                bucket.push(phrase);
            }
        }
        lex
    }

    fn from_text(text: &str) -> Self {
        Self::from_entries(text.lines())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_entries(read_entries(path)?))
    }

    /// True when some entry occurs in `folded` at a window covering `index`.
    pub fn covers(&self, folded: &[String], index: usize) -> bool {
        let lo = index.saturating_sub(self.max_len.saturating_sub(1));
        (lo..=index).any(|start| {
            self.by_first.get(&folded[start]).is_some_and(|phrases| {
                phrases.iter().any(|p| {
                    start + p.len() > index
                        && start + p.len() <= folded.len()
                        && folded[start..start + p.len()] == p[..]
                })
            })
        })
    }

    pub fn len(&self) -> usize {
        self.by_first.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_first.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SelectionLexicons {
    frequent_starters: Vec<String>,
    starter_set: HashSet<String>,
    pub permissible_pos: BTreeSet<String>,
    pub occupational_titles: PhraseLexicon,
    pub day_month_names: PhraseLexicon,
}

impl SelectionLexicons {
    /// Default permissible tags and bundled English title and date lexicons.
    pub fn new(frequent_starters: Vec<String>) -> Self {
        SelectionLexicons {
            starter_set: frequent_starters.iter().map(|s| fold(s)).collect(),
            frequent_starters,
            permissible_pos: DEFAULT_PERMISSIBLE_POS.iter().map(|s| s.to_string()).collect(),
            occupational_titles: PhraseLexicon::from_text(DEFAULT_TITLES),
            day_month_names: PhraseLexicon::from_text(DEFAULT_DAY_MONTH),
        }
    }

    pub fn frequent_starters(&self) -> &[String] {
        &self.frequent_starters
    }

    pub fn is_starter(&self, folded: &str) -> bool {
        self.starter_set.contains(folded)
    }
}

/// Streaming counter of sentence-initial words.
#[derive(Debug, Clone, Default)]
pub struct StarterCounter {
    counts: HashMap<String, u64>,
}

impl StarterCounter {
    pub fn observe_document(&mut self, doc: &Document) {
        for sentence in &doc.sentences {
            if let Some(first) = sentence.first() {
                *self.counts.entry(fold(first)).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &StarterCounter) {
        for (word, n) in &other.counts {
            *self.counts.entry(word.clone()).or_default() += n;
        }
    }

    /// The `k` most frequent starters; ties broken lexicographically.
    pub fn top(&self, k: usize) -> Vec<String> {
        let mut ranked: Vec<(&String, u64)> = self.counts.iter().map(|(w, n)| (w, *n)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if ranked.len() < k {
            log::warn!(
                "only {} distinct sentence starters available (wanted {k})",
                ranked.len()
            );
        }
        ranked.into_iter().take(k).map(|(w, _)| w.clone()).collect()
    }
}

pub fn compute_frequent_starters<'a>(corpus: impl IntoIterator<Item = &'a Document>, k: usize) -> Result<Vec<String>> {
    if k < 1 {
        return Err(Error::Config("starter list length must be at least 1".into()));
    }
    let mut counter = StarterCounter::default();
    for doc in corpus {
        counter.observe_document(doc);
    }
    Ok(counter.top(k))
}

/// Index of the first unlinked token that is probably an unannotated entity.
pub fn first_violation<S: AsRef<str>>(
    tokens: &[S],
    linked: &[bool],
    tags: &[String],
    lex: &SelectionLexicons,
) -> Option<usize> {
    let folded = fold_all(tokens);
    (0..tokens.len()).find(|&i| {
        if linked[i] || !has_uppercase(tokens[i].as_ref()) {
            return false;
        }
        let starter_ok = i == 0 && (lex.is_starter(&folded[i]) || lex.permissible_pos.contains(&tags[i]));
        let explained = starter_ok
            || ADJECTIVE_TAGS.contains(&tags[i].as_str())
            || lex.occupational_titles.covers(&folded, i)
            || lex.day_month_names.covers(&folded, i);
        !explained
    })
}

pub fn sentence_is_clean<S: AsRef<str>>(
    tokens: &[S],
    linked: &[bool],
    tags: &[String],
    lex: &SelectionLexicons,
) -> bool {
    first_violation(tokens, linked, tags, lex).is_none()
}

/// Outcome for one sentence of a document.
#[derive(Debug, Clone)]
pub enum SentenceVerdict {
    Selected(AnnotatedSentence),
    /// Discarded because of the token at this index.
    Discarded {
        sentence: usize,
        token: usize,
    },
}

pub fn judge_sentences(
    doc: &Document,
    tagger: &dyn PosTagger,
    lex: &SelectionLexicons,
    kb: &KnowledgeBase,
    hierarchy: &TypeHierarchy,
) -> Result<Vec<SentenceVerdict>> {
    let mut out = Vec::with_capacity(doc.sentences.len());
    for (index, tokens) in doc.sentences.iter().enumerate() {
        let tags = tagger.tag(doc, index)?;
        if tags.len() != tokens.len() {
            return Err(Error::Invariant(format!(
                "document {} sentence {index}: tagger returned {} tags for {} tokens",
                doc.id,
                tags.len(),
                tokens.len()
            )));
        }
        let linked = doc.linked_mask(index);
        match first_violation(tokens, &linked, &tags, lex) {
            Some(token) => out.push(SentenceVerdict::Discarded { sentence: index, token }),
            None => out.push(SentenceVerdict::Selected(AnnotatedSentence {
                doc_id: doc.id.clone(),
                sentence: index,
                tokens: tokens.clone(),
                mentions: sentence_mentions(doc, index, kb, hierarchy),
            })),
        }
    }
    Ok(out)
}

/// The clean sentences of `doc` with their mentions.
pub fn select_sentences(
    doc: &Document,
    tagger: &dyn PosTagger,
    lex: &SelectionLexicons,
    kb: &KnowledgeBase,
    hierarchy: &TypeHierarchy,
) -> Result<Vec<AnnotatedSentence>> {
    Ok(judge_sentences(doc, tagger, lex, kb, hierarchy)?
        .into_iter()
        .filter_map(|v| match v {
            SentenceVerdict::Selected(s) => Some(s),
            SentenceVerdict::Discarded { .. } => None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityId, TokenSpan};
    use crate::pos::BuiltinTagger;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn lex() -> SelectionLexicons {
        SelectionLexicons::new(vec!["the".into(), "he".into(), "in".into()])
    }

    fn clean(s: &str, linked: &[bool]) -> bool {
        let tokens = toks(s);
        let tags = BuiltinTagger.tag_tokens(&tokens);
        let mask = if linked.is_empty() {
            vec![false; tokens.len()]
        } else {
            linked.to_vec()
        };
        sentence_is_clean(&tokens, &mask, &tags, &lex())
    }

    #[test]
    fn starter_exception() {
        assert!(clean("The striker scored twice .", &[]));
        // not a starter mid-sentence
        assert!(!clean("Yesterday The Band played", &[]));
    }

    #[test]
    fn permissible_pos_at_start() {
        // "Although" is not in the starter list but is tagged IN
        assert!(clean("Although injured , he played", &[]));
    }

    #[test]
    fn unlinked_name_rejects() {
        assert!(!clean(
            "Halonen competed with his brother Eero .",
            &[true, false, false, false, false, false, false]
        ));
        assert!(clean(
            "Halonen competed with his brother Eero .",
            &[true, false, false, false, false, true, false]
        ));
    }

    #[test]
    fn day_month_title_adjective() {
        assert!(clean("She met him on Tuesday .", &[]));
        assert!(clean("he arrived in early March", &[]));
        assert!(clean("he met the President", &[]));
        assert!(clean("he met the Prime Minister", &[]));
        assert!(!clean("he met the Prime Suspect", &[]));
        assert!(clean("he is a Finnish luger", &[]));
    }

    #[test]
    fn any_uppercase_counts() {
        assert!(!clean("he bought an iPhone", &[]));
    }

    #[test]
    fn phrase_lexicon_windows() {
        let lexicon = PhraseLexicon::from_entries(["Prime Minister", "Dr.", "# comment"]);
        assert_eq!(lexicon.len(), 2);
        let folded = fold_all(&toks("the prime minister said"));
        assert!(!lexicon.covers(&folded, 0));
        assert!(lexicon.covers(&folded, 1));
        assert!(lexicon.covers(&folded, 2));
        assert!(!lexicon.covers(&fold_all(&toks("prime")), 0));
    }

    #[test]
    fn frequent_starters() {
        let docs: Vec<Document> = ["The a", "The b", "A c", "a d", "The e"]
            .iter()
            .map(|s| Document::new("d", None, vec![toks(s)], vec![]).unwrap())
            .collect();
        assert_eq!(compute_frequent_starters(&docs, 1).unwrap(), vec!["the"]);
        let tie: Vec<Document> = (0..5)
            .flat_map(|_| ["the x", "a y"])
            .map(|s| Document::new("d", None, vec![toks(s)], vec![]).unwrap())
            .collect();
        assert_eq!(compute_frequent_starters(&tie, 2).unwrap(), vec!["a", "the"]);
        assert!(compute_frequent_starters(std::iter::empty(), 150).unwrap().is_empty());
        assert!(compute_frequent_starters(std::iter::empty(), 0).is_err());
    }

    #[test]
    fn default_lexicons_load() {
        let lex = SelectionLexicons::new(vec![]);
        assert!(lex.occupational_titles.len() > 50);
        assert_eq!(lex.day_month_names.len(), 41);
        assert_eq!(lex.permissible_pos.len(), 12);
    }

    struct WrongLength;
    impl PosTagger for WrongLength {
        fn tag(&self, _: &Document, _: usize) -> Result<Vec<String>> {
            Ok(vec!["NN".into()])
        }
    }

    #[test]
    fn selection_and_mentions() {
        let mut kb = KnowledgeBase::new();
        kb.add_type("Gates".into(), "/person");
        let h = TypeHierarchy::from_paths(["/person"]).unwrap();
        let doc = Document::new(
            "d",
            None,
            vec![toks("Gates spoke ."), toks("Then Eero left ."), toks("it rained .")],
            vec![(TokenSpan::new(0, 0, 1), EntityId::from("Gates"))],
        )
        .unwrap();
        let selected = select_sentences(&doc, &BuiltinTagger, &lex(), &kb, &h).unwrap();
        assert_eq!(selected.iter().map(|s| s.sentence).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(selected[0].mentions.len(), 1);
        assert!(selected[1].mentions.is_empty());
        let err = select_sentences(&doc, &WrongLength, &lex(), &kb, &h).unwrap_err();
        assert!(!err.is_input_error());
    }
}
