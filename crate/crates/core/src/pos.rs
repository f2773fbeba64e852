//! Part-of-speech tagging for sentence selection.
//!
//! Selection only needs coarse distinctions: closed-class words, adjectives,
//! and everything else. Two taggers are provided: one that reads tags stored
//! in the corpus, and a small lexicon-plus-suffix tagger for corpora without
//! tags.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{fold, Document};

/// Produces one Penn-Treebank-style tag per token of a sentence.
pub trait PosTagger: Sync {
    fn tag(&self, doc: &Document, sentence: usize) -> Result<Vec<String>>;
}

/// Reads the `pos` tags carried by the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedTagger;

impl PosTagger for EmbeddedTagger {
    fn tag(&self, doc: &Document, sentence: usize) -> Result<Vec<String>> {
        doc.pos.as_ref().and_then(|p| p.get(sentence)).cloned().ok_or_else(|| {
            Error::Input(format!(
                "document {} carries no pos tags for sentence {sentence}",
                doc.id
            ))
        })
    }
}

/// Closed-class lexicon with suffix rules; open-class words default to
/// NN/NNS, or NNP/NNPS when capitalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinTagger;

const CLOSED_CLASS: &[(&str, &[&str])] = &[
    (
        "DT",
        &[
            "the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any", "no", "another", "all",
            "both", "either", "neither",
        ],
    ),
    (
        "IN",
        &[
            "in",
            "on",
            "at",
            "of",
            "for",
            "with",
            "by",
            "from",
            "into",
            "onto",
            "during",
            "after",
            "before",
            "since",
            "until",
            "about",
            "against",
            "between",
            "through",
            "throughout",
            "under",
            "over",
            "without",
            "within",
            "as",
            "than",
            "because",
            "while",
            "although",
            "though",
            "if",
            "whether",
            "upon",
            "near",
            "across",
            "among",
            "amongst",
            "per",
            "despite",
            "towards",
            "toward",
            "behind",
            "beyond",
            "below",
            "above",
            "along",
            "around",
            "beside",
            "besides",
            "via",
            "unlike",
            "like",
            "outside",
            "inside",
            "following",
            "till",
            "whereas",
            "unless",
            "once",
        ],
    ),
    (
        "PRP",
        &[
            "i",
            "you",
            "he",
            "she",
            "it",
            "we",
            "they",
            "me",
            "him",
            "us",
            "them",
            "himself",
            "herself",
            "itself",
            "themselves",
            "ourselves",
            "myself",
            "yourself",
        ],
    ),
    ("PRP$", &["my", "your", "his", "her", "its", "our", "their"]),
    ("CC", &["and", "or", "but", "nor", "yet", "plus"]),
    ("WDT", &["which", "whatever", "whichever"]),
    ("WP", &["who", "whom", "what", "whoever"]),
    ("WP$", &["whose"]),
    ("WRB", &["when", "where", "why", "how", "whenever", "wherever"]),
    ("TO", &["to"]),
    (
        "MD",
        &[
            "can", "could", "will", "would", "shall", "should", "may", "might", "must",
        ],
    ),
    ("EX", &["there"]),
    (
        "RB",
        &[
            "not",
            "also",
            "however",
            "then",
            "often",
            "later",
            "soon",
            "still",
            "already",
            "again",
            "never",
            "always",
            "only",
            "just",
            "very",
            "too",
            "now",
            "here",
            "thus",
            "hence",
            "therefore",
            "meanwhile",
            "instead",
            "nevertheless",
            "moreover",
            "furthermore",
            "eventually",
            "finally",
            "currently",
            "recently",
            "previously",
            "subsequently",
            "originally",
            "initially",
            "together",
            "ago",
            "almost",
            "even",
            "ever",
            "perhaps",
            "rather",
            "quite",
            "so",
            "today",
            "tomorrow",
            "yesterday",
            "afterwards",
            "nonetheless",
            "consequently",
            "additionally",
        ],
    ),
    ("VBZ", &["is", "has", "does"]),
    (
        "VBD",
        &[
            "was", "were", "had", "did", "became", "began", "won", "made", "took", "went", "came", "left", "met",
            "saw", "led", "wrote", "gave", "held", "lost", "found", "built", "ran", "told", "got", "became",
        ],
    ),
    ("VBP", &["are", "have", "do"]),
    ("VB", &["be"]),
    ("VBN", &["been", "born", "known", "given", "taken", "written", "shown"]),
    (
        "CD",
        &[
            "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred", "thousand",
            "million", "billion",
        ],
    ),
];

/// Capitalized nationality and language adjectives not caught by suffix rules.
const DEMONYMS: &[&str] = &[
    "american",
    "british",
    "french",
    "german",
    "italian",
    "russian",
    "canadian",
    "australian",
    "indian",
    "mexican",
    "brazilian",
    "african",
    "european",
    "asian",
    "korean",
    "norwegian",
    "egyptian",
    "iranian",
    "persian",
    "roman",
    "greek",
    "dutch",
    "swiss",
    "thai",
    "arab",
    "arabic",
    "israeli",
    "iraqi",
    "pakistani",
    "latin",
    "catholic",
    "christian",
    "muslim",
    "jewish",
    "islamic",
    "soviet",
    "victorian",
    "olympic",
    "hungarian",
    "belgian",
    "chilean",
    "peruvian",
    "colombian",
    "argentine",
    "argentinian",
    "ukrainian",
    "austrian",
    "czech",
    "croatian",
    "serbian",
    "romanian",
    "bulgarian",
    "estonian",
    "latvian",
    "lithuanian",
    "nigerian",
    "kenyan",
    "ethiopian",
    "algerian",
    "moroccan",
    "indonesian",
    "malaysian",
    "cuban",
    "jamaican",
    "haitian",
    "venezuelan",
    "bolivian",
    "albanian",
    "georgian",
    "armenian",
    "syrian",
    "lebanese",
    "japanese",
    "chinese",
    "vietnamese",
    "portuguese",
    "taiwanese",
];

fn lexicon() -> &'static HashMap<&'static str, &'static str> {
    static LEXICON: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        let mut map = HashMap::new();
        for (tag, words) in CLOSED_CLASS {
            for word in *words {
                map.entry(*word).or_insert(*tag);
            }
        }
        for word in DEMONYMS {
            map.insert(*word, "JJ");
        }
        map
    })
}

fn punctuation_tag(token: &str) -> Option<&'static str> {
    if !token.chars().all(|c| c.is_ascii_punctuation()) {
        return None;
    }
    Some(match token {
        "." | "!" | "?" => ".",
        "," => ",",
        ":" | ";" | "--" | "-" => ":",
        "(" | "[" | "{" => "-LRB-",
        ")" | "]" | "}" => "-RRB-",
        "\"" | "``" => "``",
        "''" => "''",
        "$" => "$",
        "#" => "#",
        _ => "SYM",
    })
}

fn is_number(token: &str) -> bool {
    let mut digits = false;
    for c in token.chars() {
        if c.is_ascii_digit() {
            digits = true;
        } else if !matches!(c, ',' | '.' | '-' | '/' | '%') {
            return false;
        }
    }
    digits
}

const ADJ_SUFFIXES: &[&str] = &[
    "ous", "ful", "ive", "able", "ible", "ical", "less", "ish", "ese", "ary", "ic", "al",
];

impl BuiltinTagger {
    pub fn tag_token(&self, token: &str, sentence_initial: bool) -> &'static str {
        if let Some(tag) = punctuation_tag(token) {
            return tag;
        }
        if is_number(token) {
            return "CD";
        }
        let lower = fold(token);
        let capitalized = crate::model::is_capitalized(token);
        if let Some(tag) = lexicon().get(lower.as_str()) {
            // closed-class words keep their tag sentence-initially; mid-sentence
            // capitals are more likely names ("May", "Will")
            if !capitalized || sentence_initial || *tag == "JJ" {
                return tag;
            }
        }
        if capitalized {
            let adjectival = |part: &str| {
                (part.len() > 4 && (part.ends_with("ish") || part.ends_with("ese"))) || DEMONYMS.contains(&part)
            };
            if lower.split('-').all(|p| !p.is_empty()) && lower.split('-').any(adjectival) {
                return "JJ";
            }
            return if lower.len() > 3 && lower.ends_with('s') && !lower.ends_with("ss") {
                "NNPS"
            } else {
                "NNP"
            };
        }
        if lower.contains('-')
            && lower
                .split('-')
                .any(|p| ADJ_SUFFIXES.iter().any(|s| p.len() > s.len() + 2 && p.ends_with(s)))
        {
            return "JJ";
        }
        if lower.len() > 4 && lower.ends_with("ly") {
            return "RB";
        }
        if lower.len() > 4 && lower.ends_with("ing") {
            return "VBG";
        }
        if lower.len() > 3 && lower.ends_with("ed") {
            return "VBD";
        }
        if ADJ_SUFFIXES
            .iter()
            .any(|s| lower.len() > s.len() + 2 && lower.ends_with(s))
        {
            return "JJ";
        }
        if lower.len() > 3 && lower.ends_with('s') && !lower.ends_with("ss") && !lower.ends_with("us") {
            return "NNS";
        }
        "NN"
    }

    pub fn tag_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| self.tag_token(t.as_ref(), i == 0).to_string())
            .collect()
    }
}

impl PosTagger for BuiltinTagger {
    fn tag(&self, doc: &Document, sentence: usize) -> Result<Vec<String>> {
        Ok(self.tag_tokens(&doc.sentences[sentence]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<String> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        BuiltinTagger.tag_tokens(&toks)
    }

    #[test]
    fn closed_class_and_names() {
        assert_eq!(tags("The striker scored twice ."), vec!["DT", "NN", "VBD", "NN", "."]);
        assert_eq!(tags("She met Eero in Lahti"), vec!["PRP", "VBD", "NNP", "IN", "NNP"]);
        assert_eq!(tags("In 1992 he won")[..2], ["IN", "CD"]);
    }

    #[test]
    fn adjectives() {
        assert_eq!(tags("a Finnish luger")[1], "JJ");
        assert_eq!(tags("the American team")[1], "JJ");
        assert_eq!(tags("a famous and beautiful city")[1], "JJ");
        assert_eq!(tags("a Finnish-American luger")[1], "JJ");
        assert_eq!(tags("the Lahti-Helsinki road")[1], "NNP");
    }

    #[test]
    fn mid_sentence_capitals_are_names() {
        assert_eq!(tags("he met May")[2], "NNP");
        assert_eq!(tags("May he rest")[0], "MD");
    }

    #[test]
    fn embedded_tags_required() {
        let doc = Document::new("d", None, vec![vec!["a".into()]], vec![]).unwrap();
        assert!(EmbeddedTagger.tag(&doc, 0).is_err());
        let doc = doc.with_pos(vec![vec!["DT".into()]]).unwrap();
        assert_eq!(EmbeddedTagger.tag(&doc, 0).unwrap(), vec!["DT"]);
    }
}
