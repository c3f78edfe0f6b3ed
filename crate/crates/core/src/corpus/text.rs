//! Cleaning and anonymization of casenote text.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Replacement token for personal names.
pub const NAME_SENTINEL: &str = "NAME";
/// Replacement token for anything containing a digit.
pub const NUM_SENTINEL: &str = "NUM";

pub fn is_sentinel(token: &str) -> bool {
    token == NAME_SENTINEL || token == NUM_SENTINEL
}

/// Parse a one-entry-per-line word list. `#` starts a comment.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn strip_punctuation(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        // Entries are normalized the same way tokens are, so "don't" matches "dont".
        Stopwords(
            words
                .into_iter()
                .map(|w| strip_punctuation(w.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Self {
        Self::new(parse_word_list(text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercase, strip punctuation, and drop stopwords. Token order is kept.
pub fn clean_text(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.split_whitespace()
        .map(strip_punctuation)
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .collect()
}

/// Surname and given-name lists used for anonymization. Entries that double
/// as common nouns ("brown", "list") are kept out of both name sets.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NameLexicon {
    pub surnames: HashSet<String>,
    pub given_names: HashSet<String>,
    pub common_noun_exclusions: HashSet<String>,
}

impl NameLexicon {
    pub fn new<I, J, K>(surnames: I, given_names: J, exclusions: K) -> Self
    where
        I: IntoIterator<Item = String>,
        J: IntoIterator<Item = String>,
        K: IntoIterator<Item = String>,
    {
        let common_noun_exclusions: HashSet<String> =
            exclusions.into_iter().map(|s| s.to_lowercase()).collect();
        let keep = |s: String| {
            let s = s.to_lowercase();
            (!common_noun_exclusions.contains(&s)).then_some(s)
        };
        let surnames = surnames.into_iter().filter_map(keep).collect();
        let given_names = given_names.into_iter().filter_map(keep).collect();
        NameLexicon {
            surnames,
            given_names,
            common_noun_exclusions,
        }
    }

    pub fn is_name(&self, token: &str) -> bool {
        !self.common_noun_exclusions.contains(token)
            && (self.surnames.contains(token) || self.given_names.contains(token))
    }
}

/// Replace names with [`NAME_SENTINEL`] and any token with a digit with
/// [`NUM_SENTINEL`]. Excluded common nouns pass through untouched.
pub fn anonymize(tokens: &[String], lexicon: &NameLexicon) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            if lexicon.common_noun_exclusions.contains(t.as_str()) {
                t.clone()
            } else if t.chars().any(|c| c.is_ascii_digit()) {
                NUM_SENTINEL.to_string()
            } else if lexicon.is_name(t) {
                NAME_SENTINEL.to_string()
            } else {
                t.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn lexicon() -> NameLexicon {
        NameLexicon::new(
            toks(&["jones", "brown", "smith"]),
            toks(&["sarah", "pam"]),
            toks(&["brown", "list"]),
        )
    }

    #[test]
    fn clean_basic() {
        let sw = Stopwords::new(["the"]);
        assert_eq!(clean_text("The worker arrived.", &sw), toks(&["worker", "arrived"]));
        assert!(clean_text("", &sw).is_empty());
        let sw = Stopwords::new(["and"]);
        assert_eq!(
            clean_text("Mother, father; and child", &sw),
            toks(&["mother", "father", "child"])
        );
    }

    #[test]
    fn stopwords_match_after_normalization() {
        let sw = Stopwords::new(["don't"]);
        assert!(clean_text("Don't go", &sw) == toks(&["go"]));
    }

    #[test]
    fn anonymize_names_and_numbers() {
        let lex = lexicon();
        let out = anonymize(&toks(&["ms", "jones", "arrived", "9am"]), &lex);
        assert_eq!(out, toks(&["ms", "NAME", "arrived", "NUM"]));
        assert_eq!(anonymize(&toks(&["brown"]), &lex), toks(&["brown"]));
        assert_eq!(anonymize(&toks(&["room", "12b"]), &lex), toks(&["room", "NUM"]));
    }

    #[test]
    fn exclusions_removed_from_name_sets() {
        let lex = lexicon();
        assert!(!lex.surnames.contains("brown"));
        assert!(lex.surnames.contains("jones"));
    }

    #[test]
    fn word_list_comments() {
        let words = parse_word_list("# header\nSmith\n\n jones # trailing\n");
        assert_eq!(words, toks(&["smith", "jones"]));
    }

    proptest! {
        #[test]
        fn anonymize_is_idempotent(words in proptest::collection::vec("[a-z0-9]{1,6}|jones|sarah|brown", 0..20)) {
            let lex = lexicon();
            let once = anonymize(&words, &lex);
            prop_assert_eq!(anonymize(&once, &lex), once);
        }

        #[test]
        fn cleaning_never_invents_tokens(text in "[A-Za-z0-9 ,.;!?'-]{0,80}") {
            let sw = Stopwords::new(["the", "and"]);
            let lex = lexicon();
            let cleaned = clean_text(&text, &sw);
            let input_vocab: HashSet<String> = text.split_whitespace().map(strip_punctuation).collect();
            for t in anonymize(&cleaned, &lex) {
                prop_assert!(input_vocab.contains(&t) || is_sentinel(&t), "{} not from input", t);
            }
        }
    }
}
