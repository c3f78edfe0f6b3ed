//! Synthetic vocabulary that cannot collide with any lexicon the pipeline
//! uses, and simple verb inflection for scripted sentences.

use std::collections::HashSet;

use rand::Rng;

use crate::corpus::{default_name_lexicon, default_stopwords, NameLexicon, Stopwords};
use crate::error::{Error, Result};
use crate::persona_power::{PersonaLexicon, PowerDirection, PowerLexicon, HONORIFICS};
use crate::sentiment::SentimentLexicon;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const RESERVED: &[&str] = &["by", "was", "were", "the", "this", "who", "and", "then", "after", "at"];

/// Every lexicon the pipeline consults, bundled so the generator can stay
/// clear of them.
#[derive(Debug, Clone)]
pub struct OracleLexicons {
    pub personas: PersonaLexicon,
    pub power: PowerLexicon,
    pub sentiment: SentimentLexicon,
    pub stopwords: Stopwords,
    pub names: NameLexicon,
    reference_words: HashSet<String>,
}

impl Default for OracleLexicons {
    fn default() -> Self {
        OracleLexicons::new(
            PersonaLexicon::default_lexicon(),
            PowerLexicon::default_lexicon(),
            SentimentLexicon::default_lexicon(),
            default_stopwords(),
            default_name_lexicon(),
        )
    }
}

impl OracleLexicons {
    pub fn new(
        personas: PersonaLexicon,
        power: PowerLexicon,
        sentiment: SentimentLexicon,
        stopwords: Stopwords,
        names: NameLexicon,
    ) -> Self {
        let reference_words = personas.reference_words();
        OracleLexicons {
            personas,
            power,
            sentiment,
            stopwords,
            names,
            reference_words,
        }
    }

    /// Whether a lowercase word could be read as anything but neutral filler.
    pub fn collides(&self, word: &str) -> bool {
        self.stopwords.contains(word)
            || self.names.is_name(word)
            || self.names.common_noun_exclusions.contains(word)
            || self.sentiment.valence.contains_key(word)
            || self.sentiment.boosters.contains_key(word)
            || self.sentiment.negators.contains(word)
            || self.reference_words.contains(word)
            || self.power.lookup(word).is_some()
            || HONORIFICS.contains(&word)
            || RESERVED.contains(&word)
    }

    /// Lexicon verbs usable in scripted sentences: the past form resolves
    /// back to the lemma and neither form carries sentiment.
    pub fn script_verbs(&self, direction: PowerDirection) -> Vec<(String, String)> {
        self.power
            .entries()
            .filter(|(_, d)| *d == direction)
            .filter_map(|(lemma, _)| {
                let past = past_tense(lemma);
                let neutral = [lemma, past.as_str()].iter().all(|w| {
                    self.sentiment.valence_of(w).is_none()
                        && !self.sentiment.boosters.contains_key(*w)
                        && !self.sentiment.negators.contains(*w)
                });
                let resolves = self.power.lookup(&past).map(|(l, _)| l) == Some(lemma);
                let plain = !self.reference_words.contains(&past) && !RESERVED.contains(&past.as_str());
                (neutral && resolves && plain).then(|| (lemma.to_string(), past))
            })
            .collect()
    }

    /// Sentiment words of a sign with |valence| >= 1 that cannot trigger any
    /// other rule.
    pub fn sentiment_words(&self, positive: bool) -> Vec<String> {
        let mut words: Vec<String> = self
            .sentiment
            .valence
            .iter()
            .filter(|(w, &v)| if positive { v >= 1.0 } else { v <= -1.0 } && w.chars().all(|c| c.is_ascii_lowercase()))
            .map(|(w, _)| w.clone())
            .filter(|w| {
                !self.sentiment.boosters.contains_key(w)
                    && !self.sentiment.negators.contains(w)
                    && !self.reference_words.contains(w)
                    && self.power.lookup(w).is_none()
            })
            .collect();
        words.sort();
        words
    }
}

const IRREGULAR_PAST: &[(&str, &str)] = &[
    ("meet", "met"),
    ("feed", "fed"),
    ("hold", "held"),
    ("lead", "led"),
    ("tell", "told"),
    ("teach", "taught"),
    ("seek", "sought"),
    ("drive", "drove"),
    ("forbid", "forbade"),
    ("bring", "brought"),
    ("give", "gave"),
    ("take", "took"),
];

fn is_vowel(c: u8) -> bool {
    VOWELS.contains(&c)
}

/// Simple past of a lemma.
pub fn past_tense(lemma: &str) -> String {
    if let Some((_, past)) = IRREGULAR_PAST.iter().find(|(l, _)| *l == lemma) {
        return past.to_string();
    }
    let b = lemma.as_bytes();
    let n = b.len();
    if lemma.ends_with('e') {
        return format!("{lemma}d");
    }
    if n >= 2 && b[n - 1] == b'y' && !is_vowel(b[n - 2]) {
        return format!("{}ied", &lemma[..n - 1]);
    }
    // Short consonant-vowel-consonant verbs double the final consonant.
    if (3..=4).contains(&n) && !is_vowel(b[n - 1]) && !b"wxy".contains(&b[n - 1]) && is_vowel(b[n - 2]) && !is_vowel(b[n - 3]) {
        return format!("{lemma}{}ed", b[n - 1] as char);
    }
    format!("{lemma}ed")
}

fn random_word<R: Rng>(rng: &mut R) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    }
    w
}

/// `count` distinct consonant-vowel words that collide with no lexicon.
pub fn word_pool<R: Rng>(rng: &mut R, count: usize, lexicons: &OracleLexicons) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count * 50 + 10_000 {
            return Err(Error::InvalidInput(format!("could not draw {count} distinct synthetic words")));
        }
        let w = random_word(rng);
        if seen.insert(w.clone()) && !lexicons.collides(&w) {
            out.push(w);
        }
    }
    Ok(out)
}

pub fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}
