//! Rule-augmented lexicon sentiment: sentence splitting, compound scores in
//! [-1, 1], three-way classification, and corpus summaries.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_sentinel, parse_word_list, CollatedCase};
use crate::defaults;
use crate::error::{Error, Result};

/// Multiplier applied to a valence preceded by a negation cue.
pub const NEGATION_SCALAR: f64 = -0.74;
/// How many preceding tokens a negator or booster reaches.
pub const RULE_WINDOW: usize = 3;
pub const CAPS_SCALAR: f64 = 1.5;
/// Added per trailing exclamation mark, in the direction of the sum.
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 4;
/// Normalization constant in s / sqrt(s^2 + alpha).
pub const NORMALIZATION_ALPHA: f64 = 15.0;
pub const CLASS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    pub valence: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negators: HashSet<String>,
}

fn parse_tsv_scores(text: &str, what: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(token), Some(score)) = (parts.next(), parts.next()) else {
            return Err(Error::Lexicon(format!("{what} line {}: expected token<TAB>value", i + 1)));
        };
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::Lexicon(format!("{what} line {}: bad number {score:?}", i + 1)))?;
        if !score.is_finite() {
            return Err(Error::Lexicon(format!("{what} line {}: non-finite value", i + 1)));
        }
        out.insert(token.trim().to_lowercase(), score);
    }
    Ok(out)
}

impl SentimentLexicon {
    pub fn parse(valence_tsv: &str, boosters_tsv: &str, negators: &str) -> Result<Self> {
        Ok(SentimentLexicon {
            valence: parse_tsv_scores(valence_tsv, "valence lexicon")?,
            boosters: parse_tsv_scores(boosters_tsv, "booster list")?,
            negators: parse_word_list(negators).into_iter().collect(),
        })
    }

    pub fn default_lexicon() -> Self {
        Self::parse(defaults::SENTIMENT_VALENCE, defaults::SENTIMENT_BOOSTERS, defaults::NEGATORS)
            .expect("bundled sentiment lexicon parses")
    }

    pub fn valence_of(&self, token: &str) -> Option<f64> {
        self.valence.get(&token.to_lowercase()).copied()
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "jr", "sr", "st", "prof", "vs", "etc", "no", "approx", "dept", "appt",
    "mt", "ft", "e.g", "i.e", "sgt", "lt", "capt", "rev",
];

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Split text into sentences at `.`, `!` or `?` followed by whitespace and an
/// uppercase letter, or by the end of the text. Honorifics and common
/// abbreviations ("Ms.", "Dr.") and single-letter initials do not end a
/// sentence. Returned slices are trimmed; only whitespace lies between them.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && (matches!(chars[j].1, '.' | '!' | '?') || is_closing(chars[j].1)) {
            j += 1;
        }
        let end_byte = chars.get(j).map_or(text.len(), |&(b, _)| b);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let at_end = k == chars.len();
        let boundary = if at_end {
            true
        } else if k > j && chars[k].1.is_uppercase() {
            !(c == '.' && j == i + 1 && is_abbreviation(&text[start..chars[i].0]))
        } else {
            false
        };
        if boundary {
            let sentence = text[start..end_byte].trim();
            if !sentence.is_empty() {
                out.push(sentence);
            }
            start = chars.get(k).map_or(text.len(), |&(b, _)| b);
        }
        i = j.max(i + 1);
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    let single_initial = word.chars().count() == 1 && word.chars().all(char::is_uppercase);
    single_initial || ABBREVIATIONS.contains(&lower.as_str())
}

/// Whitespace tokens with surrounding punctuation removed; case is kept.
/// Tokens without any letter or digit are dropped.
pub fn sentence_tokens(sentence: &str) -> Vec<&str> {
    sentence
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .collect()
}

fn trailing_exclamations(sentence: &str) -> usize {
    sentence
        .trim_end()
        .chars()
        .rev()
        .take_while(|c| matches!(c, '!' | '?' | '.') || is_closing(*c))
        .filter(|&c| c == '!')
        .count()
}

fn is_all_caps(token: &str) -> bool {
    token.chars().filter(|c| c.is_alphabetic()).count() >= 2 && !token.chars().any(char::is_lowercase)
}

/// Per-token valences after the caps, booster and negation rules.
pub fn token_valences(tokens: &[&str], lexicon: &SentimentLexicon) -> Vec<f64> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    (0..tokens.len())
        .map(|i| {
            if is_sentinel(tokens[i]) {
                return 0.0;
            }
            let Some(mut v) = lexicon.valence.get(&lowered[i]).copied().filter(|v| *v != 0.0) else {
                return 0.0;
            };
            if is_all_caps(tokens[i]) {
                v *= CAPS_SCALAR;
            }
            let window = i.saturating_sub(RULE_WINDOW)..i;
            for j in window.clone() {
                if let Some(inc) = lexicon.boosters.get(&lowered[j]) {
                    v += v.signum() * inc;
                }
            }
            if window.clone().any(|j| lexicon.negators.contains(&lowered[j])) {
                v *= NEGATION_SCALAR;
            }
            v
        })
        .collect()
}

/// Raw rule-adjusted sum before normalization.
pub fn raw_sentiment_sum(tokens: &[&str], exclamations: usize, lexicon: &SentimentLexicon) -> f64 {
    let s: f64 = token_valences(tokens, lexicon).iter().sum();
    if s == 0.0 {
        return 0.0;
    }
    s + s.signum() * EXCLAMATION_INCREMENT * exclamations.min(MAX_EXCLAMATIONS) as f64
}

pub fn normalize_compound(s: f64) -> f64 {
    s / (s * s + NORMALIZATION_ALPHA).sqrt()
}

/// Compound score of a token sequence with `exclamations` trailing marks.
pub fn score_tokens(tokens: &[&str], exclamations: usize, lexicon: &SentimentLexicon) -> f64 {
    normalize_compound(raw_sentiment_sum(tokens, exclamations, lexicon))
}

/// Compound score of one sentence of raw text.
pub fn score_sentence(sentence: &str, lexicon: &SentimentLexicon) -> f64 {
    score_tokens(&sentence_tokens(sentence), trailing_exclamations(sentence), lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Positive,
    Negative,
    Neutral,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [SentimentClass::Positive, SentimentClass::Negative, SentimentClass::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentClass::Positive => "positive",
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
        }
    }
}

pub fn classify(compound: f64) -> SentimentClass {
    if compound >= CLASS_THRESHOLD {
        SentimentClass::Positive
    } else if compound <= -CLASS_THRESHOLD {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSentiment {
    pub case_id: String,
    pub sentence_idx: usize,
    pub token_count: usize,
    pub compound: f64,
    pub class: SentimentClass,
}

/// Score every sentence of one case with at least `min_tokens` tokens.
/// Sentence indices count all sentences, scored or not.
pub fn score_case(case_id: &str, text: &str, lexicon: &SentimentLexicon, min_tokens: usize) -> (Vec<SentenceSentiment>, usize) {
    let mut scored = Vec::new();
    let mut skipped = 0;
    for (idx, sentence) in split_sentences(text).into_iter().enumerate() {
        let tokens = sentence_tokens(sentence);
        if tokens.len() < min_tokens || tokens.is_empty() {
            skipped += 1;
            continue;
        }
        let compound = score_tokens(&tokens, trailing_exclamations(sentence), lexicon);
        scored.push(SentenceSentiment {
            case_id: case_id.to_string(),
            sentence_idx: idx,
            token_count: tokens.len(),
            compound,
            class: classify(compound),
        });
    }
    (scored, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentSummary {
    pub min_tokens: usize,
    pub scored_sentences: usize,
    pub excluded_sentences: usize,
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
    pub positive_pct: f64,
    pub negative_pct: f64,
    pub neutral_pct: f64,
}

impl SentimentSummary {
    pub fn from_sentences(sentences: &[SentenceSentiment], excluded: usize, min_tokens: usize) -> Self {
        let count = |c: SentimentClass| sentences.iter().filter(|s| s.class == c).count();
        let (positive, negative, neutral) = (
            count(SentimentClass::Positive),
            count(SentimentClass::Negative),
            count(SentimentClass::Neutral),
        );
        let n = sentences.len();
        let pct = |c: usize| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 };
        SentimentSummary {
            min_tokens,
            scored_sentences: n,
            excluded_sentences: excluded,
            positive,
            negative,
            neutral,
            positive_pct: pct(positive),
            negative_pct: pct(negative),
            neutral_pct: pct(neutral),
        }
    }

    pub fn share(&self, class: SentimentClass) -> f64 {
        let pct = match class {
            SentimentClass::Positive => self.positive_pct,
            SentimentClass::Negative => self.negative_pct,
            SentimentClass::Neutral => self.neutral_pct,
        };
        pct / 100.0
    }

    /// Rows in the layout of the sentiment table: (class, count, percentage).
    pub fn table_rows(&self) -> Vec<(String, String, String)> {
        [
            ("Positive", self.positive, self.positive_pct),
            ("Negative", self.negative, self.negative_pct),
            ("Neutral", self.neutral, self.neutral_pct),
        ]
        .into_iter()
        .map(|(name, c, p)| (name.to_string(), c.to_string(), format!("{p:.2}%")))
        .collect()
    }
}

/// Score all cases and summarize class shares.
pub fn corpus_sentiment(
    cases: &[CollatedCase],
    lexicon: &SentimentLexicon,
    min_tokens: usize,
) -> (Vec<SentenceSentiment>, SentimentSummary) {
    let mut all = Vec::new();
    let mut excluded = 0;
    for case in cases {
        let (scored, skipped) = score_case(&case.case_id, &case.text(), lexicon, min_tokens);
        all.extend(scored);
        excluded += skipped;
    }
    let summary = SentimentSummary::from_sentences(&all, excluded, min_tokens);
    (all, summary)
}

pub fn write_sentences_csv<W: Write>(sentences: &[SentenceSentiment], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["case_id", "sentence_idx", "token_count", "compound", "class"])?;
    for s in sentences {
        w.write_record([
            s.case_id.clone(),
            s.sentence_idx.to_string(),
            s.token_count.to_string(),
            format!("{:.4}", s.compound),
            s.class.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sentiment sink>", e))?;
    Ok(())
}
