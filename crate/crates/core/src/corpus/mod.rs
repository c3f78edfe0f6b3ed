//! Corpus ingestion: load casenote records, collate them per case, clean and
//! anonymize the text, and summarize the result.

mod records;
mod text;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};

pub use records::{
    collate_by_case, format_timestamp, load_records, parse_timestamp, write_records_csv,
    CollatedCase, Collation, LoadOutcome, RawRecord, RecordFormat, RowError,
};
pub use text::{
    anonymize, clean_text, is_sentinel, parse_word_list, NameLexicon, Stopwords, NAME_SENTINEL,
    NUM_SENTINEL,
};

/// One case's collated, cleaned and anonymized token stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseDocument {
    pub case_id: String,
    pub interaction_count: usize,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub word_count: usize,
    /// Index into `tokens` where each source record starts.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub record_offsets: Vec<usize>,
}

impl CaseDocument {
    pub fn new(case_id: impl Into<String>, interaction_count: usize, tokens: Vec<String>) -> Self {
        CaseDocument {
            case_id: case_id.into(),
            interaction_count,
            word_count: tokens.len(),
            tokens,
            record_offsets: Vec::new(),
        }
    }
}

impl AsRef<[String]> for CaseDocument {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

pub fn default_stopwords() -> Stopwords {
    Stopwords::parse(defaults::STOPWORDS)
}

pub fn default_name_lexicon() -> NameLexicon {
    NameLexicon::new(
        parse_word_list(defaults::SURNAMES),
        parse_word_list(defaults::GIVEN_NAMES),
        parse_word_list(defaults::NAME_EXCLUSIONS),
    )
}

/// Clean and anonymize one collated case, record by record.
pub fn prepare_document(
    case: &CollatedCase,
    stopwords: &Stopwords,
    names: &NameLexicon,
) -> CaseDocument {
    let mut tokens = Vec::new();
    let mut record_offsets = Vec::with_capacity(case.records.len());
    for record in &case.records {
        record_offsets.push(tokens.len());
        tokens.extend(anonymize(&clean_text(record, stopwords), names));
    }
    CaseDocument {
        case_id: case.case_id.clone(),
        interaction_count: case.interaction_count,
        word_count: tokens.len(),
        tokens,
        record_offsets,
    }
}

pub fn prepare_documents(
    cases: &[CollatedCase],
    stopwords: &Stopwords,
    names: &NameLexicon,
) -> Vec<CaseDocument> {
    cases
        .par_iter()
        .map(|c| prepare_document(c, stopwords, names))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_documents: usize,
    pub long_threshold: usize,
    pub n_long_documents: usize,
    pub mean_words: f64,
    pub max_words: usize,
    pub vocab_size: usize,
}

/// Decimal digits grouped by commas: 44407 -> "44,407".
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl CorpusStats {
    /// Rows in the layout of the corpus statistics table: (metric, value).
    pub fn table_rows(&self) -> Vec<(String, String)> {
        vec![
            (
                format!("Number of casenotes with more than {} words", self.long_threshold),
                thousands(self.n_long_documents as u64),
            ),
            (
                "Average number of words per casenote".into(),
                thousands(self.mean_words.round() as u64),
            ),
            (
                "Number of words in longest casenote".into(),
                thousands(self.max_words as u64),
            ),
            ("Number of unique words".into(), thousands(self.vocab_size as u64)),
        ]
    }
}

pub fn corpus_stats(documents: &[CaseDocument], long_threshold: usize) -> Result<CorpusStats> {
    if documents.is_empty() {
        return Err(Error::InvalidInput("corpus statistics need at least one document".into()));
    }
    let mut vocab: HashSet<&str> = HashSet::new();
    let mut total = 0usize;
    let mut max_words = 0usize;
    let mut n_long = 0usize;
    for doc in documents {
        let n = doc.tokens.len();
        total += n;
        max_words = max_words.max(n);
        if n > long_threshold {
            n_long += 1;
        }
        vocab.extend(doc.tokens.iter().map(String::as_str));
    }
    Ok(CorpusStats {
        n_documents: documents.len(),
        long_threshold,
        n_long_documents: n_long,
        mean_words: total as f64 / documents.len() as f64,
        max_words,
        vocab_size: vocab.len(),
    })
}
