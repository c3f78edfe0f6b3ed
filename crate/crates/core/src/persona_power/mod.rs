//! Persona normalization and mention statistics, verb lemmatization, and
//! connotation-frame power scoring between personas.

mod lemma;
mod persona;
mod power;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CollatedCase;
use crate::sentiment::split_sentences;

pub use lemma::lemmatize_verb;
pub use persona::{
    count_mentions, filter_rare_personas, is_persona_sentinel, normalize_personas, persona_sentinel,
    persona_stats, persona_tokens, CaseRoster, PersonaLexicon, PersonaReport, PersonaStat, Roster,
    HONORIFICS,
};
pub use power::{
    extract_svo, score_power, write_matrix_csv, write_scores_csv, PowerDirection, PowerLedger,
    PowerLexicon, SvoTriple, DEFAULT_WINDOW,
};

pub const DEFAULT_MIN_DOCUMENTS: usize = 100;

/// Persona mentions and extracted triples for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePersonas {
    pub case_id: String,
    /// Indexed like `PersonaLexicon::personas`.
    pub mentions: Vec<u64>,
    pub triples: Vec<SvoTriple>,
}

/// Split a case's raw text into sentences, normalize personas, count
/// mentions and extract triples.
pub fn analyze_case(
    case_id: &str,
    text: &str,
    personas: &PersonaLexicon,
    roster: &Roster,
    power: &PowerLexicon,
    window: usize,
) -> CasePersonas {
    let case_roster = roster.case(case_id);
    let sentences: Vec<Vec<String>> = split_sentences(text)
        .into_iter()
        .map(|s| normalize_personas(&persona_tokens(s), personas, case_roster))
        .collect();
    let triples = sentences
        .iter()
        .enumerate()
        .flat_map(|(i, toks)| extract_svo(toks, i, personas, power, window))
        .collect();
    CasePersonas {
        case_id: case_id.to_string(),
        mentions: count_mentions(&sentences, personas),
        triples,
    }
}

pub fn analyze_cases(
    cases: &[CollatedCase],
    personas: &PersonaLexicon,
    roster: &Roster,
    power: &PowerLexicon,
    window: usize,
) -> Vec<CasePersonas> {
    cases
        .par_iter()
        .map(|c| analyze_case(&c.case_id, &c.text(), personas, roster, power, window))
        .collect()
}

/// One ledger per group in `group_order`, reduced in case order. Cases
/// without a group are ignored.
pub fn ledgers_by_group(
    cases: &[CasePersonas],
    cohorts: &BTreeMap<String, String>,
    group_order: &[String],
    personas: &PersonaLexicon,
    power: &PowerLexicon,
    retained: &[String],
) -> Vec<PowerLedger> {
    let mut ledgers: Vec<PowerLedger> = group_order.iter().map(|g| PowerLedger::empty(g.clone(), retained)).collect();
    let retained_idx: Vec<usize> = retained.iter().filter_map(|p| personas.position(p)).collect();
    for case in cases {
        let Some(g) = cohorts.get(&case.case_id).and_then(|g| group_order.iter().position(|x| x == g)) else {
            continue;
        };
        let ledger = &mut ledgers[g];
        for (slot, &p) in retained_idx.iter().enumerate() {
            ledger.mentions[slot] += case.mentions[p];
        }
        for t in &case.triples {
            ledger.add(t, power);
        }
    }
    ledgers
}
