//! Persona references, per-case rosters, and normalization to sentinels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::corpus::thousands;
use crate::defaults;
use crate::error::{Error, Result};

/// Titles that are absorbed into a following roster name.
pub const HONORIFICS: &[&str] = &["ms", "mr", "mrs", "miss", "dr"];

pub fn persona_sentinel(persona: &str) -> String {
    format!("⟨{}⟩", persona.to_uppercase())
}

pub fn is_persona_sentinel(token: &str) -> bool {
    token.starts_with('⟨') && token.ends_with('⟩') && token.chars().count() > 2
}

/// Lowercase sentence tokens with outer punctuation removed. Stopwords are
/// kept: the power heuristics need "by", "was" and friends.
pub fn persona_tokens(sentence: &str) -> Vec<String> {
    crate::sentiment::sentence_tokens(sentence)
        .into_iter()
        .map(str::to_lowercase)
        .collect()
}

fn match_key(token: &str) -> &str {
    token
        .strip_suffix("'s")
        .or_else(|| token.strip_suffix("’s"))
        .unwrap_or(token)
}

fn reference_tokens(reference: &str) -> Vec<String> {
    persona_tokens(reference)
}

/// Persona name -> reference strings, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct OrderedPersonas(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for OrderedPersonas {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedPersonas;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping persona names to reference lists")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<String>>()? {
                    out.push((k, v));
                }
                Ok(OrderedPersonas(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaLexicon {
    personas: Vec<String>,
    references: Vec<Vec<String>>,
    index: HashMap<Vec<String>, usize>,
    max_len: usize,
}

impl PersonaLexicon {
    pub fn new(entries: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut personas = Vec::new();
        let mut references = Vec::new();
        let mut index: HashMap<Vec<String>, usize> = HashMap::new();
        let mut max_len = 0;
        for (pi, (persona, refs)) in entries.into_iter().enumerate() {
            let persona = persona.trim().to_lowercase();
            if persona.is_empty() || !persona.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                return Err(Error::Lexicon(format!("persona name {persona:?} must be lowercase letters and underscores")));
            }
            if personas.contains(&persona) {
                return Err(Error::Lexicon(format!("persona {persona} listed twice")));
            }
            let mut kept = Vec::new();
            for r in refs {
                let toks = reference_tokens(&r);
                if toks.is_empty() {
                    continue;
                }
                if let Some(&other) = index.get(&toks) {
                    if other != pi {
                        return Err(Error::Lexicon(format!(
                            "reference {r:?} belongs to both {} and {persona}",
                            personas[other]
                        )));
                    }
                    continue;
                }
                max_len = max_len.max(toks.len());
                index.insert(toks, pi);
                kept.push(r.trim().to_lowercase());
            }
            personas.push(persona);
            references.push(kept);
        }
        Ok(PersonaLexicon {
            personas,
            references,
            index,
            max_len,
        })
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let ordered: OrderedPersonas = serde_json::from_str(text)?;
        Self::new(ordered.0)
    }

    pub fn default_lexicon() -> Self {
        Self::parse_json(defaults::PERSONAS).expect("built-in persona lexicon is valid")
    }

    pub fn personas(&self) -> &[String] {
        &self.personas
    }

    pub fn references(&self, persona: &str) -> Option<&[String]> {
        self.position(persona).map(|i| self.references[i].as_slice())
    }

    pub fn position(&self, persona: &str) -> Option<usize> {
        self.personas.iter().position(|p| p == persona)
    }

    /// Persona named by a sentinel token, if any.
    pub fn persona_of_sentinel(&self, token: &str) -> Option<&str> {
        if !is_persona_sentinel(token) {
            return None;
        }
        let inner = token.trim_start_matches('⟨').trim_end_matches('⟩').to_lowercase();
        self.personas.iter().find(|p| **p == inner).map(String::as_str)
    }

    /// Whether a token sequence is a known reference.
    pub fn is_reference(&self, tokens: &[String]) -> bool {
        self.index.contains_key(tokens)
    }

    /// Every single token that appears inside any reference.
    pub fn reference_words(&self) -> HashSet<String> {
        self.index.keys().flatten().cloned().collect()
    }
}

/// Proper names per case, each mapped to one persona.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roster {
    cases: BTreeMap<String, CaseRoster>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseRoster {
    names: HashMap<Vec<String>, usize>,
    max_len: usize,
}

impl CaseRoster {
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct RosterRow {
    case_id: String,
    name: String,
    persona: String,
}

impl Roster {
    /// Read `case_id,name,persona` rows. A name mapped to two personas in the
    /// same case, an unknown persona, or a name that is also a common-noun
    /// reference or exclusion is an error.
    pub fn from_csv<R: Read>(source: R, lexicon: &PersonaLexicon, exclusions: &HashSet<String>) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let mut roster = Roster::default();
        for (i, row) in reader.deserialize::<RosterRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Format(format!("roster line {line}: {e}")))?;
            roster.insert(&row.case_id, &row.name, &row.persona, lexicon, exclusions)
                .map_err(|e| Error::InvalidInput(format!("roster line {line}: {e}")))?;
        }
        Ok(roster)
    }

    pub fn insert(
        &mut self,
        case_id: &str,
        name: &str,
        persona: &str,
        lexicon: &PersonaLexicon,
        exclusions: &HashSet<String>,
    ) -> Result<()> {
        let persona = persona.trim().to_lowercase();
        let pi = lexicon
            .position(&persona)
            .ok_or_else(|| Error::InvalidInput(format!("unknown persona {persona:?}")))?;
        let toks = reference_tokens(name);
        if toks.is_empty() {
            return Err(Error::InvalidInput("empty roster name".into()));
        }
        if lexicon.is_reference(&toks) {
            return Err(Error::InvalidInput(format!("roster name {name:?} is also a persona reference")));
        }
        if let Some(t) = toks.iter().find(|t| exclusions.contains(*t)) {
            return Err(Error::InvalidInput(format!("roster name {name:?} contains common noun {t:?}")));
        }
        let case = self.cases.entry(case_id.to_string()).or_default();
        if let Some(&other) = case.names.get(&toks) {
            if other != pi {
                return Err(Error::InvalidInput(format!(
                    "name {name:?} in case {case_id} maps to both {} and {persona}",
                    lexicon.personas()[other]
                )));
            }
            return Ok(());
        }
        case.max_len = case.max_len.max(toks.len());
        case.names.insert(toks, pi);
        Ok(())
    }

    pub fn case(&self, case_id: &str) -> Option<&CaseRoster> {
        self.cases.get(case_id)
    }

    pub fn len(&self) -> usize {
        self.cases.values().map(|c| c.names.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn longest_match(tokens: &[String], start: usize, max_len: usize, table: &HashMap<Vec<String>, usize>) -> Option<(usize, usize)> {
    let avail = tokens.len() - start;
    for len in (1..=max_len.min(avail)).rev() {
        let mut key: Vec<String> = tokens[start..start + len].to_vec();
        if let Some(last) = key.last_mut() {
            *last = match_key(last).to_string();
        }
        if let Some(&p) = table.get(&key) {
            return Some((len, p));
        }
    }
    None
}

/// Replace persona references and roster names with persona sentinels.
/// Multiword references win over shorter ones, roster names win ties, and an
/// honorific directly before a roster name is absorbed into the sentinel.
pub fn normalize_personas(tokens: &[String], lexicon: &PersonaLexicon, roster: Option<&CaseRoster>) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let named = |at: usize| roster.and_then(|r| longest_match(tokens, at, r.max_len, &r.names));
        if HONORIFICS.contains(&tokens[i].as_str()) && i + 1 < tokens.len() {
            if let Some((len, p)) = named(i + 1) {
                out.push(persona_sentinel(&lexicon.personas[p]));
                i += 1 + len;
                continue;
            }
        }
        let by_name = named(i);
        let by_ref = longest_match(tokens, i, lexicon.max_len, &lexicon.index);
        let best = match (by_name, by_ref) {
            (Some(n), Some(r)) => Some(if r.0 > n.0 { r } else { n }),
            (n, r) => n.or(r),
        };
        match best {
            Some((len, p)) => {
                out.push(persona_sentinel(&lexicon.personas[p]));
                i += len;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Mention counts for one persona across a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaStat {
    pub persona: String,
    pub total_mentions: u64,
    pub documents_with_mentions: usize,
    /// Mean over documents with at least one mention; 0 when there are none.
    pub mean_mentions_per_document: f64,
    pub never_mentioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaReport {
    pub n_documents: usize,
    pub personas: Vec<PersonaStat>,
}

/// Summarize per-document mention counts, indexed like `lexicon.personas()`.
pub fn persona_stats(mentions: &[Vec<u64>], lexicon: &PersonaLexicon) -> PersonaReport {
    let personas = lexicon
        .personas()
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let total: u64 = mentions.iter().map(|m| m[p]).sum();
            let docs = mentions.iter().filter(|m| m[p] > 0).count();
            PersonaStat {
                persona: name.clone(),
                total_mentions: total,
                documents_with_mentions: docs,
                mean_mentions_per_document: if docs == 0 { 0.0 } else { total as f64 / docs as f64 },
                never_mentioned: docs == 0,
            }
        })
        .collect();
    PersonaReport {
        n_documents: mentions.len(),
        personas,
    }
}

/// Count sentinel occurrences per persona in normalized sentences.
pub fn count_mentions(sentences: &[Vec<String>], lexicon: &PersonaLexicon) -> Vec<u64> {
    let mut counts = vec![0u64; lexicon.personas().len()];
    for tok in sentences.iter().flatten() {
        if let Some(p) = lexicon.persona_of_sentinel(tok).and_then(|p| lexicon.position(p)) {
            counts[p] += 1;
        }
    }
    counts
}

/// Personas mentioned in at least `min_documents` documents, in lexicon order.
pub fn filter_rare_personas(report: &PersonaReport, min_documents: usize) -> Vec<String> {
    if min_documents > report.n_documents {
        log::warn!(
            "persona threshold {min_documents} exceeds the {} documents; every persona is dropped",
            report.n_documents
        );
    }
    let kept: Vec<String> = report
        .personas
        .iter()
        .filter(|s| s.documents_with_mentions >= min_documents)
        .map(|s| s.persona.clone())
        .collect();
    for s in report.personas.iter().filter(|s| s.documents_with_mentions < min_documents) {
        log::info!("dropping persona {} ({} documents)", s.persona, s.documents_with_mentions);
    }
    kept
}

fn display_name(persona: &str) -> String {
    let mut s = persona.replace('_', " ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

impl PersonaReport {
    pub const TABLE_HEADER: [&'static str; 5] = [
        "Persona",
        "References",
        "Total Mentions",
        "Casenotes containing Mentions",
        "Average Mentions per Casenote",
    ];

    /// Rows in the layout of the persona table.
    pub fn table_rows(&self, lexicon: &PersonaLexicon) -> Vec<[String; 5]> {
        self.personas
            .iter()
            .map(|s| {
                let mut refs: Vec<String> = lexicon.references(&s.persona).unwrap_or(&[]).to_vec();
                refs.push("Proper Name".into());
                [
                    display_name(&s.persona),
                    refs.join(", "),
                    thousands(s.total_mentions),
                    s.documents_with_mentions.to_string(),
                    format!("{:.2}", s.mean_mentions_per_document),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn honorific_absorbed_into_roster_name() {
        let lex = PersonaLexicon::default_lexicon();
        let mut roster = Roster::default();
        roster.insert("c1", "Jones", "birth_parent", &lex, &HashSet::new()).unwrap();
        let out = normalize_personas(&toks("ms jones met fps"), &lex, roster.case("c1"));
        assert_eq!(out, vec!["⟨BIRTH_PARENT⟩", "met", "⟨CW_STAFF⟩"]);
    }

    #[test]
    fn table_references() {
        let lex = PersonaLexicon::default_lexicon();
        assert_eq!(normalize_personas(&toks("grandmother"), &lex, None), vec!["⟨SUPPORT_SYSTEM⟩"]);
        assert_eq!(normalize_personas(&toks("sofa"), &lex, None), vec!["sofa"]);
        assert_eq!(normalize_personas(&toks("this writer called"), &lex, None), vec!["⟨CW_STAFF⟩", "called"]);
    }

    #[test]
    fn longest_reference_wins() {
        let lex = PersonaLexicon::default_lexicon();
        let out = normalize_personas(&toks("the foster mother and mother"), &lex, None);
        assert_eq!(out, vec!["the", "⟨FOSTER_PARENT⟩", "and", "⟨BIRTH_PARENT⟩"]);
        let out = normalize_personas(&toks("assistant district attorney da"), &lex, None);
        assert_eq!(out, vec!["⟨LEGAL_PARTIES⟩", "⟨LEGAL_PARTIES⟩"]);
    }

    #[test]
    fn possessive_reference() {
        let lex = PersonaLexicon::default_lexicon();
        assert_eq!(normalize_personas(&toks("mother's home"), &lex, None), vec!["⟨BIRTH_PARENT⟩", "home"]);
    }

    #[test]
    fn file_order_kept_and_overlap_rejected() {
        let lex = PersonaLexicon::parse_json(r#"{"zeta": ["z"], "alpha": ["a"]}"#).unwrap();
        assert_eq!(lex.personas(), ["zeta", "alpha"]);
        assert!(PersonaLexicon::parse_json(r#"{"x": ["Mom"], "y": ["mom"]}"#).is_err());
    }

    #[test]
    fn ambiguous_roster_rejected() {
        let lex = PersonaLexicon::default_lexicon();
        let csv = "case_id,name,persona\nc1,Pam,foster_parent\nc1,Pam,child\n";
        let err = Roster::from_csv(csv.as_bytes(), &lex, &HashSet::new()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let ok = "case_id,name,persona\nc1,Pam,foster_parent\nc2,Pam,child\n";
        assert_eq!(Roster::from_csv(ok.as_bytes(), &lex, &HashSet::new()).unwrap().len(), 2);
    }

    #[test]
    fn roster_rejects_common_nouns() {
        let lex = PersonaLexicon::default_lexicon();
        let excl: HashSet<String> = ["hope".to_string()].into();
        let mut r = Roster::default();
        assert!(r.insert("c", "Hope", "child", &lex, &excl).is_err());
        assert!(r.insert("c", "Mother", "child", &lex, &excl).is_err());
        assert!(r.insert("c", "Sarah", "nobody", &lex, &excl).is_err());
    }

    #[test]
    fn stats_and_filter() {
        let lex = PersonaLexicon::default_lexicon();
        let n = lex.personas().len();
        let mut docs = vec![vec![0u64; n]; 3];
        docs[0][0] = 4;
        docs[1][0] = 2;
        docs[2][2] = 1;
        let report = persona_stats(&docs, &lex);
        assert_eq!(report.personas[0].total_mentions, 6);
        assert_eq!(report.personas[0].documents_with_mentions, 2);
        assert_eq!(report.personas[0].mean_mentions_per_document, 3.0);
        assert!(report.personas[1].never_mentioned);
        assert_eq!(report.personas[1].mean_mentions_per_document, 0.0);
        assert_eq!(filter_rare_personas(&report, 0).len(), n);
        assert_eq!(filter_rare_personas(&report, 2), vec!["birth_parent"]);
        assert!(filter_rare_personas(&report, 4).is_empty());
    }

    #[test]
    fn published_counts_filter() {
        // Casenotes-with-mentions column of the persona table.
        let lex = PersonaLexicon::default_lexicon();
        let counts = [281usize, 277, 262, 148, 125, 96, 89, 45];
        let personas = lex
            .personas()
            .iter()
            .zip(counts)
            .map(|(p, d)| PersonaStat {
                persona: p.clone(),
                total_mentions: d as u64,
                documents_with_mentions: d,
                mean_mentions_per_document: 1.0,
                never_mentioned: false,
            })
            .collect();
        let report = PersonaReport { n_documents: 310, personas };
        let kept = filter_rare_personas(&report, 100);
        assert_eq!(kept, ["birth_parent", "cw_staff", "child", "foster_parent", "support_system"]);
    }

    #[test]
    fn table_layout() {
        let lex = PersonaLexicon::default_lexicon();
        let n = lex.personas().len();
        let mut docs = vec![vec![0u64; n]; 1];
        docs[0][0] = 29_545;
        let rows = persona_stats(&docs, &lex).table_rows(&lex);
        assert_eq!(rows[0][0], "Birth parent");
        assert_eq!(rows[0][2], "29,545");
        assert!(rows[0][1].ends_with("Proper Name"));
        assert_eq!(rows[0][4], "29545.00");
    }
}
