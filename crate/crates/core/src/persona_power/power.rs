//! Directional power verbs, windowed subject-verb-object extraction, and the
//! per-group power ledger.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::lemma::{lemmatize_verb, undouble};
use super::persona::PersonaLexicon;
use crate::defaults;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 6;

const BE_FORMS: &[&str] = &["am", "is", "are", "was", "were", "be", "been", "being"];
/// Skipped between "by" and the passive agent.
const DETERMINERS: &[&str] = &["the", "a", "an", "her", "his", "their"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerDirection {
    AgentPower,
    ThemePower,
    Equal,
}

impl PowerDirection {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_lowercase().as_str() {
            "agent_power" | "power_agent" | "agent" => Some(PowerDirection::AgentPower),
            "theme_power" | "power_theme" | "theme" => Some(PowerDirection::ThemePower),
            "equal" | "power_equal" => Some(PowerDirection::Equal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PowerDirection::AgentPower => "agent_power",
            PowerDirection::ThemePower => "theme_power",
            PowerDirection::Equal => "equal",
        }
    }

    /// Increment credited to the grammatical subject.
    pub fn subject_increment(self) -> f64 {
        match self {
            PowerDirection::AgentPower => 1.0,
            PowerDirection::ThemePower => -1.0,
            PowerDirection::Equal => 0.0,
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            PowerDirection::AgentPower => PowerDirection::ThemePower,
            PowerDirection::ThemePower => PowerDirection::AgentPower,
            PowerDirection::Equal => PowerDirection::Equal,
        }
    }
}

/// Lemma -> direction. Entries are lemmatized on load so inflected corpus
/// forms and base-form lexicon entries meet in the middle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PowerLexicon {
    entries: BTreeMap<String, PowerDirection>,
}

impl PowerLexicon {
    /// `lemma<TAB>direction` lines; `#` comments and blank lines are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t').map(str::trim).filter(|s| !s.is_empty());
            let (Some(verb), Some(dir)) = (parts.next(), parts.next()) else {
                return Err(Error::Lexicon(format!("power lexicon line {}: expected lemma<TAB>direction", i + 1)));
            };
            let direction = PowerDirection::parse(dir)
                .ok_or_else(|| Error::Lexicon(format!("power lexicon line {}: unknown direction {dir:?}", i + 1)))?;
            let lemma = lemmatize_verb(verb);
            if lemma.is_empty() {
                return Err(Error::Lexicon(format!("power lexicon line {}: empty lemma", i + 1)));
            }
            if let Some(prev) = entries.insert(lemma.clone(), direction) {
                if prev != direction {
                    return Err(Error::Lexicon(format!("power verb {lemma:?} has two directions")));
                }
            }
        }
        Ok(PowerLexicon { entries })
    }

    pub fn default_lexicon() -> Self {
        Self::parse_tsv(defaults::POWER_VERBS).expect("built-in power lexicon is valid")
    }

    pub fn from_entries<I: IntoIterator<Item = (String, PowerDirection)>>(entries: I) -> Self {
        PowerLexicon {
            entries: entries.into_iter().map(|(v, d)| (lemmatize_verb(&v), d)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn direction(&self, lemma: &str) -> Option<PowerDirection> {
        self.entries.get(lemma).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, PowerDirection)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Resolve a corpus token to a lexicon lemma. The rule lemmatizer is
    /// imperfect around silent "e" and doubled consonants, so near variants of
    /// the lemma are tried as well.
    pub fn lookup(&self, token: &str) -> Option<(&str, PowerDirection)> {
        let lemma = lemmatize_verb(token);
        let mut candidates = vec![lemma.clone(), format!("{lemma}e")];
        if let Some(s) = lemma.strip_suffix('e') {
            candidates.push(s.to_string());
        }
        if let Some(s) = undouble(&lemma) {
            candidates.push(s.to_string());
        } else if lemma.len() > 3 && lemma.ends_with("ll") {
            candidates.push(lemma[..lemma.len() - 1].to_string());
        }
        candidates
            .iter()
            .find_map(|c| self.entries.get_key_value(c.as_str()))
            .map(|(k, v)| (k.as_str(), *v))
    }

    /// Same verbs with agent and theme swapped; used for fault injection.
    pub fn inverted(&self) -> Self {
        PowerLexicon {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v.inverted())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SvoTriple {
    pub subject: String,
    pub verb: String,
    pub object: Option<String>,
    pub sentence_idx: usize,
}

fn nearest_left<'a>(tokens: &[String], from: usize, window: usize, personas: &'a PersonaLexicon) -> Option<(usize, &'a str)> {
    (from.saturating_sub(window)..from)
        .rev()
        .find_map(|j| personas.persona_of_sentinel(&tokens[j]).map(|p| (j, p)))
}

fn nearest_right<'a>(tokens: &[String], from: usize, window: usize, personas: &'a PersonaLexicon) -> Option<(usize, &'a str)> {
    (from + 1..tokens.len().min(from + window + 1)).find_map(|j| personas.persona_of_sentinel(&tokens[j]).map(|p| (j, p)))
}

/// Windowed subject-verb-object heuristic over one persona-normalized
/// sentence. Subject is the nearest persona sentinel to the left of a power
/// verb, object the nearest to the right. A be-form directly before the verb
/// with "by <persona>" after it marks a passive and swaps the roles.
pub fn extract_svo(
    tokens: &[String],
    sentence_idx: usize,
    personas: &PersonaLexicon,
    power: &PowerLexicon,
    window: usize,
) -> Vec<SvoTriple> {
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if personas.persona_of_sentinel(tok).is_some() {
            continue;
        }
        let Some((lemma, _)) = power.lookup(tok) else {
            continue;
        };
        let passive_agent = (i > 0 && BE_FORMS.contains(&tokens[i - 1].as_str()))
            .then(|| {
                (i + 1..tokens.len().min(i + window + 1)).find_map(|j| {
                    if tokens[j] != "by" {
                        return None;
                    }
                    let mut k = j + 1;
                    if tokens.get(k).is_some_and(|t| DETERMINERS.contains(&t.as_str())) {
                        k += 1;
                    }
                    tokens.get(k).and_then(|t| personas.persona_of_sentinel(t))
                })
            })
            .flatten();
        let (subject, object) = match passive_agent {
            Some(agent) => (Some(agent), nearest_left(tokens, i, window, personas).map(|(_, p)| p)),
            None => (
                nearest_left(tokens, i, window, personas).map(|(_, p)| p),
                nearest_right(tokens, i, window, personas).map(|(_, p)| p),
            ),
        };
        let Some(subject) = subject else {
            continue;
        };
        if object == Some(subject) {
            continue;
        }
        out.push(SvoTriple {
            subject: subject.to_string(),
            verb: lemma.to_string(),
            object: object.map(str::to_string),
            sentence_idx,
        });
    }
    out
}

/// Cumulative power for one group. `matrix[a][b]` accumulates the subject-side
/// increment of triples with subject `a` and object `b`; `solo` holds the
/// increments of subject-only triples. `scores = rowsum - colsum + solo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLedger {
    pub group: String,
    pub personas: Vec<String>,
    pub scores: Vec<f64>,
    pub solo: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    /// Two-role triples per unordered persona pair (symmetric).
    pub co_occurrence: Vec<Vec<u64>>,
    /// Persona mentions in the group, for frequency-normalized scores.
    pub mentions: Vec<u64>,
    pub triples_scored: usize,
    pub triples_skipped: usize,
}

impl PowerLedger {
    pub fn empty(group: impl Into<String>, personas: &[String]) -> Self {
        let n = personas.len();
        PowerLedger {
            group: group.into(),
            personas: personas.to_vec(),
            scores: vec![0.0; n],
            solo: vec![0.0; n],
            matrix: vec![vec![0.0; n]; n],
            co_occurrence: vec![vec![0; n]; n],
            mentions: vec![0; n],
            triples_scored: 0,
            triples_skipped: 0,
        }
    }

    fn index(&self, persona: &str) -> Option<usize> {
        self.personas.iter().position(|p| p == persona)
    }

    pub fn score(&self, persona: &str) -> Option<f64> {
        self.index(persona).map(|i| self.scores[i])
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<f64> {
        Some(self.matrix[self.index(row)?][self.index(col)?])
    }

    /// Add one triple. Returns false (and counts a skip) when a persona is not
    /// retained or the verb is not in the lexicon.
    pub fn add(&mut self, triple: &SvoTriple, power: &PowerLexicon) -> bool {
        let dir = power.direction(&triple.verb);
        let s = self.index(&triple.subject);
        let o = triple.object.as_deref().map(|o| self.index(o));
        let (Some(dir), Some(s)) = (dir, s) else {
            self.triples_skipped += 1;
            return false;
        };
        let inc = dir.subject_increment();
        match o {
            None => {
                self.solo[s] += inc;
                self.scores[s] += inc;
            }
            Some(None) => {
                self.triples_skipped += 1;
                return false;
            }
            Some(Some(o)) => {
                self.matrix[s][o] += inc;
                self.scores[s] += inc;
                self.scores[o] -= inc;
                self.co_occurrence[s][o] += 1;
                if s != o {
                    self.co_occurrence[o][s] += 1;
                }
            }
        }
        self.triples_scored += 1;
        true
    }

    /// `matrix / co_occurrence`, 0 where a pair never co-occurs.
    pub fn normalized_matrix(&self) -> Vec<Vec<f64>> {
        self.matrix
            .iter()
            .zip(&self.co_occurrence)
            .map(|(row, co)| row.iter().zip(co).map(|(v, &c)| if c == 0 { 0.0 } else { v / c as f64 }).collect())
            .collect()
    }

    /// Score divided by the persona's mention count in the group.
    pub fn normalized_scores(&self) -> Vec<f64> {
        self.scores
            .iter()
            .zip(&self.mentions)
            .map(|(s, &m)| if m == 0 { 0.0 } else { s / m as f64 })
            .collect()
    }

    /// Sum another ledger over the same personas into this one.
    pub fn merge(&mut self, other: &PowerLedger) -> Result<()> {
        if self.personas != other.personas {
            return Err(Error::InvalidInput("cannot merge ledgers over different personas".into()));
        }
        let n = self.personas.len();
        for i in 0..n {
            self.scores[i] += other.scores[i];
            self.solo[i] += other.solo[i];
            self.mentions[i] += other.mentions[i];
            for j in 0..n {
                self.matrix[i][j] += other.matrix[i][j];
                self.co_occurrence[i][j] += other.co_occurrence[i][j];
            }
        }
        self.triples_scored += other.triples_scored;
        self.triples_skipped += other.triples_skipped;
        Ok(())
    }

    /// Whether `scores` equals row sums minus column sums plus solo terms.
    pub fn is_consistent(&self) -> bool {
        let n = self.personas.len();
        (0..n).all(|i| {
            let row: f64 = self.matrix[i].iter().sum();
            let col: f64 = (0..n).map(|j| self.matrix[j][i]).sum();
            (row - col + self.solo[i] - self.scores[i]).abs() < 1e-9
        })
    }
}

/// Score triples into a fresh ledger restricted to `retained` personas.
pub fn score_power(triples: &[SvoTriple], power: &PowerLexicon, retained: &[String], group: &str) -> PowerLedger {
    let mut ledger = PowerLedger::empty(group, retained);
    for t in triples {
        ledger.add(t, power);
    }
    if ledger.triples_skipped > 0 {
        log::info!("{}: skipped {} triples outside the retained personas", group, ledger.triples_skipped);
    }
    ledger
}

/// `group,persona,score,mentions,normalized_score`.
pub fn write_scores_csv<W: Write>(ledgers: &[PowerLedger], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["group", "persona", "score", "mentions", "normalized_score"])?;
    for l in ledgers {
        let norm = l.normalized_scores();
        for (i, p) in l.personas.iter().enumerate() {
            w.write_record([
                l.group.clone(),
                p.clone(),
                format!("{}", l.scores[i]),
                l.mentions[i].to_string(),
                format!("{:.6}", norm[i]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<power scores sink>", e))?;
    Ok(())
}

/// `group,row_persona,col_persona,raw,normalized`.
pub fn write_matrix_csv<W: Write>(ledgers: &[PowerLedger], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["group", "row_persona", "col_persona", "raw", "normalized"])?;
    for l in ledgers {
        let norm = l.normalized_matrix();
        for (i, r) in l.personas.iter().enumerate() {
            for (j, c) in l.personas.iter().enumerate() {
                w.write_record([
                    l.group.clone(),
                    r.clone(),
                    c.clone(),
                    format!("{}", l.matrix[i][j]),
                    format!("{:.6}", norm[i][j]),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<power matrix sink>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona_power::persona::{normalize_personas, persona_tokens};
    use proptest::prelude::*;

    fn svo(sentence: &str) -> Vec<SvoTriple> {
        let lex = PersonaLexicon::default_lexicon();
        let toks = normalize_personas(&persona_tokens(sentence), &lex, None);
        extract_svo(&toks, 0, &lex, &PowerLexicon::default_lexicon(), DEFAULT_WINDOW)
    }

    fn triple(s: &str, v: &str, o: Option<&str>) -> SvoTriple {
        SvoTriple {
            subject: s.into(),
            verb: v.into(),
            object: o.map(Into::into),
            sentence_idx: 0,
        }
    }

    #[test]
    fn subject_only() {
        assert_eq!(svo("The child demanded some juice."), vec![triple("child", "demand", None)]);
    }

    #[test]
    fn subject_and_object() {
        assert_eq!(
            svo("Mother refused to speak with worker."),
            vec![triple("birth_parent", "refuse", Some("cw_staff"))]
        );
    }

    #[test]
    fn passive_swaps_roles() {
        assert_eq!(svo("The child was praised by mother."), vec![triple("birth_parent", "praise", Some("child"))]);
        assert_eq!(svo("The child was praised by the mother."), vec![triple("birth_parent", "praise", Some("child"))]);
    }

    #[test]
    fn no_subject_dropped_and_self_loop_dropped() {
        assert!(svo("Praised the mother.").is_empty());
        assert!(svo("Mother praised the father.").is_empty());
    }

    #[test]
    fn window_limits_reach() {
        assert_eq!(
            svo("Mother a b c d e f demanded juice.").len(),
            0,
            "subject seven tokens away is out of reach"
        );
        assert_eq!(svo("Mother a b c d e demanded juice.").len(), 1);
    }

    #[test]
    fn lookup_tolerates_inflection() {
        let lex = PowerLexicon::default_lexicon();
        for (form, lemma) in [("controlled", "control"), ("hugged", "hug"), ("bathed", "bathe"), ("evaluated", "evaluate"), ("met", "meet")] {
            assert_eq!(lex.lookup(form).map(|(l, _)| l), Some(lemma), "{form}");
        }
        assert!(lex.lookup("juice").is_none());
    }

    #[test]
    fn direction_aliases() {
        let lex = PowerLexicon::parse_tsv("# c\nboss\tpower_agent\nyield\tpower_theme\nmeet\tpower_equal\n").unwrap();
        assert_eq!(lex.direction("boss"), Some(PowerDirection::AgentPower));
        assert_eq!(lex.direction("yield"), Some(PowerDirection::ThemePower));
        assert_eq!(lex.inverted().direction("yield"), Some(PowerDirection::AgentPower));
        assert!(PowerLexicon::parse_tsv("x\tsideways\n").is_err());
        assert!(PowerLexicon::parse_tsv("x\tagent_power\nx\ttheme_power\n").is_err());
    }

    fn two() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn lexicon() -> PowerLexicon {
        PowerLexicon::from_entries([
            ("boss".to_string(), PowerDirection::AgentPower),
            ("obey".to_string(), PowerDirection::ThemePower),
            ("meet".to_string(), PowerDirection::Equal),
        ])
    }

    #[test]
    fn unit_increments() {
        let l = score_power(&[triple("a", "boss", Some("b"))], &lexicon(), &two(), "g");
        assert_eq!((l.score("a"), l.score("b"), l.cell("a", "b")), (Some(1.0), Some(-1.0), Some(1.0)));
        let l = score_power(&[triple("a", "obey", Some("b"))], &lexicon(), &two(), "g");
        assert_eq!((l.score("a"), l.score("b"), l.cell("a", "b")), (Some(-1.0), Some(1.0), Some(-1.0)));
        let l = score_power(&[triple("a", "meet", Some("b"))], &lexicon(), &two(), "g");
        assert_eq!((l.score("a"), l.score("b")), (Some(0.0), Some(0.0)));
        assert_eq!(l.co_occurrence[0][1], 1);
        assert_eq!(l.co_occurrence[1][0], 1);
    }

    #[test]
    fn filtered_personas_skipped() {
        let l = score_power(
            &[triple("a", "boss", Some("zz")), triple("zz", "boss", None), triple("a", "fly", None)],
            &lexicon(),
            &two(),
            "g",
        );
        assert_eq!(l.triples_skipped, 3);
        assert_eq!(l.scores, vec![0.0, 0.0]);
    }

    #[test]
    fn scripted_thirty_and_five() {
        let mut ts = vec![triple("a", "boss", Some("b")); 30];
        ts.extend(vec![triple("b", "boss", Some("a")); 5]);
        let l = score_power(&ts, &lexicon(), &two(), "g");
        assert_eq!(l.score("a"), Some(25.0));
        assert_eq!(l.normalized_matrix()[0][1], 30.0 / 35.0);
    }

    #[test]
    fn csv_layouts() {
        let l = score_power(&[triple("a", "boss", Some("b"))], &lexicon(), &two(), "G1");
        let mut buf = Vec::new();
        write_scores_csv(std::slice::from_ref(&l), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("G1,a,1,0,0.000000"));
        let mut buf = Vec::new();
        write_matrix_csv(&[l], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().nth(2), Some("G1,a,b,1,1.000000"));
    }

    fn arb_triple() -> impl Strategy<Value = SvoTriple> {
        (0usize..4, 0usize..4, 0usize..3, any::<bool>()).prop_map(|(s, o, v, solo)| {
            let names = ["a", "b", "c", "d"];
            SvoTriple {
                subject: names[s].into(),
                verb: ["boss", "obey", "meet"][v].into(),
                object: (!solo && s != o).then(|| names[o].to_string()),
                sentence_idx: 0,
            }
        })
    }

    proptest! {
        #[test]
        fn additive_and_consistent(ts in prop::collection::vec(arb_triple(), 0..60), cut in 0usize..60) {
            let personas: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
            let cut = cut.min(ts.len());
            let whole = score_power(&ts, &lexicon(), &personas, "g");
            let mut left = score_power(&ts[..cut], &lexicon(), &personas, "g");
            left.merge(&score_power(&ts[cut..], &lexicon(), &personas, "g")).unwrap();
            prop_assert_eq!(&left, &whole);
            prop_assert!(whole.is_consistent());
        }
    }
}
