//! Synthetic casenote corpora with known ground truth. The generator plants
//! topics with positional schedules, persona rosters, scripted power
//! sentences and a seeded sentiment mix, and records every injection in a
//! manifest that `verify_pipeline` checks pipeline outputs against.

mod templates;
mod verify;
mod words;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::corpus::RawRecord;
use crate::error::{Error, Result};
use crate::persona_power::{PowerDirection, HONORIFICS};

pub use templates::{
    measure_svo_recall, render_clean, CleanTemplate, PersonaPhrase, RecallReport, TemplateSet,
    DISTRACTOR_TEMPLATES,
};
pub use verify::{
    align_topics, verify_pipeline, Check, CheckStatus, LearnedTopics, PipelineOutputs, Tolerances,
    TopicAlignment, VerificationReport,
};
pub use words::{capitalize, past_tense, word_pool, OracleLexicons};

pub const SECTIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDistribution {
    Fixed { value: usize },
    Uniform { min: usize, max: usize },
    /// A band is picked uniformly, then a value uniformly inside it.
    Bands { bands: Vec<(usize, usize)> },
}

impl CountDistribution {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            CountDistribution::Fixed { value } => *value,
            CountDistribution::Uniform { min, max } => rng.random_range(*min..=*max),
            CountDistribution::Bands { bands } => {
                let (lo, hi) = bands[rng.random_range(0..bands.len())];
                rng.random_range(lo..=hi)
            }
        }
    }

    fn validate(&self, what: &str, min_allowed: usize) -> Result<()> {
        let ranges: Vec<(usize, usize)> = match self {
            CountDistribution::Fixed { value } => vec![(*value, *value)],
            CountDistribution::Uniform { min, max } => vec![(*min, *max)],
            CountDistribution::Bands { bands } => bands.clone(),
        };
        if ranges.is_empty() {
            return Err(Error::Config(format!("{what}: no bands")));
        }
        for (lo, hi) in ranges {
            if lo > hi || lo < min_allowed {
                return Err(Error::Config(format!("{what}: bad range {lo}..={hi} (minimum {min_allowed})")));
            }
        }
        Ok(())
    }
}

/// Plain mentions of a persona: with probability `case_rate` a case gets
/// `mentions` sentences naming the persona.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRule {
    pub persona: String,
    pub case_rate: f64,
    pub mentions: CountDistribution,
}

/// Scripted power sentences for one ordered persona pair and direction.
/// Without `object` the sentences are subject-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub subject: String,
    #[serde(default)]
    pub object: Option<String>,
    pub direction: PowerDirection,
    /// Triples per 100 topic sentences of a case.
    #[serde(default)]
    pub per_100_sentences: f64,
    /// Exact corpus-wide count; overrides the rate when set.
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentMix {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub k_true: usize,
    pub vocab_size: usize,
    /// Words shared by every topic; the rest is split into disjoint cores.
    pub background_size: usize,
    /// Probability mass of the background block inside each topic.
    pub background_weight: f64,
    pub zipf_exponent: f64,
    /// Symmetric Dirichlet parameter of per-document topic proportions.
    pub doc_concentration: f64,
    pub n_cases: usize,
    pub records_per_case: CountDistribution,
    /// Topic tokens per record.
    pub record_length: CountDistribution,
    pub sentence_length: CountDistribution,
    /// Share of topic sentences cut to 3 or 4 tokens.
    pub short_sentence_rate: f64,
    /// `schedule[section][topic]`; rows sum to 1. `None` uses the default
    /// early/late shape.
    pub schedule: Option<Vec<Vec<f64>>>,
    pub mentions: Vec<MentionRule>,
    pub scripts: Vec<ScriptRule>,
    /// Chance that a persona with a roster name is written by name.
    pub roster_rate: f64,
    pub sentiment: SentimentMix,
    pub sentiment_min_tokens: usize,
    /// Inclusive upper interaction counts of all but the last cohort.
    pub cohort_bounds: Vec<usize>,
    pub cohort_labels: Vec<String>,
    pub min_persona_documents: usize,
    pub seed: u64,
}

fn rule(persona: &str, case_rate: f64) -> MentionRule {
    MentionRule {
        persona: persona.into(),
        case_rate,
        mentions: CountDistribution::Uniform { min: 1, max: 4 },
    }
}

fn script(subject: &str, object: Option<&str>, direction: PowerDirection, rate: f64) -> ScriptRule {
    ScriptRule {
        subject: subject.into(),
        object: object.map(str::to_string),
        direction,
        per_100_sentences: rate,
        count: None,
    }
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        use PowerDirection::*;
        GeneratorSpec {
            k_true: 5,
            vocab_size: 800,
            background_size: 50,
            background_weight: 0.1,
            zipf_exponent: 1.0,
            doc_concentration: 0.5,
            n_cases: 300,
            records_per_case: CountDistribution::Bands {
                bands: vec![(2, 10), (11, 40), (41, 80)],
            },
            record_length: CountDistribution::Uniform { min: 15, max: 30 },
            sentence_length: CountDistribution::Uniform { min: 6, max: 14 },
            short_sentence_rate: 0.02,
            schedule: None,
            mentions: vec![
                rule("birth_parent", 0.9),
                rule("cw_staff", 0.95),
                rule("child", 0.85),
                rule("foster_parent", 0.6),
                rule("support_system", 0.5),
                rule("medical_parties", 0.2),
                rule("legal_parties", 0.18),
                rule("significant_other", 0.1),
            ],
            scripts: vec![
                script("birth_parent", Some("child"), AgentPower, 1.0),
                script("cw_staff", Some("birth_parent"), AgentPower, 0.8),
                script("child", Some("foster_parent"), ThemePower, 0.6),
                script("foster_parent", Some("child"), AgentPower, 0.5),
                script("cw_staff", Some("foster_parent"), Equal, 0.5),
                script("support_system", Some("child"), AgentPower, 0.3),
                script("child", None, AgentPower, 0.3),
                script("medical_parties", Some("child"), AgentPower, 0.1),
            ],
            roster_rate: 0.3,
            sentiment: SentimentMix {
                positive: 0.10,
                negative: 0.04,
            },
            sentiment_min_tokens: 5,
            cohort_bounds: vec![10, 40],
            cohort_labels: vec!["G1".into(), "G2".into(), "G3".into()],
            min_persona_documents: 100,
            seed: 42,
        }
    }
}

/// Default schedule: the first topic peaks early, the second late, the rest
/// are flat. Rows are normalized.
pub fn default_schedule(k: usize) -> Vec<Vec<f64>> {
    (0..SECTIONS)
        .map(|s| {
            let mut row = vec![1.0; k];
            if k >= 2 {
                let (early, late) = match s {
                    0..=2 => (3.0, 0.25),
                    7.. => (0.25, 3.0),
                    _ => (1.0, 1.0),
                };
                row[0] = early;
                row[1] = late;
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|w| w / total).collect()
        })
        .collect()
}

impl GeneratorSpec {
    pub fn schedule(&self) -> Vec<Vec<f64>> {
        self.schedule.clone().unwrap_or_else(|| default_schedule(self.k_true))
    }

    pub fn core_size(&self) -> usize {
        self.vocab_size.saturating_sub(self.background_size) / self.k_true.max(1)
    }

    pub fn cohort_label(&self, interactions: usize) -> &str {
        self.cohort_bounds
            .iter()
            .position(|&b| interactions <= b)
            .map_or_else(|| self.cohort_labels.last().map(String::as_str).unwrap_or(""), |i| &self.cohort_labels[i])
    }

    pub fn validate(&self, lexicons: &OracleLexicons) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k_true == 0 || self.n_cases == 0 {
            return bad("k_true and n_cases must be at least 1".into());
        }
        if self.core_size() < 10 {
            return bad(format!(
                "vocab_size {} leaves {} core words per topic for {} topics; at least 10 are needed",
                self.vocab_size,
                self.core_size(),
                self.k_true
            ));
        }
        if self.background_size < 5 {
            return bad("background_size must be at least 5 (filler words come from it)".into());
        }
        if !(0.0..1.0).contains(&self.background_weight) {
            return bad("background_weight must lie in [0, 1)".into());
        }
        if !(self.doc_concentration > 0.0) || !(self.zipf_exponent >= 0.0) {
            return bad("doc_concentration must be positive and zipf_exponent non-negative".into());
        }
        self.records_per_case.validate("records_per_case", 1)?;
        self.record_length.validate("record_length", 1)?;
        self.sentence_length.validate("sentence_length", 1)?;
        for (name, p) in [("short_sentence_rate", self.short_sentence_rate), ("roster_rate", self.roster_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        let schedule = self.schedule();
        if schedule.len() != SECTIONS {
            return bad(format!("schedule needs {SECTIONS} rows"));
        }
        for (s, row) in schedule.iter().enumerate() {
            if row.len() != self.k_true || row.iter().any(|w| !(*w >= 0.0)) {
                return bad(format!("schedule row {s} needs {} non-negative weights", self.k_true));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("schedule row {s} does not sum to 1"));
            }
        }
        let known = |p: &str| lexicons.personas.position(p).is_some();
        for m in &self.mentions {
            if !known(&m.persona) {
                return bad(format!("mention rule names unknown persona {:?}", m.persona));
            }
            if !(0.0..=1.0).contains(&m.case_rate) {
                return bad(format!("mention rate for {} must lie in [0, 1]", m.persona));
            }
            m.mentions.validate("mentions", 0)?;
        }
        for s in &self.scripts {
            if !known(&s.subject) || s.object.as_deref().is_some_and(|o| !known(o)) {
                return bad(format!("script {} -> {:?} names an unknown persona", s.subject, s.object));
            }
            if s.object.as_deref() == Some(s.subject.as_str()) {
                return bad(format!("script {} targets itself", s.subject));
            }
            if !(s.per_100_sentences >= 0.0) {
                return bad("script rates must be non-negative".into());
            }
            if lexicons.script_verbs(s.direction).is_empty() {
                return bad(format!("power lexicon has no usable {} verbs", s.direction.as_str()));
            }
        }
        let SentimentMix { positive, negative } = self.sentiment;
        if !(positive >= 0.0 && negative >= 0.0 && positive + negative <= 1.0) {
            return bad("sentiment mix must be non-negative and sum to at most 1".into());
        }
        if self.cohort_labels.len() != self.cohort_bounds.len() + 1
            || self.cohort_bounds.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("cohort labels must number bounds + 1 and bounds must increase".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub case_id: String,
    pub name: String,
    pub persona: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedTriple {
    pub case_id: String,
    pub subject: String,
    pub verb: String,
    pub object: Option<String>,
    pub direction: PowerDirection,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedPersona {
    pub persona: String,
    pub total_mentions: u64,
    pub documents_with_mentions: usize,
}

/// Integer power ledger rebuilt from the scripts alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedLedger {
    pub group: String,
    pub personas: Vec<String>,
    pub scores: Vec<i64>,
    pub solo: Vec<i64>,
    pub matrix: Vec<Vec<i64>>,
    pub mentions: Vec<u64>,
    pub triples_scored: usize,
    pub triples_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedSentiment {
    pub min_tokens: usize,
    pub scored_sentences: usize,
    pub excluded_sentences: usize,
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub spec: GeneratorSpec,
    pub vocabulary: Vec<String>,
    /// `topic_word[k][w]` over `vocabulary`.
    pub topic_word: Vec<Vec<f64>>,
    pub schedule: Vec<Vec<f64>>,
    pub doc_theta: BTreeMap<String, Vec<f64>>,
    pub n_records: usize,
    pub cohorts: BTreeMap<String, String>,
    pub group_order: Vec<String>,
    pub personas: Vec<ExpectedPersona>,
    pub retained_personas: Vec<String>,
    pub ledgers: Vec<ExpectedLedger>,
    pub scripted: Vec<ScriptedTriple>,
    pub sentiment: ExpectedSentiment,
}

impl GroundTruthManifest {
    /// The `n` most probable words of a planted topic among those `keep`
    /// accepts, ties broken by vocabulary order.
    pub fn planted_top_words(&self, topic: usize, n: usize, keep: impl Fn(&str) -> bool) -> Vec<String> {
        let phi = &self.topic_word[topic];
        let mut order: Vec<usize> = (0..phi.len()).filter(|&w| keep(&self.vocabulary[w])).collect();
        order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
        order.into_iter().take(n).map(|w| self.vocabulary[w].clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub records: Vec<RawRecord>,
    pub roster: Vec<RosterEntry>,
    pub manifest: GroundTruthManifest,
}

pub fn write_roster_csv<W: Write>(roster: &[RosterEntry], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for entry in roster {
        w.serialize(entry)?;
    }
    w.flush().map_err(|e| Error::io("roster", e))?;
    Ok(())
}

struct Draft {
    words: Vec<String>,
    topic: bool,
}

impl Draft {
    fn render(&self) -> String {
        let mut words = self.words.clone();
        if let Some(first) = words.first_mut() {
            *first = capitalize(first);
        }
        format!("{}.", words.join(" "))
    }
}

fn from_text(text: &str) -> Draft {
    Draft {
        words: text.trim_end_matches('.').split_whitespace().map(str::to_string).collect(),
        topic: false,
    }
}

/// Gamma-normalized symmetric Dirichlet draw.
fn dirichlet<R: Rng>(rng: &mut R, k: usize, concentration: f64) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter().map(|g| g / total).collect()
    } else {
        let mut v = vec![0.0; k];
        v[rng.random_range(0..k)] = 1.0;
        v
    }
}

fn topic_word_matrix(spec: &GeneratorSpec) -> Vec<Vec<f64>> {
    let core = spec.core_size();
    let bg_start = spec.vocab_size - spec.background_size;
    let zipf: Vec<f64> = (0..core).map(|r| 1.0 / ((r + 1) as f64).powf(spec.zipf_exponent)).collect();
    let zipf_total: f64 = zipf.iter().sum();
    (0..spec.k_true)
        .map(|k| {
            let mut phi = vec![0.0; spec.vocab_size];
            for (r, z) in zipf.iter().enumerate() {
                phi[k * core + r] = (1.0 - spec.background_weight) * z / zipf_total;
            }
            for p in &mut phi[bg_start..] {
                *p = spec.background_weight / spec.background_size as f64;
            }
            phi
        })
        .collect()
}

/// Split a record's topic tokens into sentences.
fn chunk<R: Rng>(tokens: Vec<String>, spec: &GeneratorSpec, rng: &mut R) -> Vec<Draft> {
    let mut out = Vec::new();
    let mut rest = tokens.as_slice();
    while !rest.is_empty() {
        let len = if rng.random::<f64>() < spec.short_sentence_rate {
            rng.random_range(3..=4)
        } else {
            spec.sentence_length.sample(rng)
        }
        .clamp(1, rest.len());
        out.push(Draft {
            words: rest[..len].to_vec(),
            topic: true,
        });
        rest = &rest[len..];
    }
    out
}

/// Names usable on a roster: no lexicon beyond the name lists may know them.
fn roster_names(lexicons: &OracleLexicons, given: bool) -> Vec<String> {
    let names = if given { &lexicons.names.given_names } else { &lexicons.names.surnames };
    let mut out: Vec<String> = names
        .iter()
        .filter(|n| n.len() >= 3 && n.chars().all(|c| c.is_ascii_lowercase()))
        .filter(|n| {
            !lexicons.stopwords.contains(n)
                && lexicons.sentiment.valence_of(n).is_none()
                && !lexicons.sentiment.boosters.contains_key(*n)
                && !lexicons.sentiment.negators.contains(*n)
                && lexicons.power.lookup(n).is_none()
                && !lexicons.personas.reference_words().contains(*n)
                && !HONORIFICS.contains(&n.as_str())
        })
        .cloned()
        .collect();
    out.sort();
    out
}

/// Persona references that are plain lowercase words, so token counts are
/// known by construction.
fn usable_references(lexicons: &OracleLexicons, persona: &str) -> Vec<String> {
    lexicons
        .personas
        .references(persona)
        .unwrap_or(&[])
        .iter()
        .filter(|r| r.chars().all(|c| c.is_ascii_lowercase() || c == ' '))
        .cloned()
        .collect()
}

struct CaseNames {
    /// persona -> (written form, roster name)
    names: BTreeMap<String, (String, String)>,
}

const NAMED_PERSONAS: &[&str] = &["birth_parent", "child", "foster_parent", "support_system"];

pub fn generate_corpus(spec: &GeneratorSpec) -> Result<GeneratedCorpus> {
    generate_corpus_with(spec, &OracleLexicons::default())
}

pub fn generate_corpus_with(spec: &GeneratorSpec, lexicons: &OracleLexicons) -> Result<GeneratedCorpus> {
    spec.validate(lexicons)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocabulary = word_pool(&mut rng, spec.vocab_size, lexicons)?;
    let fillers: Vec<String> = vocabulary[spec.vocab_size - spec.background_size..].to_vec();
    let topic_word = topic_word_matrix(spec);
    let samplers: Vec<WeightedIndex<f64>> = topic_word
        .iter()
        .map(|phi| WeightedIndex::new(phi).map_err(|e| Error::Config(format!("topic-word weights: {e}"))))
        .collect::<Result<_>>()?;
    let schedule = spec.schedule();
    let persona_list = lexicons.personas.personas().to_vec();
    let p_index = |p: &str| lexicons.personas.position(p).expect("validated persona");
    let references: Vec<Vec<String>> = persona_list.iter().map(|p| usable_references(lexicons, p)).collect();
    for (p, refs) in persona_list.iter().zip(&references) {
        if refs.is_empty() {
            return Err(Error::Config(format!("persona {p} has no plain-word reference")));
        }
    }
    let given = roster_names(lexicons, true);
    let surnames = roster_names(lexicons, false);
    let verbs: BTreeMap<PowerDirection, Vec<(String, String)>> = [
        PowerDirection::AgentPower,
        PowerDirection::ThemePower,
        PowerDirection::Equal,
    ]
    .into_iter()
    .map(|d| (d, lexicons.script_verbs(d)))
    .collect();

    // Exact-count scripts are spread over random cases up front.
    let mut fixed_counts = vec![vec![0usize; spec.scripts.len()]; spec.n_cases];
    for (r, s) in spec.scripts.iter().enumerate() {
        for _ in 0..s.count.unwrap_or(0) {
            fixed_counts[rng.random_range(0..spec.n_cases)][r] += 1;
        }
    }

    let width = spec.n_cases.to_string().len().max(4);
    let base = NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date").and_hms_opt(9, 0, 0).expect("valid time");
    let mut roster = Vec::new();
    let mut doc_theta = BTreeMap::new();
    let mut cohorts = BTreeMap::new();
    let mut mentions: Vec<Vec<u64>> = Vec::with_capacity(spec.n_cases);
    let mut scripted = Vec::new();
    let mut case_records: Vec<(String, Vec<Vec<Draft>>)> = Vec::with_capacity(spec.n_cases);

    for c in 0..spec.n_cases {
        let case_id = format!("C{:0width$}", c + 1);
        let n_records = spec.records_per_case.sample(&mut rng);
        cohorts.insert(case_id.clone(), spec.cohort_label(n_records).to_string());
        let theta = dirichlet(&mut rng, spec.k_true, spec.doc_concentration);
        let lengths: Vec<usize> = (0..n_records).map(|_| spec.record_length.sample(&mut rng)).collect();
        let total: usize = lengths.iter().sum();
        let mut position = 0usize;
        let mut records: Vec<Vec<Draft>> = Vec::with_capacity(n_records);
        for &len in &lengths {
            let mut tokens = Vec::with_capacity(len);
            for _ in 0..len {
                let section = (position * SECTIONS / total).min(SECTIONS - 1);
                let weights: Vec<f64> = theta.iter().zip(&schedule[section]).map(|(t, s)| t * s).collect();
                let topic = match WeightedIndex::new(&weights) {
                    Ok(d) => d.sample(&mut rng),
                    Err(_) => WeightedIndex::new(&schedule[section]).map(|d| d.sample(&mut rng)).unwrap_or(0),
                };
                tokens.push(vocabulary[samplers[topic].sample(&mut rng)].clone());
                position += 1;
            }
            records.push(chunk(tokens, spec, &mut rng));
        }
        let topic_sentences: usize = records.iter().map(Vec::len).sum();
        doc_theta.insert(case_id.clone(), theta);

        // Roster: a surname with an honorific for the birth parent, given
        // names for the others, all distinct within the case.
        let mut used = BTreeSet::new();
        let mut names = CaseNames { names: BTreeMap::new() };
        for &persona in NAMED_PERSONAS {
            if lexicons.personas.position(persona).is_none() {
                continue;
            }
            let pool = if persona == "birth_parent" { &surnames } else { &given };
            let candidates: Vec<&String> = pool.iter().filter(|n| !used.contains(*n)).collect();
            let Some(name) = candidates.choose(&mut rng).map(|n| (*n).clone()) else {
                continue;
            };
            used.insert(name.clone());
            let written = if persona == "birth_parent" {
                let honorific = if rng.random::<bool>() { "Ms." } else { "Mr." };
                format!("{honorific} {}", capitalize(&name))
            } else {
                capitalize(&name)
            };
            roster.push(RosterEntry {
                case_id: case_id.clone(),
                name: capitalize(&name),
                persona: persona.to_string(),
            });
            names.names.insert(persona.to_string(), (written, name));
        }

        let mut counts = vec![0u64; persona_list.len()];
        let mut extra: Vec<Draft> = Vec::new();
        let phrase = |rng: &mut ChaCha8Rng, persona: &str, counts: &mut Vec<u64>| {
            counts[p_index(persona)] += 1;
            match names.names.get(persona) {
                Some((written, _)) if rng.random::<f64>() < spec.roster_rate => PersonaPhrase::name(persona, written),
                _ => {
                    let r = references[p_index(persona)].choose(rng).expect("checked non-empty");
                    PersonaPhrase::reference(persona, r)
                }
            }
        };
        for m in &spec.mentions {
            if rng.random::<f64>() >= m.case_rate {
                continue;
            }
            for _ in 0..m.mentions.sample(&mut rng) {
                let p = phrase(&mut rng, &m.persona, &mut counts);
                let mut words: Vec<String> = p.with_article.split_whitespace().map(str::to_string).collect();
                words.extend((0..4).map(|_| fillers.choose(&mut rng).expect("fillers").clone()));
                extra.push(Draft { words, topic: false });
            }
        }
        for (r, s) in spec.scripts.iter().enumerate() {
            let n = if s.count.is_some() {
                fixed_counts[c][r]
            } else {
                let expected = s.per_100_sentences * topic_sentences as f64 / 100.0;
                expected.floor() as usize + usize::from(rng.random::<f64>() < expected.fract())
            };
            for _ in 0..n {
                let subject = phrase(&mut rng, &s.subject, &mut counts);
                let object = s.object.as_deref().map(|o| phrase(&mut rng, o, &mut counts));
                let (lemma, past) = verbs[&s.direction].choose(&mut rng).expect("validated verbs").clone();
                let template = match object {
                    Some(_) => *CleanTemplate::TWO_ROLE.choose(&mut rng).expect("templates"),
                    None => CleanTemplate::SubjectOnly,
                };
                let text = render_clean(template, &subject, &past, object.as_ref(), &fillers, &mut rng);
                scripted.push(ScriptedTriple {
                    case_id: case_id.clone(),
                    subject: s.subject.clone(),
                    verb: lemma,
                    object: s.object.clone(),
                    direction: s.direction,
                    sentence: text.clone(),
                });
                extra.push(from_text(&text));
            }
        }
        for draft in extra {
            let r = rng.random_range(0..records.len());
            let at = rng.random_range(0..=records[r].len());
            records[r].insert(at, draft);
        }
        mentions.push(counts);
        case_records.push((case_id, records));
    }

    // Seeded sentiment: exact counts over scorable topic sentences.
    let min_tokens = spec.sentiment_min_tokens;
    let scored: usize = case_records
        .iter()
        .flat_map(|(_, rs)| rs.iter().flatten())
        .filter(|d| d.words.len() >= min_tokens)
        .count();
    let total_sentences: usize = case_records.iter().map(|(_, rs)| rs.iter().map(Vec::len).sum::<usize>()).sum();
    let n_pos = (spec.sentiment.positive * scored as f64).round() as usize;
    let n_neg = (spec.sentiment.negative * scored as f64).round() as usize;
    let mut eligible: Vec<(usize, usize, usize)> = Vec::new();
    for (c, (_, rs)) in case_records.iter().enumerate() {
        for (r, sentences) in rs.iter().enumerate() {
            for (s, d) in sentences.iter().enumerate() {
                if d.topic && d.words.len() >= min_tokens {
                    eligible.push((c, r, s));
                }
            }
        }
    }
    if n_pos + n_neg > eligible.len() {
        return Err(Error::Config(format!(
            "sentiment mix needs {} sentences but only {} topic sentences are scorable",
            n_pos + n_neg,
            eligible.len()
        )));
    }
    let (pos_words, neg_words) = (lexicons.sentiment_words(true), lexicons.sentiment_words(false));
    if (n_pos > 0 && pos_words.is_empty()) || (n_neg > 0 && neg_words.is_empty()) {
        return Err(Error::Config("sentiment lexicon lacks words of the requested sign".into()));
    }
    eligible.shuffle(&mut rng);
    for (i, &(c, r, s)) in eligible.iter().take(n_pos + n_neg).enumerate() {
        let pool = if i < n_pos { &pos_words } else { &neg_words };
        let word = pool.choose(&mut rng).expect("non-empty").clone();
        let draft = &mut case_records[c].1[r][s];
        let at = rng.random_range(1..=draft.words.len());
        draft.words.insert(at, word);
    }

    let mut records = Vec::new();
    for (c, (case_id, rs)) in case_records.iter().enumerate() {
        let start = base + Duration::days(3 * c as i64);
        for (j, sentences) in rs.iter().enumerate() {
            let timestamp: NaiveDateTime = start + Duration::days(j as i64) + Duration::hours((j % 8) as i64);
            records.push(RawRecord {
                case_id: case_id.clone(),
                timestamp,
                duration_minutes: Some(rng.random_range(10..=120)),
                author_id: Some(format!("W{:02}", rng.random_range(1..=12))),
                text: sentences.iter().map(Draft::render).collect::<Vec<_>>().join(" "),
            });
        }
    }

    let personas: Vec<ExpectedPersona> = persona_list
        .iter()
        .enumerate()
        .map(|(p, name)| ExpectedPersona {
            persona: name.clone(),
            total_mentions: mentions.iter().map(|m| m[p]).sum(),
            documents_with_mentions: mentions.iter().filter(|m| m[p] > 0).count(),
        })
        .collect();
    let retained: Vec<String> = personas
        .iter()
        .filter(|p| p.documents_with_mentions >= spec.min_persona_documents)
        .map(|p| p.persona.clone())
        .collect();
    let ledgers = expected_ledgers(spec, &cohorts, &case_records, &mentions, &persona_list, &retained, &scripted);

    let manifest = GroundTruthManifest {
        spec: spec.clone(),
        vocabulary,
        topic_word,
        schedule,
        doc_theta,
        n_records: records.len(),
        cohorts,
        group_order: spec.cohort_labels.clone(),
        personas,
        retained_personas: retained,
        ledgers,
        scripted,
        sentiment: ExpectedSentiment {
            min_tokens,
            scored_sentences: scored,
            excluded_sentences: total_sentences - scored,
            positive: n_pos,
            negative: n_neg,
            neutral: scored - n_pos - n_neg,
        },
    };
    Ok(GeneratedCorpus {
        records,
        roster,
        manifest,
    })
}

fn expected_ledgers(
    spec: &GeneratorSpec,
    cohorts: &BTreeMap<String, String>,
    case_records: &[(String, Vec<Vec<Draft>>)],
    mentions: &[Vec<u64>],
    persona_list: &[String],
    retained: &[String],
    scripted: &[ScriptedTriple],
) -> Vec<ExpectedLedger> {
    let n = retained.len();
    let slot = |p: &str| retained.iter().position(|r| r == p);
    let mut ledgers: Vec<ExpectedLedger> = spec
        .cohort_labels
        .iter()
        .map(|g| ExpectedLedger {
            group: g.clone(),
            personas: retained.to_vec(),
            scores: vec![0; n],
            solo: vec![0; n],
            matrix: vec![vec![0; n]; n],
            mentions: vec![0; n],
            triples_scored: 0,
            triples_skipped: 0,
        })
        .collect();
    let group_of = |case: &str| spec.cohort_labels.iter().position(|g| Some(g) == cohorts.get(case)).expect("labelled case");
    for ((case_id, _), counts) in case_records.iter().zip(mentions) {
        let l = &mut ledgers[group_of(case_id)];
        for (p, name) in persona_list.iter().enumerate() {
            if let Some(i) = slot(name) {
                l.mentions[i] += counts[p];
            }
        }
    }
    for t in scripted {
        let l = &mut ledgers[group_of(&t.case_id)];
        let inc: i64 = match t.direction {
            PowerDirection::AgentPower => 1,
            PowerDirection::ThemePower => -1,
            PowerDirection::Equal => 0,
        };
        let s = slot(&t.subject);
        match (s, t.object.as_deref().map(slot)) {
            (Some(s), None) => {
                l.solo[s] += inc;
                l.scores[s] += inc;
                l.triples_scored += 1;
            }
            (Some(s), Some(Some(o))) => {
                l.matrix[s][o] += inc;
                l.scores[s] += inc;
                l.scores[o] -= inc;
                l.triples_scored += 1;
            }
            _ => l.triples_skipped += 1,
        }
    }
    ledgers
}
