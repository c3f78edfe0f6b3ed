//! Scripted power sentences. The clean set is built to be read exactly by the
//! windowed extractor; the distractor set adds clauses and modifiers and is
//! used only to measure extraction recall.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::words::{capitalize, word_pool, OracleLexicons};
use crate::error::{Error, Result};
use crate::persona_power::{extract_svo, normalize_personas, persona_tokens, PowerDirection, DEFAULT_WINDOW};

/// How a persona is written in a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaPhrase {
    pub persona: String,
    /// Text with an article where the reference takes one ("the mother").
    pub with_article: String,
    /// Text without an article ("mother", "Ms. Kalo").
    pub bare: String,
}

impl PersonaPhrase {
    pub fn reference(persona: &str, reference: &str) -> Self {
        let article = if reference.starts_with("this ") { reference.to_string() } else { format!("the {reference}") };
        PersonaPhrase {
            persona: persona.to_string(),
            with_article: article,
            bare: reference.to_string(),
        }
    }

    pub fn name(persona: &str, name: &str) -> Self {
        PersonaPhrase {
            persona: persona.to_string(),
            with_article: name.to_string(),
            bare: name.to_string(),
        }
    }
}

/// Clean script shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanTemplate {
    /// "S verb O filler."
    Active,
    /// "S filler verb O filler."
    ActiveGap,
    /// "O was verb by S filler."
    Passive,
    /// "S verb filler filler filler."
    SubjectOnly,
}

impl CleanTemplate {
    pub const TWO_ROLE: [CleanTemplate; 3] = [CleanTemplate::Active, CleanTemplate::ActiveGap, CleanTemplate::Passive];
}

fn sentence(words: Vec<String>) -> String {
    let mut text = words.join(" ");
    if let Some(first) = words.first() {
        text.replace_range(..first.len(), &capitalize(first));
    }
    text.push('.');
    text
}

/// Render a clean scripted sentence. `object` must be `Some` for every shape
/// but `SubjectOnly`.
pub fn render_clean<R: Rng>(
    template: CleanTemplate,
    subject: &PersonaPhrase,
    verb_past: &str,
    object: Option<&PersonaPhrase>,
    fillers: &[String],
    rng: &mut R,
) -> String {
    let f = |rng: &mut R| fillers.choose(rng).expect("filler words").clone();
    let s = subject.with_article.clone();
    let v = verb_past.to_string();
    let words = match (template, object) {
        (CleanTemplate::Active, Some(o)) => vec![s, v, o.with_article.clone(), f(rng)],
        (CleanTemplate::ActiveGap, Some(o)) => vec![s, f(rng), v, o.with_article.clone(), f(rng)],
        (CleanTemplate::Passive, Some(o)) => vec![o.with_article.clone(), "was".into(), v, "by".into(), s, f(rng)],
        _ => vec![s, v, f(rng), f(rng), f(rng)],
    };
    sentence(words)
}

/// Distractor shapes. Most are within reach of the heuristic; a relative
/// clause carrying its own power verb and an adverb splitting a passive are
/// known misses.
pub const DISTRACTOR_TEMPLATES: usize = 12;

fn render_distractor<R: Rng>(
    which: usize,
    s: &PersonaPhrase,
    v: &str,
    o: &PersonaPhrase,
    x: &PersonaPhrase,
    fillers: &[String],
    rng: &mut R,
) -> String {
    let mut f = || fillers.choose(rng).expect("filler words").clone();
    let (sa, oa, ob) = (s.with_article.clone(), o.with_article.clone(), o.bare.clone());
    let v = v.to_string();
    let words: Vec<String> = match which {
        0 => vec![sa, f(), v, oa, f(), f()],
        1 => vec![sa, v, oa, "at".into(), "the".into(), f(), f()],
        2 => vec![sa, v, "the".into(), f(), ob, f()],
        3 => vec!["after".into(), "the".into(), f(), f(), sa, v, oa],
        4 => vec![sa, v, oa, "and".into(), "then".into(), f(), f(), f()],
        5 => vec![oa, "was".into(), v, "by".into(), sa, "at".into(), "the".into(), f()],
        6 => vec![sa, "and".into(), "the".into(), f(), v, oa, f()],
        7 => vec![sa, f(), f(), f(), v, oa],
        8 => vec![sa, v, f(), f(), f(), f(), oa],
        9 => vec![sa, f(), f(), f(), f(), f(), v, oa],
        10 => vec![format!("{sa},"), "who".into(), "met".into(), format!("{},", x.with_article), v, oa, f()],
        _ => vec![oa, "was".into(), f(), v, "by".into(), sa],
    };
    sentence(words)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateSet {
    Clean,
    Distractor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub set: TemplateSet,
    pub sentences: usize,
    pub recovered: usize,
    pub recall: f64,
    /// Recovered / total per template shape.
    pub per_template: Vec<(usize, usize)>,
}

/// Generate `n` scripted sentences from one template set with random
/// personas and verbs, run normalization and extraction, and count how many
/// of the scripted triples come back exactly.
pub fn measure_svo_recall(set: TemplateSet, n: usize, seed: u64, lexicons: &OracleLexicons) -> Result<RecallReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fillers = word_pool(&mut rng, 40, lexicons)?;
    let personas = lexicons.personas.personas().to_vec();
    if personas.len() < 3 {
        return Err(Error::InvalidInput("recall templates need at least three personas".into()));
    }
    let mut verbs = Vec::new();
    for d in [PowerDirection::AgentPower, PowerDirection::ThemePower, PowerDirection::Equal] {
        verbs.extend(lexicons.script_verbs(d));
    }
    if verbs.is_empty() {
        return Err(Error::InvalidInput("no usable power verbs".into()));
    }
    let phrase = |rng: &mut ChaCha8Rng, p: &str| {
        let refs = lexicons.personas.references(p).unwrap_or(&[]);
        PersonaPhrase::reference(p, refs.choose(rng).expect("persona has references"))
    };
    let shapes = match set {
        TemplateSet::Clean => 4,
        TemplateSet::Distractor => DISTRACTOR_TEMPLATES,
    };
    let mut per_template = vec![(0usize, 0usize); shapes];
    let mut recovered = 0;
    for i in 0..n {
        let which = i % shapes;
        let picked: Vec<&String> = personas.choose_multiple(&mut rng, 3).collect();
        let (s, o, x) = (phrase(&mut rng, picked[0]), phrase(&mut rng, picked[1]), phrase(&mut rng, picked[2]));
        let (lemma, past) = verbs.choose(&mut rng).expect("verbs").clone();
        let (text, object) = match set {
            TemplateSet::Clean => {
                let t = [CleanTemplate::Active, CleanTemplate::ActiveGap, CleanTemplate::Passive, CleanTemplate::SubjectOnly][which];
                let obj = (t != CleanTemplate::SubjectOnly).then_some(&o);
                (render_clean(t, &s, &past, obj, &fillers, &mut rng), obj.map(|p| p.persona.clone()))
            }
            TemplateSet::Distractor => (
                render_distractor(which, &s, &past, &o, &x, &fillers, &mut rng),
                Some(o.persona.clone()),
            ),
        };
        let toks = normalize_personas(&persona_tokens(&text), &lexicons.personas, None);
        let found = extract_svo(&toks, 0, &lexicons.personas, &lexicons.power, DEFAULT_WINDOW)
            .iter()
            .any(|t| t.subject == s.persona && t.verb == lemma && t.object == object);
        per_template[which].1 += 1;
        if found {
            per_template[which].0 += 1;
            recovered += 1;
        } else {
            log::debug!("missed {:?} in {text:?}", (&s.persona, &lemma, &object));
        }
    }
    Ok(RecallReport {
        set,
        sentences: n,
        recovered,
        recall: if n == 0 { 1.0 } else { recovered as f64 / n as f64 },
        per_template,
    })
}
