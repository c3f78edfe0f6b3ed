//! Compare pipeline outputs with a generator manifest.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GroundTruthManifest, SECTIONS};
use crate::cohort_lifeline::LifelineTrend;
use crate::persona_power::{PersonaReport, PowerLedger};
use crate::sentiment::{SentimentClass, SentimentSummary};
use crate::topic_engine::{top_keywords, TopicModelState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Minimum mean planted-vs-learned keyword overlap.
    pub topic_overlap: f64,
    pub top_n: usize,
    /// Maximum absolute difference between a class share and the mix.
    pub sentiment_share: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            topic_overlap: 0.6,
            top_n: 10,
            sentiment_share: 0.03,
        }
    }
}

/// Learned topics as keyword lists plus the model vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedTopics {
    pub keywords: Vec<Vec<String>>,
    pub vocabulary: Vec<String>,
}

impl LearnedTopics {
    pub fn from_state(state: &TopicModelState, n: usize) -> crate::Result<Self> {
        let n = n.min(state.vocab_size());
        let keywords = (0..state.k)
            .map(|k| Ok(top_keywords(state, k, n)?.into_iter().map(|kw| kw.token).collect()))
            .collect::<crate::Result<_>>()?;
        Ok(LearnedTopics {
            keywords,
            vocabulary: state.vocab.tokens().to_vec(),
        })
    }
}

/// Whatever the pipeline produced; absent stages are marked not run.
#[derive(Debug, Clone, Default)]
pub struct PipelineOutputs {
    pub topics: Option<LearnedTopics>,
    pub trends: Option<Vec<LifelineTrend>>,
    pub ledgers: Option<Vec<PowerLedger>>,
    pub sentiment: Option<SentimentSummary>,
    pub cohorts: Option<BTreeMap<String, String>>,
    pub personas: Option<PersonaReport>,
    pub retained_personas: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotRun,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotRun => "NOT RUN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    #[serde(default)]
    pub metric: Option<f64>,
}

impl Check {
    fn new(name: &str, ok: bool, detail: String, metric: Option<f64>) -> Self {
        Check {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
            metric,
        }
    }

    fn not_run(name: &str, missing: &str) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::NotRun,
            detail: format!("missing {missing}"),
            metric: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    /// Every check ran and passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn status(&self, name: &str) -> Option<CheckStatus> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.status)
    }

    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{:<10} {:<8} {}\n", c.name, c.status.to_string(), c.detail))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAlignment {
    /// `pairs[i] = (planted, learned, overlap)` in the order chosen.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Sum of matched overlaps divided by the number of planted topics.
    pub mean_overlap: f64,
}

impl TopicAlignment {
    pub fn learned_for(&self, planted: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == planted).map(|p| p.1)
    }
}

/// Greedy alignment: repeatedly match the planted/learned pair with the
/// largest keyword overlap (|A ∩ B| / n), lowest indices first on ties.
pub fn align_topics(planted: &[Vec<String>], learned: &[Vec<String>], n: usize) -> TopicAlignment {
    let sets: Vec<HashSet<&String>> = learned.iter().map(|l| l.iter().take(n).collect()).collect();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (p, words) in planted.iter().enumerate() {
        for (l, set) in sets.iter().enumerate() {
            let hits = words.iter().take(n).filter(|w| set.contains(w)).count();
            cells.push((p, l, hits as f64 / n.max(1) as f64));
        }
    }
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let (mut used_p, mut used_l) = (HashSet::new(), HashSet::new());
    let mut pairs = Vec::new();
    for (p, l, o) in cells {
        if used_p.contains(&p) || used_l.contains(&l) {
            continue;
        }
        used_p.insert(p);
        used_l.insert(l);
        pairs.push((p, l, o));
    }
    let mean_overlap = if planted.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.2).sum::<f64>() / planted.len() as f64
    };
    TopicAlignment { pairs, mean_overlap }
}

fn front_back(values: &[f64]) -> (f64, f64) {
    let span = (values.len() * 3 / SECTIONS).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&values[..span]), mean(&values[values.len() - span..]))
}

fn check_topics(m: &GroundTruthManifest, out: &PipelineOutputs, tol: &Tolerances) -> (Check, Option<TopicAlignment>) {
    let Some(learned) = &out.topics else {
        return (Check::not_run("topics", "topic model"), None);
    };
    let vocab: HashSet<&str> = learned.vocabulary.iter().map(String::as_str).collect();
    let planted: Vec<Vec<String>> = (0..m.spec.k_true)
        .map(|k| m.planted_top_words(k, tol.top_n, |w| vocab.contains(w)))
        .collect();
    let a = align_topics(&planted, &learned.keywords, tol.top_n);
    let ok = a.mean_overlap >= tol.topic_overlap;
    let detail = format!(
        "mean top-{} overlap {:.3} (threshold {:.2}) over {} planted / {} learned topics",
        tol.top_n,
        a.mean_overlap,
        tol.topic_overlap,
        planted.len(),
        learned.keywords.len()
    );
    (Check::new("topics", ok, detail, Some(a.mean_overlap)), Some(a))
}

fn check_trends(m: &GroundTruthManifest, out: &PipelineOutputs, alignment: Option<&TopicAlignment>) -> Check {
    let (Some(trends), Some(alignment)) = (&out.trends, alignment) else {
        return Check::not_run("trends", if out.trends.is_none() { "trends" } else { "topic model" });
    };
    let mut failures = Vec::new();
    let mut checked = 0;
    for k in 0..m.spec.k_true {
        let planted: Vec<f64> = m.schedule.iter().map(|row| row[k]).collect();
        let (front, back) = front_back(&planted);
        if (front - back).abs() < 1e-12 {
            continue;
        }
        let Some(learned) = alignment.learned_for(k) else {
            failures.push(format!("planted topic {k} has no learned match"));
            continue;
        };
        for t in trends.iter().filter(|t| t.topic_id == learned) {
            checked += 1;
            let (f, b) = front_back(&t.section_means);
            if (f > b) != (front > back) {
                failures.push(format!(
                    "{} topic {learned} (planted {k}): front {f:.3} back {b:.3}",
                    t.group
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} group trends follow their planted schedule")
    } else {
        failures.join("; ")
    };
    Check::new("trends", failures.is_empty(), detail, None)
}

fn check_power(m: &GroundTruthManifest, out: &PipelineOutputs) -> Check {
    let Some(ledgers) = &out.ledgers else {
        return Check::not_run("power", "power ledgers");
    };
    let mut diffs = Vec::new();
    for e in &m.ledgers {
        let Some(l) = ledgers.iter().find(|l| l.group == e.group) else {
            diffs.push(format!("{}: no ledger", e.group));
            continue;
        };
        if l.personas != e.personas {
            diffs.push(format!("{}: personas {:?} vs {:?}", e.group, l.personas, e.personas));
            continue;
        }
        let as_f = |v: &[i64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        if l.scores != as_f(&e.scores) {
            diffs.push(format!("{}: scores {:?} vs expected {:?}", e.group, l.scores, e.scores));
        }
        if l.solo != as_f(&e.solo) {
            diffs.push(format!("{}: subject-only scores differ", e.group));
        }
        if l.matrix.iter().zip(&e.matrix).any(|(a, b)| *a != as_f(b)) {
            diffs.push(format!("{}: matrix differs", e.group));
        }
        if l.mentions != e.mentions {
            diffs.push(format!("{}: mentions {:?} vs {:?}", e.group, l.mentions, e.mentions));
        }
        if (l.triples_scored, l.triples_skipped) != (e.triples_scored, e.triples_skipped) {
            diffs.push(format!(
                "{}: {} scored / {} skipped vs {} / {}",
                e.group, l.triples_scored, l.triples_skipped, e.triples_scored, e.triples_skipped
            ));
        }
    }
    let detail = if diffs.is_empty() {
        format!("{} scripted triples reproduced exactly", m.scripted.len())
    } else {
        diffs.join("; ")
    };
    Check::new("power", diffs.is_empty(), detail, None)
}

fn check_sentiment(m: &GroundTruthManifest, out: &PipelineOutputs, tol: &Tolerances) -> Check {
    let Some(s) = &out.sentiment else {
        return Check::not_run("sentiment", "sentiment summary");
    };
    let pos = s.share(SentimentClass::Positive);
    let neg = s.share(SentimentClass::Negative);
    let worst = (pos - m.spec.sentiment.positive).abs().max((neg - m.spec.sentiment.negative).abs());
    let detail = format!(
        "positive {:.4} (mix {:.2}), negative {:.4} (mix {:.2}); {} scored, expected {}",
        pos, m.spec.sentiment.positive, neg, m.spec.sentiment.negative, s.scored_sentences, m.sentiment.scored_sentences
    );
    Check::new("sentiment", worst <= tol.sentiment_share + 1e-12, detail, Some(worst))
}

fn check_cohorts(m: &GroundTruthManifest, out: &PipelineOutputs) -> Check {
    let Some(c) = &out.cohorts else {
        return Check::not_run("cohorts", "cohort assignment");
    };
    let wrong = m.cohorts.iter().filter(|(k, v)| c.get(*k) != Some(v)).count() + c.keys().filter(|k| !m.cohorts.contains_key(*k)).count();
    Check::new("cohorts", wrong == 0, format!("{wrong} of {} cases misassigned", m.cohorts.len()), None)
}

fn check_personas(m: &GroundTruthManifest, out: &PipelineOutputs) -> Check {
    let Some(report) = &out.personas else {
        return Check::not_run("personas", "persona report");
    };
    let mut diffs = Vec::new();
    for e in &m.personas {
        match report.personas.iter().find(|s| s.persona == e.persona) {
            Some(s) if s.total_mentions == e.total_mentions && s.documents_with_mentions == e.documents_with_mentions => {}
            Some(s) => diffs.push(format!(
                "{}: {} mentions in {} documents, expected {} in {}",
                e.persona, s.total_mentions, s.documents_with_mentions, e.total_mentions, e.documents_with_mentions
            )),
            None => diffs.push(format!("{}: missing", e.persona)),
        }
    }
    if let Some(r) = &out.retained_personas {
        if r != &m.retained_personas {
            diffs.push(format!("retained {r:?}, expected {:?}", m.retained_personas));
        }
    }
    let detail = if diffs.is_empty() {
        format!("mention counts match; retained {:?}", m.retained_personas)
    } else {
        diffs.join("; ")
    };
    Check::new("personas", diffs.is_empty(), detail, None)
}

pub fn verify_pipeline(manifest: &GroundTruthManifest, outputs: &PipelineOutputs, tol: &Tolerances) -> VerificationReport {
    let (topics, alignment) = check_topics(manifest, outputs, tol);
    let checks = vec![
        topics,
        check_trends(manifest, outputs, alignment.as_ref()),
        check_power(manifest, outputs),
        check_sentiment(manifest, outputs, tol),
        check_cohorts(manifest, outputs),
        check_personas(manifest, outputs),
    ];
    VerificationReport { checks }
}
