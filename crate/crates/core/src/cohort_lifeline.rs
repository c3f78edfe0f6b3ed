//! Need-level cohorts and the "life of a case" topic trends: each case's token
//! stream is cut into equal positional sections and topic probabilities are
//! averaged per cohort and section.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CaseDocument;
use crate::error::{Error, Result};
use crate::topic_engine::{theta_from_counts, TopicModelState};

pub const DEFAULT_SECTIONS: usize = 10;

/// Inclusive upper bounds on interaction counts. `None` is unbounded and may
/// only appear last. Serialized as the finite `upper_bounds` plus labels, one
/// more label than bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CohortSpecRepr", from = "CohortSpecRepr")]
pub struct CohortSpec {
    pub boundaries: Vec<Option<u32>>,
    pub labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CohortSpecRepr {
    upper_bounds: Vec<u32>,
    labels: Vec<String>,
}

impl From<CohortSpec> for CohortSpecRepr {
    fn from(spec: CohortSpec) -> Self {
        CohortSpecRepr {
            upper_bounds: spec.boundaries.into_iter().flatten().collect(),
            labels: spec.labels,
        }
    }
}

impl From<CohortSpecRepr> for CohortSpec {
    fn from(r: CohortSpecRepr) -> Self {
        let mut boundaries: Vec<Option<u32>> = r.upper_bounds.into_iter().map(Some).collect();
        boundaries.push(None);
        CohortSpec { boundaries, labels: r.labels }
    }
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            boundaries: vec![Some(10), Some(40), None],
            labels: vec!["G1".into(), "G2".into(), "G3".into()],
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.boundaries.is_empty() {
            return Err(Error::Config("cohort spec needs at least one group".into()));
        }
        if self.boundaries.len() != self.labels.len() {
            return Err(Error::Config(format!(
                "{} cohort boundaries but {} labels",
                self.boundaries.len(),
                self.labels.len()
            )));
        }
        if self.boundaries.last() != Some(&None) {
            return Err(Error::Config("last cohort boundary must be unbounded".into()));
        }
        let finite: Vec<u32> = self.boundaries[..self.boundaries.len() - 1]
            .iter()
            .map(|b| b.ok_or_else(|| Error::Config("only the last cohort boundary may be unbounded".into())))
            .collect::<Result<_>>()?;
        if finite.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cohort boundaries must be strictly increasing".into()));
        }
        let mut labels = self.labels.clone();
        labels.sort();
        labels.dedup();
        if labels.len() != self.labels.len() {
            return Err(Error::Config("cohort labels must be distinct".into()));
        }
        Ok(())
    }

    pub fn label_for(&self, interaction_count: usize) -> Result<&str> {
        if interaction_count == 0 {
            return Err(Error::InvalidInput("interaction count must be positive".into()));
        }
        self.boundaries
            .iter()
            .position(|b| b.is_none_or(|ub| interaction_count <= ub as usize))
            .map(|i| self.labels[i].as_str())
            .ok_or_else(|| Error::InvalidInput(format!("no cohort covers {interaction_count} interactions")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CohortMode {
    /// Fixed interaction-count boundaries.
    Fixed(CohortSpec),
    /// Three buckets cut at the 1/3 and 2/3 quantiles of per-case counts.
    Percentile { labels: Vec<String> },
}

impl Default for CohortMode {
    fn default() -> Self {
        CohortMode::Fixed(CohortSpec::default())
    }
}

impl CohortMode {
    pub fn labels(&self) -> &[String] {
        match self {
            CohortMode::Fixed(spec) => &spec.labels,
            CohortMode::Percentile { labels } => labels,
        }
    }

    /// Resolve to concrete boundaries for this corpus.
    pub fn resolve(&self, documents: &[CaseDocument]) -> Result<CohortSpec> {
        let spec = match self {
            CohortMode::Fixed(spec) => spec.clone(),
            CohortMode::Percentile { labels } => {
                if labels.len() != 3 {
                    return Err(Error::Config("percentile cohort mode needs exactly three labels".into()));
                }
                let mut counts: Vec<f64> = documents.iter().map(|d| d.interaction_count as f64).collect();
                if counts.is_empty() {
                    return Err(Error::InvalidInput("no documents to split into cohorts".into()));
                }
                counts.sort_by(f64::total_cmp);
                // Counts are integers, so "count <= cut" is "count <= floor(cut)".
                let lower = percentile_sorted(&counts, 1.0 / 3.0).floor() as u32;
                let upper = (percentile_sorted(&counts, 2.0 / 3.0).floor() as u32).max(lower + 1);
                CohortSpec {
                    boundaries: vec![Some(lower), Some(upper), None],
                    labels: labels.clone(),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Map each case to its cohort label.
pub fn assign_cohorts(documents: &[CaseDocument], mode: &CohortMode) -> Result<BTreeMap<String, String>> {
    let spec = mode.resolve(documents)?;
    documents
        .iter()
        .map(|d| Ok((d.case_id.clone(), spec.label_for(d.interaction_count)?.to_string())))
        .collect()
}

/// Linear-interpolation quantile of sorted data, `q` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Summary of per-case interaction counts. `n_interactions` is the total
/// number of interactions; the moments and quantiles are over cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionStats {
    pub n_cases: usize,
    pub n_interactions: usize,
    pub mean: f64,
    pub std: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

impl InteractionStats {
    /// Rows in the layout of the interaction statistics table.
    pub fn table_rows(&self) -> Vec<(String, String)> {
        vec![
            ("N".into(), crate::corpus::thousands(self.n_interactions as u64)),
            ("Mean".into(), format!("{:.1}", self.mean)),
            ("Standard deviation".into(), format!("{:.1}", self.std)),
            ("25 percentile".into(), format!("{:.1}", self.p25)),
            ("Median".into(), format!("{:.1}", self.median)),
            ("75 percentile".into(), format!("{:.1}", self.p75)),
        ]
    }
}

pub fn interaction_stats(documents: &[CaseDocument]) -> Result<InteractionStats> {
    if documents.is_empty() {
        return Err(Error::InvalidInput("interaction statistics need at least one case".into()));
    }
    let mut counts: Vec<f64> = documents.iter().map(|d| d.interaction_count as f64).collect();
    let n = counts.len() as f64;
    let total: usize = documents.iter().map(|d| d.interaction_count).sum();
    let mean = total as f64 / n;
    // Sample standard deviation; a single case has none.
    let std = if counts.len() > 1 {
        (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    counts.sort_by(f64::total_cmp);
    Ok(InteractionStats {
        n_cases: documents.len(),
        n_interactions: total,
        mean,
        std,
        p25: percentile_sorted(&counts, 0.25),
        median: percentile_sorted(&counts, 0.5),
        p75: percentile_sorted(&counts, 0.75),
    })
}

/// Split `items` into `n` contiguous sections whose lengths differ by at most
/// one; earlier sections take the remainder.
pub fn segment<T>(items: &[T], n: usize) -> Vec<&[T]> {
    let n = n.max(1);
    let base = items.len() / n;
    let extra = items.len() % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        out.push(&items[start..start + len]);
        start += len;
    }
    out
}

/// Token ranges of `n` sections built from whole records: the record list is
/// split with the same remainder rule as [`segment`].
pub fn record_section_ranges(doc: &CaseDocument, n: usize) -> Vec<std::ops::Range<usize>> {
    let mut bounds: Vec<usize> = doc.record_offsets.clone();
    if bounds.is_empty() {
        bounds.push(0);
    }
    bounds.push(doc.tokens.len());
    let record_ids: Vec<usize> = (0..bounds.len() - 1).collect();
    segment(&record_ids, n)
        .into_iter()
        .map(|recs| match (recs.first(), recs.last()) {
            (Some(&a), Some(&b)) => bounds[a]..bounds[b + 1],
            _ => 0..0,
        })
        .collect()
}

fn token_section_ranges(len: usize, n: usize) -> Vec<std::ops::Range<usize>> {
    let idx: Vec<usize> = (0..len).collect();
    let mut start = 0;
    segment(&idx, n)
        .into_iter()
        .map(|s| {
            let r = start..start + s.len();
            start = r.end;
            r
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    #[default]
    Tokens,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectionInference {
    /// Resample each section's tokens against frozen topic-word counts.
    FoldIn { sweeps: usize, seed: u64 },
    /// Slice the training-time assignments of each document.
    TrainingAssignments,
    /// Use the whole-document posterior for every section.
    WholeDocument,
}

impl Default for SectionInference {
    fn default() -> Self {
        SectionInference::FoldIn { sweeps: 50, seed: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    pub n_sections: usize,
    pub segmentation: Segmentation,
    pub inference: SectionInference,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            n_sections: DEFAULT_SECTIONS,
            segmentation: Segmentation::Tokens,
            inference: SectionInference::default(),
        }
    }
}

fn section_seed(base: u64, doc: usize, section: usize) -> u64 {
    base ^ ((doc as u64) << 20 | section as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Topic distribution of every section of every document:
/// `result[doc][section][topic]`.
pub fn section_thetas(
    model: &TopicModelState,
    documents: &[CaseDocument],
    config: &TrendConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if config.n_sections == 0 {
        return Err(Error::InvalidInput("need at least one section".into()));
    }
    let needs_training = !matches!(config.inference, SectionInference::FoldIn { .. });
    if needs_training && model.docs.len() != documents.len() {
        return Err(Error::Model(format!(
            "model holds assignments for {} documents but {} were given",
            model.docs.len(),
            documents.len()
        )));
    }
    documents
        .par_iter()
        .enumerate()
        .map(|(d, doc)| {
            let ranges = match config.segmentation {
                Segmentation::Tokens => token_section_ranges(doc.tokens.len(), config.n_sections),
                Segmentation::Records => record_section_ranges(doc, config.n_sections),
            };
            let thetas = match config.inference {
                SectionInference::FoldIn { sweeps, seed } => ranges
                    .iter()
                    .enumerate()
                    .map(|(s, r)| {
                        let words = model.vocab.encode(&doc.tokens[r.clone()]);
                        let counts = model.fold_in(&words, sweeps, section_seed(seed, d, s));
                        theta_from_counts(&counts, model.alpha)
                    })
                    .collect(),
                SectionInference::TrainingAssignments => {
                    // kept[i] = number of in-vocabulary tokens before position i.
                    let mut kept = Vec::with_capacity(doc.tokens.len() + 1);
                    kept.push(0usize);
                    for t in &doc.tokens {
                        let last = *kept.last().expect("non-empty");
                        kept.push(last + usize::from(model.vocab.id(t).is_some()));
                    }
                    let z = &model.z[d];
                    if *kept.last().expect("non-empty") != z.len() {
                        return Err(Error::Model(format!("document {} does not match its training encoding", doc.case_id)));
                    }
                    ranges
                        .iter()
                        .map(|r| {
                            let mut counts = vec![0u32; model.k];
                            for &t in &z[kept[r.start]..kept[r.end]] {
                                counts[t as usize] += 1;
                            }
                            theta_from_counts(&counts, model.alpha)
                        })
                        .collect()
                }
                SectionInference::WholeDocument => {
                    let theta = model.infer_theta(d, model.alpha)?;
                    vec![theta; ranges.len()]
                }
            };
            Ok(thetas)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifelineTrend {
    pub group: String,
    pub topic_id: usize,
    pub n_documents: usize,
    pub section_means: Vec<f64>,
}

/// Mean section topic probabilities per cohort. Groups are emitted in
/// `group_order`; groups without documents are skipped with a warning.
pub fn topic_trends(
    model: &TopicModelState,
    documents: &[CaseDocument],
    cohorts: &BTreeMap<String, String>,
    group_order: &[String],
    config: &TrendConfig,
) -> Result<Vec<LifelineTrend>> {
    let thetas = section_thetas(model, documents, config)?;
    aggregate_trends(&thetas, documents, cohorts, group_order, model.k, config.n_sections)
}

pub fn aggregate_trends(
    thetas: &[Vec<Vec<f64>>],
    documents: &[CaseDocument],
    cohorts: &BTreeMap<String, String>,
    group_order: &[String],
    k: usize,
    n_sections: usize,
) -> Result<Vec<LifelineTrend>> {
    let mut trends = Vec::new();
    for group in group_order {
        let members: Vec<usize> = documents
            .iter()
            .enumerate()
            .filter(|(_, doc)| cohorts.get(&doc.case_id) == Some(group))
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            log::warn!("cohort {group} has no documents; trend omitted");
            continue;
        }
        for topic in 0..k {
            let section_means = (0..n_sections)
                .map(|s| members.iter().map(|&d| thetas[d][s][topic]).sum::<f64>() / members.len() as f64)
                .collect();
            trends.push(LifelineTrend {
                group: group.clone(),
                topic_id: topic,
                n_documents: members.len(),
                section_means,
            });
        }
    }
    Ok(trends)
}

/// Trends CSV rows: `group,topic_id,section_index,mean_probability`, with
/// 1-based section indices.
pub fn write_trends_csv<W: Write>(trends: &[LifelineTrend], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["group", "topic_id", "section_index", "mean_probability"])?;
    for t in trends {
        for (s, m) in t.section_means.iter().enumerate() {
            w.write_record([t.group.clone(), t.topic_id.to_string(), (s + 1).to_string(), format!("{m:.9}")])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trends sink>", e))?;
    Ok(())
}

pub fn read_trends_csv<R: std::io::Read>(source: R) -> Result<Vec<LifelineTrend>> {
    let mut r = csv::Reader::from_reader(source);
    let mut trends: Vec<LifelineTrend> = Vec::new();
    for row in r.records() {
        let row = row?;
        let parse_err = |what: &str| Error::Format(format!("bad {what} in trends CSV"));
        let group = row.get(0).ok_or_else(|| parse_err("group"))?.to_string();
        let topic_id: usize = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("topic_id"))?;
        let section: usize = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("section_index"))?;
        let mean: f64 = row.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("mean_probability"))?;
        match trends.last_mut() {
            Some(t) if t.group == group && t.topic_id == topic_id && t.section_means.len() + 1 == section => {
                t.section_means.push(mean)
            }
            _ if section == 1 => trends.push(LifelineTrend {
                group,
                topic_id,
                n_documents: 0,
                section_means: vec![mean],
            }),
            _ => return Err(parse_err("section ordering")),
        }
    }
    Ok(trends)
}
