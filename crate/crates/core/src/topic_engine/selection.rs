//! Choosing the number of topics by the gap between normalized coherence and
//! normalized keyword overlap.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coherence::{mean_jaccard_overlap, summarize_topics, CooccurrenceIndex};
use super::lda::{train_lda, LdaConfig, TopicCorpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_values: Vec<usize>,
    pub keyword_counts: Vec<usize>,
    /// Training template; `k` is overwritten per candidate and a `None` alpha
    /// resolves to 50 / K for each candidate.
    pub lda: LdaConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k_values: (1..=30).collect(),
            keyword_counts: vec![15, 20, 25, 30],
            lda: LdaConfig::default(),
        }
    }
}

/// Raw metrics for one (K, N) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub k: usize,
    pub n: usize,
    pub coherence_mean: f64,
    pub coherence_sum: f64,
    pub mean_jaccard_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    #[serde(flatten)]
    pub metrics: SelectionMetrics,
    pub normalized_coherence: f64,
    pub normalized_overlap: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub candidate_k: Vec<usize>,
    pub keyword_counts: Vec<usize>,
    pub rows: Vec<SelectionRow>,
    /// Best K for each keyword count, in `keyword_counts` order.
    pub best_k_per_n: Vec<(usize, usize)>,
    pub selected_k: usize,
    pub warnings: Vec<String>,
}

fn min_max(values: &[f64]) -> Option<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| (v - lo) / span).collect())
}

/// Turn raw per-(K, N) metrics into a selection. Within each N both metrics
/// are min-max normalized across K; divergence is normalized coherence minus
/// normalized overlap. The per-N winner is the largest divergence (smallest K
/// on ties) and the overall pick is the most frequent per-N winner (smallest
/// K on ties).
pub fn select_from_metrics(metrics: &[SelectionMetrics]) -> Result<KSelectionReport> {
    if metrics.is_empty() {
        return Err(Error::InvalidInput("no candidate topic counts".into()));
    }
    let mut by_n: BTreeMap<usize, Vec<SelectionMetrics>> = BTreeMap::new();
    for m in metrics {
        by_n.entry(m.n).or_default().push(*m);
    }
    let mut keyword_counts: Vec<usize> = Vec::new();
    for m in metrics {
        if !keyword_counts.contains(&m.n) {
            keyword_counts.push(m.n);
        }
    }
    let mut candidate_k: Vec<usize> = metrics.iter().map(|m| m.k).collect();
    candidate_k.sort_unstable();
    candidate_k.dedup();

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for (&n, cells) in &mut by_n {
        cells.sort_by_key(|m| m.k);
        let coh: Vec<f64> = cells.iter().map(|m| m.coherence_mean).collect();
        let ovl: Vec<f64> = cells.iter().map(|m| m.mean_jaccard_overlap).collect();
        let norm_c = min_max(&coh).unwrap_or_else(|| {
            warnings.push(format!("coherence is constant across K for N = {n}; normalized to 0"));
            vec![0.0; coh.len()]
        });
        let norm_o = min_max(&ovl).unwrap_or_else(|| {
            warnings.push(format!("overlap is constant across K for N = {n}; normalized to 0"));
            vec![0.0; ovl.len()]
        });
        let mut winner: Option<(usize, f64)> = None;
        for (i, m) in cells.iter().enumerate() {
            let divergence = norm_c[i] - norm_o[i];
            if winner.is_none_or(|(_, d)| divergence > d) {
                winner = Some((m.k, divergence));
            }
            rows.push(SelectionRow {
                metrics: *m,
                normalized_coherence: norm_c[i],
                normalized_overlap: norm_o[i],
                divergence,
            });
        }
        best.insert(n, winner.expect("non-empty group").0);
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let best_k_per_n: Vec<(usize, usize)> = keyword_counts.iter().map(|n| (*n, best[n])).collect();
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, k) in &best_k_per_n {
        *votes.entry(*k).or_default() += 1;
    }
    let top = votes.values().copied().max().unwrap_or(0);
    let selected_k = votes
        .iter()
        .find(|(_, &c)| c == top)
        .map(|(&k, _)| k)
        .expect("at least one vote");
    rows.sort_by_key(|r| (r.metrics.n, r.metrics.k));
    Ok(KSelectionReport {
        candidate_k,
        keyword_counts,
        rows,
        best_k_per_n,
        selected_k,
        warnings,
    })
}

/// Train one model per candidate K (in parallel) and score every keyword count.
pub fn select_k(corpus: &TopicCorpus, config: &SelectionConfig) -> Result<KSelectionReport> {
    if config.k_values.is_empty() {
        return Err(Error::InvalidInput("candidate K range is empty".into()));
    }
    if config.keyword_counts.is_empty() {
        return Err(Error::InvalidInput("no keyword counts given".into()));
    }
    if let Some(&n) = config.keyword_counts.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidInput(format!("keyword count {n} is below 2")));
    }
    let index = CooccurrenceIndex::new(&corpus.docs, corpus.vocab.len());
    let per_k: Vec<Vec<SelectionMetrics>> = config
        .k_values
        .par_iter()
        .map(|&k| -> Result<Vec<SelectionMetrics>> {
            let lda = LdaConfig { k, ..config.lda };
            let model = train_lda(corpus, &lda)?;
            config
                .keyword_counts
                .iter()
                .map(|&n| {
                    let summaries = summarize_topics(&model, n, &index)?;
                    let coherence_sum: f64 = summaries.iter().map(|s| s.coherence).sum();
                    Ok(SelectionMetrics {
                        k,
                        n,
                        coherence_mean: coherence_sum / k as f64,
                        coherence_sum,
                        mean_jaccard_overlap: mean_jaccard_overlap(&summaries),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    select_from_metrics(&per_k.into_iter().flatten().collect::<Vec<_>>())
}
