//! Topic keywords, UMass coherence, and Jaccard topic overlap.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::lda::TopicModelState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub id: u32,
    pub token: String,
    pub probability: f64,
}

/// The `n` most probable words of a topic. Ties go to the lower token id.
/// Asking for more words than the vocabulary holds returns the whole
/// vocabulary.
pub fn top_keywords(state: &TopicModelState, topic: usize, n: usize) -> Result<Vec<Keyword>> {
    if topic >= state.k {
        return Err(Error::InvalidInput(format!("topic {topic} out of range (K = {})", state.k)));
    }
    let v = state.vocab_size();
    if n > v {
        log::warn!("requested {n} keywords but vocabulary has {v}; truncating");
    }
    let mut ids: Vec<u32> = (0..v as u32).collect();
    // Probability is monotone in the raw count within one topic.
    ids.sort_by(|&a, &b| {
        state
            .topic_word_count(topic, b)
            .cmp(&state.topic_word_count(topic, a))
            .then(a.cmp(&b))
    });
    ids.truncate(n.min(v));
    Ok(ids
        .into_iter()
        .map(|id| Keyword {
            id,
            token: state.vocab.token(id).to_string(),
            probability: state.topic_word_probability(topic, id),
        })
        .collect())
}

/// Per-word sorted lists of the documents containing the word.
#[derive(Debug, Clone)]
pub struct CooccurrenceIndex {
    postings: Vec<Vec<u32>>,
}

impl CooccurrenceIndex {
    pub fn new(docs: &[Vec<u32>], vocab_size: usize) -> Self {
        let mut postings = vec![Vec::new(); vocab_size];
        for (d, doc) in docs.iter().enumerate() {
            let mut words = doc.clone();
            words.sort_unstable();
            words.dedup();
            for w in words {
                postings[w as usize].push(d as u32);
            }
        }
        CooccurrenceIndex { postings }
    }

    pub fn doc_count(&self, w: u32) -> usize {
        self.postings.get(w as usize).map_or(0, Vec::len)
    }

    pub fn co_doc_count(&self, a: u32, b: u32) -> usize {
        let (Some(pa), Some(pb)) = (self.postings.get(a as usize), self.postings.get(b as usize)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].cmp(&pb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// UMass coherence over an ordered keyword list:
/// sum over i < j of ln((D(w_i, w_j) + 1) / D(w_j)).
pub fn umass_coherence(keywords: &[u32], index: &CooccurrenceIndex) -> f64 {
    let mut score = 0.0;
    for j in 1..keywords.len() {
        // Keywords come from the corpus, so D(w_j) >= 1; the clamp only keeps
        // the score finite for foreign keyword lists.
        let dj = index.doc_count(keywords[j]).max(1) as f64;
        for i in 0..j {
            let co = index.co_doc_count(keywords[i], keywords[j]) as f64;
            score += ((co + 1.0) / dj).ln();
        }
    }
    score
}

pub fn topic_coherence(
    state: &TopicModelState,
    topic: usize,
    n: usize,
    index: &CooccurrenceIndex,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput("coherence needs at least two keywords".into()));
    }
    let ids: Vec<u32> = top_keywords(state, topic, n)?.iter().map(|k| k.id).collect();
    Ok(umass_coherence(&ids, index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub top_keywords: Vec<String>,
    pub coherence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

pub fn summarize_topics(
    state: &TopicModelState,
    n: usize,
    index: &CooccurrenceIndex,
) -> Result<Vec<TopicSummary>> {
    (0..state.k)
        .map(|t| {
            let kws = top_keywords(state, t, n)?;
            let ids: Vec<u32> = kws.iter().map(|k| k.id).collect();
            Ok(TopicSummary {
                topic_id: t,
                top_keywords: kws.into_iter().map(|k| k.token).collect(),
                coherence: umass_coherence(&ids, index),
                label: None,
            })
        })
        .collect()
}

pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Mean Jaccard similarity of keyword sets over all unordered topic pairs.
/// Fewer than two topics have no pairs and report 0.
pub fn mean_jaccard_overlap(summaries: &[TopicSummary]) -> f64 {
    let sets: Vec<HashSet<&str>> = summaries
        .iter()
        .map(|s| s.top_keywords.iter().map(String::as_str).collect())
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            total += jaccard(&sets[i], &sets[j]);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}
