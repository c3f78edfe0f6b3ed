//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{PruneConfig, Vocabulary};
use crate::corpus::CaseDocument;
use crate::error::{Error, Result};

/// Documents encoded against a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCorpus {
    pub vocab: Vocabulary,
    pub docs: Vec<Vec<u32>>,
}

impl TopicCorpus {
    pub fn build(documents: &[CaseDocument], prune: &PruneConfig) -> Self {
        let vocab = Vocabulary::build(documents, prune);
        let docs = documents.iter().map(|d| vocab.encode(&d.tokens)).collect();
        TopicCorpus { vocab, docs }
    }

    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 10,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 42,
        }
    }
}

impl LdaConfig {
    pub fn with_k(k: usize) -> Self {
        LdaConfig {
            k,
            ..Default::default()
        }
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k.max(1) as f64)
    }
}

/// Sampler state. Topic-word counts are stored word-major
/// (`n_wk[w * K + k]`) so one token's conditional reads a contiguous row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelState {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocab: Vocabulary,
    /// Encoded training documents. Empty when loaded without assignments.
    pub docs: Vec<Vec<u32>>,
    pub z: Vec<Vec<u32>>,
    pub n_dk: Vec<Vec<u32>>,
    n_wk: Vec<u32>,
    pub n_k: Vec<u32>,
}

impl TopicModelState {
    pub fn n_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn topic_word_count(&self, topic: usize, word: u32) -> u32 {
        self.n_wk[word as usize * self.k + topic]
    }

    /// Smoothed topic-word probability (n_kw + beta) / (n_k + V beta).
    pub fn topic_word_probability(&self, topic: usize, word: u32) -> f64 {
        let v = self.vocab.len() as f64;
        (self.topic_word_count(topic, word) as f64 + self.beta)
            / (self.n_k[topic] as f64 + v * self.beta)
    }

    pub fn topic_word_distribution(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab.len() as u32)
            .map(|w| self.topic_word_probability(topic, w))
            .collect()
    }

    /// Topic-word counts as a K x V matrix.
    pub fn topic_word_matrix(&self) -> Vec<Vec<u32>> {
        (0..self.k)
            .map(|k| (0..self.vocab.len() as u32).map(|w| self.topic_word_count(k, w)).collect())
            .collect()
    }

    pub(crate) fn from_topic_word_matrix(
        header: ModelHeader,
        vocab: Vocabulary,
        n_kw: &[Vec<u32>],
    ) -> Result<Self> {
        let (k, v) = (header.k, vocab.len());
        if n_kw.len() != k || n_kw.iter().any(|row| row.len() != v) {
            return Err(Error::Model(format!("topic-word matrix is not {k} x {v}")));
        }
        let mut n_wk = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        for (t, row) in n_kw.iter().enumerate() {
            for (w, &c) in row.iter().enumerate() {
                n_wk[w * k + t] = c;
                n_k[t] += c;
            }
        }
        Ok(TopicModelState {
            k,
            alpha: header.alpha,
            beta: header.beta,
            seed: header.seed,
            iterations: header.iterations,
            vocab,
            docs: Vec::new(),
            z: Vec::new(),
            n_dk: Vec::new(),
            n_wk,
            n_k,
        })
    }

    /// Recompute every count matrix from `z` and compare with the stored ones.
    pub fn check_consistency(&self) -> Result<()> {
        let (k, v) = (self.k, self.vocab.len());
        if self.z.len() != self.docs.len() || self.n_dk.len() != self.docs.len() {
            return Err(Error::Model("assignment and document counts differ".into()));
        }
        let mut n_dk = vec![vec![0u32; k]; self.docs.len()];
        let mut n_wk = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        for (d, (doc, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            if doc.len() != zd.len() {
                return Err(Error::Model(format!("document {d} has {} tokens but {} assignments", doc.len(), zd.len())));
            }
            for (&w, &t) in doc.iter().zip(zd) {
                let t = t as usize;
                if t >= k {
                    return Err(Error::Model(format!("assignment {t} out of range")));
                }
                n_dk[d][t] += 1;
                n_wk[w as usize * k + t] += 1;
                n_k[t] += 1;
            }
        }
        if n_dk != self.n_dk {
            return Err(Error::Model("document-topic counts disagree with z".into()));
        }
        if n_wk != self.n_wk {
            return Err(Error::Model("topic-word counts disagree with z".into()));
        }
        if n_k != self.n_k {
            return Err(Error::Model("topic totals disagree with z".into()));
        }
        Ok(())
    }

    /// Posterior mean document-topic proportions for training document `d`.
    pub fn infer_theta(&self, d: usize, alpha: f64) -> Result<Vec<f64>> {
        let counts = self
            .n_dk
            .get(d)
            .ok_or_else(|| Error::InvalidInput(format!("document index {d} out of range ({} documents)", self.n_dk.len())))?;
        Ok(theta_from_counts(counts, alpha))
    }

    /// Fold-in Gibbs for an unseen token sequence with topic-word counts held
    /// fixed. Returns the document-topic counts after the final sweep.
    pub fn fold_in(&self, words: &[u32], sweeps: usize, seed: u64) -> Vec<u32> {
        let k = self.k;
        let mut counts = vec![0u32; k];
        if words.is_empty() {
            return counts;
        }
        if k == 1 {
            counts[0] = words.len() as u32;
            return counts;
        }
        let v_beta = self.vocab.len() as f64 * self.beta;
        let denom: Vec<f64> = self.n_k.iter().map(|&n| 1.0 / (n as f64 + v_beta)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for &t in &z {
            counts[t] += 1;
        }
        let mut cumulative = vec![0.0f64; k];
        for _ in 0..sweeps {
            for (i, &w) in words.iter().enumerate() {
                counts[z[i]] -= 1;
                let row = &self.n_wk[w as usize * k..(w as usize + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (counts[t] as f64 + self.alpha) * (row[t] as f64 + self.beta) * denom[t];
                    cumulative[t] = total;
                }
                let t = draw(&cumulative, rng.random::<f64>() * total);
                z[i] = t;
                counts[t] += 1;
            }
        }
        counts
    }

    /// Mean per-token log-likelihood of `docs` under fold-in topic mixtures.
    pub fn heldout_log_likelihood(&self, docs: &[Vec<u32>], sweeps: usize, seed: u64) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for (d, words) in docs.iter().enumerate() {
            if words.is_empty() {
                continue;
            }
            let counts = self.fold_in(words, sweeps, seed.wrapping_add(d as u64));
            let theta = theta_from_counts(&counts, self.alpha);
            for &w in words {
                let p: f64 = (0..self.k).map(|t| theta[t] * self.topic_word_probability(t, w)).sum();
                total += p.ln();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ModelHeader {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
}

/// (n_dk + alpha) / (len + K alpha).
pub fn theta_from_counts(counts: &[u32], alpha: f64) -> Vec<f64> {
    let len: u32 = counts.iter().sum();
    let denom = len as f64 + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

fn draw(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Step-wise collapsed Gibbs sampler.
pub struct GibbsSampler {
    state: TopicModelState,
    rng: ChaCha8Rng,
    sweeps_done: usize,
}

impl GibbsSampler {
    pub fn new(corpus: &TopicCorpus, config: &LdaConfig) -> Result<Self> {
        let k = config.k;
        if k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        if corpus.vocab.is_empty() {
            return Err(Error::InvalidInput("vocabulary is empty".into()));
        }
        let n_tokens = corpus.n_tokens();
        if k > n_tokens {
            return Err(Error::InvalidInput(format!("K = {k} exceeds the {n_tokens} corpus tokens")));
        }
        let alpha = config.alpha_value();
        if !(alpha > 0.0 && config.beta > 0.0) {
            return Err(Error::InvalidInput("priors must be positive".into()));
        }
        let v = corpus.vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut n_dk = vec![vec![0u32; k]; corpus.docs.len()];
        let mut n_wk = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        let z: Vec<Vec<u32>> = corpus
            .docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = if k == 1 { 0 } else { rng.random_range(0..k) };
                        n_dk[d][t] += 1;
                        n_wk[w as usize * k + t] += 1;
                        n_k[t] += 1;
                        t as u32
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            state: TopicModelState {
                k,
                alpha,
                beta: config.beta,
                seed: config.seed,
                iterations: 0,
                vocab: corpus.vocab.clone(),
                docs: corpus.docs.clone(),
                z,
                n_dk,
                n_wk,
                n_k,
            },
            rng,
            sweeps_done: 0,
        })
    }

    /// One full pass over every token in the corpus.
    pub fn sweep(&mut self) {
        let s = &mut self.state;
        let k = s.k;
        self.sweeps_done += 1;
        s.iterations = self.sweeps_done;
        if k == 1 {
            return;
        }
        let v_beta = s.vocab.len() as f64 * s.beta;
        let mut cumulative = vec![0.0f64; k];
        for d in 0..s.docs.len() {
            for i in 0..s.docs[d].len() {
                let w = s.docs[d][i] as usize;
                let old = s.z[d][i] as usize;
                s.n_dk[d][old] -= 1;
                s.n_wk[w * k + old] -= 1;
                s.n_k[old] -= 1;

                let doc_counts = &s.n_dk[d];
                let row = &s.n_wk[w * k..(w + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (doc_counts[t] as f64 + s.alpha) * (row[t] as f64 + s.beta)
                        / (s.n_k[t] as f64 + v_beta);
                    cumulative[t] = total;
                }
                let new = draw(&cumulative, self.rng.random::<f64>() * total);

                s.z[d][i] = new as u32;
                s.n_dk[d][new] += 1;
                s.n_wk[w * k + new] += 1;
                s.n_k[new] += 1;
            }
        }
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn state(&self) -> &TopicModelState {
        &self.state
    }

    pub fn into_state(self) -> TopicModelState {
        self.state
    }
}

pub fn train_lda(corpus: &TopicCorpus, config: &LdaConfig) -> Result<TopicModelState> {
    train_lda_observed(corpus, config, 0, |_| Ok(()))
}

/// Train, calling `observe` with the current state every `every` sweeps
/// (never when `every` is 0).
pub fn train_lda_observed<F>(
    corpus: &TopicCorpus,
    config: &LdaConfig,
    every: usize,
    mut observe: F,
) -> Result<TopicModelState>
where
    F: FnMut(&TopicModelState) -> Result<()>,
{
    if config.iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    let mut sampler = GibbsSampler::new(corpus, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
        if every > 0 && sampler.sweeps_done() % every == 0 {
            observe(sampler.state())?;
        }
    }
    Ok(sampler.into_state())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(raw: &[&str]) -> TopicCorpus {
        let docs: Vec<CaseDocument> = raw
            .iter()
            .enumerate()
            .map(|(i, d)| CaseDocument::new(format!("d{i}"), 1, d.split_whitespace().map(str::to_string).collect()))
            .collect();
        TopicCorpus::build(&docs, &PruneConfig::none())
    }

    #[test]
    fn single_topic_assigns_everything_to_zero() {
        let c = corpus(&["a b c a", "b c d"]);
        let m = train_lda(&c, &LdaConfig { iterations: 5, ..LdaConfig::with_k(1) }).unwrap();
        assert!(m.z.iter().flatten().all(|&t| t == 0));
        for d in 0..2 {
            let theta = m.infer_theta(d, m.alpha).unwrap();
            assert_eq!(theta, vec![1.0]);
        }
        m.check_consistency().unwrap();
    }

    #[test]
    fn theta_formula() {
        let theta = theta_from_counts(&[3, 1], 0.5);
        assert!((theta[0] - 0.7).abs() < 1e-12);
        assert!((theta[1] - 0.3).abs() < 1e-12);
        assert_eq!(theta_from_counts(&[0, 0], 0.5), vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_configs() {
        let c = corpus(&["a b"]);
        assert!(train_lda(&c, &LdaConfig::with_k(3)).is_err());
        assert!(train_lda(&c, &LdaConfig { iterations: 0, ..LdaConfig::with_k(1) }).is_err());
        let empty = corpus(&[""]);
        assert!(train_lda(&empty, &LdaConfig::with_k(1)).is_err());
    }

    #[test]
    fn infer_theta_out_of_range() {
        let c = corpus(&["a b"]);
        let m = train_lda(&c, &LdaConfig { iterations: 1, ..LdaConfig::with_k(2) }).unwrap();
        assert!(m.infer_theta(5, 0.1).is_err());
    }

    #[test]
    fn same_seed_same_state() {
        let c = corpus(&["a b c d a b", "c d e f c d", "a e f b"]);
        let cfg = LdaConfig { iterations: 30, alpha: Some(0.1), ..LdaConfig::with_k(3) };
        let a = train_lda(&c, &cfg).unwrap();
        let b = train_lda(&c, &cfg).unwrap();
        assert_eq!(a, b);
        let other = train_lda(&c, &LdaConfig { seed: 7, ..cfg }).unwrap();
        other.check_consistency().unwrap();
    }

    #[test]
    fn counts_stay_consistent_each_sweep() {
        let c = corpus(&["a b c d a b", "c d e f c d", "a e f b", "f f e"]);
        let mut s = GibbsSampler::new(&c, &LdaConfig { alpha: Some(0.3), ..LdaConfig::with_k(3) }).unwrap();
        for _ in 0..20 {
            s.sweep();
            s.state().check_consistency().unwrap();
        }
    }

    #[test]
    fn topic_word_rows_normalize() {
        let c = corpus(&["a b c d a b", "c d e f c d"]);
        let m = train_lda(&c, &LdaConfig { iterations: 10, ..LdaConfig::with_k(4) }).unwrap();
        for t in 0..4 {
            let s: f64 = m.topic_word_distribution(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fold_in_counts_cover_all_words() {
        let c = corpus(&["a b c d a b", "c d e f c d"]);
        let m = train_lda(&c, &LdaConfig { iterations: 10, ..LdaConfig::with_k(2) }).unwrap();
        let counts = m.fold_in(&[0, 1, 2, 2], 20, 3);
        assert_eq!(counts.iter().sum::<u32>(), 4);
        assert_eq!(m.fold_in(&[], 20, 3), vec![0, 0]);
        assert_eq!(m.fold_in(&[0, 1], 20, 3), m.fold_in(&[0, 1], 20, 3));
    }
}
