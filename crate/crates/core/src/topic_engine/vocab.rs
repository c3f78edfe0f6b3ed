use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Vocabulary pruning applied before training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Tokens in fewer documents than this are dropped.
    pub min_doc_frequency: usize,
    /// Fraction of the most frequent tokens (by corpus count) to drop.
    pub top_frequency_fraction: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            min_doc_frequency: 2,
            top_frequency_fraction: 0.005,
        }
    }
}

impl PruneConfig {
    pub fn none() -> Self {
        PruneConfig {
            min_doc_frequency: 1,
            top_frequency_fraction: 0.0,
        }
    }
}

/// Token ids are assigned in ascending lexicographic order of the retained
/// tokens, so id order is also a stable tie-breaker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
    doc_frequency: Vec<u32>,
}

impl Vocabulary {
    pub fn build<D, S>(documents: &[D], prune: &PruneConfig) -> Self
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut df: HashMap<&str, u32> = HashMap::new();
        let mut cf: HashMap<&str, u64> = HashMap::new();
        for doc in documents {
            let mut seen: Vec<&str> = doc.as_ref().iter().map(|t| t.as_ref()).collect();
            for t in &seen {
                *cf.entry(t).or_default() += 1;
            }
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u32)> = df
            .into_iter()
            .filter(|&(_, d)| d as usize >= prune.min_doc_frequency)
            .collect();
        let n_top = (kept.len() as f64 * prune.top_frequency_fraction).floor() as usize;
        if n_top > 0 {
            kept.sort_by(|a, b| cf[b.0].cmp(&cf[a.0]).then_with(|| a.0.cmp(b.0)));
            kept.drain(..n_top);
        }
        kept.sort_unstable_by(|a, b| a.0.cmp(b.0));
        Self::from_parts(
            kept.iter().map(|(t, _)| t.to_string()).collect(),
            kept.iter().map(|&(_, d)| d).collect(),
        )
    }

    pub(crate) fn from_parts(id_to_token: Vec<String>, doc_frequency: Vec<u32>) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            id_to_token,
            token_to_id,
            doc_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn doc_frequency(&self, id: u32) -> u32 {
        self.doc_frequency[id as usize]
    }

    /// Map tokens to ids, skipping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    doc_frequency: Vec<u32>,
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        VocabularyRepr {
            tokens: self.id_to_token.clone(),
            doc_frequency: self.doc_frequency.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = VocabularyRepr::deserialize(d)?;
        if repr.tokens.len() != repr.doc_frequency.len() {
            return Err(serde::de::Error::custom("tokens and doc_frequency lengths differ"));
        }
        Ok(Vocabulary::from_parts(repr.tokens, repr.doc_frequency))
    }
}
