//! Topic modeling: vocabulary construction, collapsed Gibbs LDA, coherence and
//! overlap diagnostics, and topic-count selection.

mod coherence;
mod lda;
mod selection;
mod vocab;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coherence::{
    jaccard, mean_jaccard_overlap, summarize_topics, top_keywords, topic_coherence,
    umass_coherence, CooccurrenceIndex, Keyword, TopicSummary,
};
pub use lda::{
    theta_from_counts, train_lda, train_lda_observed, GibbsSampler, LdaConfig, TopicCorpus,
    TopicModelState,
};
pub use selection::{
    select_from_metrics, select_k, KSelectionReport, SelectionConfig, SelectionMetrics,
    SelectionRow,
};
pub use vocab::{PruneConfig, Vocabulary};

/// On-disk form of a trained model. Assignments are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocabulary: Vocabulary,
    pub n_kw: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<Assignments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignments {
    pub docs: Vec<Vec<u32>>,
    pub z: Vec<Vec<u32>>,
    pub n_dk: Vec<Vec<u32>>,
}

impl ModelFile {
    pub fn from_state(state: &TopicModelState, include_assignments: bool) -> Self {
        ModelFile {
            k: state.k,
            alpha: state.alpha,
            beta: state.beta,
            seed: state.seed,
            iterations: state.iterations,
            vocabulary: state.vocab.clone(),
            n_kw: state.topic_word_matrix(),
            assignments: include_assignments.then(|| Assignments {
                docs: state.docs.clone(),
                z: state.z.clone(),
                n_dk: state.n_dk.clone(),
            }),
        }
    }

    pub fn into_state(self) -> Result<TopicModelState> {
        let header = lda::ModelHeader {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            iterations: self.iterations,
        };
        let mut state = TopicModelState::from_topic_word_matrix(header, self.vocabulary, &self.n_kw)?;
        if let Some(a) = self.assignments {
            state.docs = a.docs;
            state.z = a.z;
            state.n_dk = a.n_dk;
            state.check_consistency()?;
        }
        Ok(state)
    }
}

/// Keyword report rows: `topic_id,rank,token,probability`.
pub fn write_keywords_csv<W: Write>(state: &TopicModelState, n: usize, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["topic_id", "rank", "token", "probability"])?;
    for t in 0..state.k {
        for (rank, kw) in top_keywords(state, t, n)?.iter().enumerate() {
            w.write_record([
                t.to_string(),
                (rank + 1).to_string(),
                kw.token.clone(),
                format!("{:.6}", kw.probability),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<keywords sink>", e))?;
    Ok(())
}
