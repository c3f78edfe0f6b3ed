//! Plain-text tables for corpus, interaction, sentiment, persona and topic summaries.

use crate::corpus::CorpusStats;
use crate::cohort_lifeline::InteractionStats;
use crate::persona_power::{PersonaLexicon, PersonaReport};
use crate::sentiment::SentimentSummary;
use crate::topic_engine::TopicSummary;

/// Columns padded to their widest cell, separated by two spaces, with a
/// dashed rule under the header. Trailing spaces are trimmed.
pub fn text_table(title: &str, headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = format!("{title}\n");
    out.push_str(&line(headers.to_vec()));
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn pairs(rows: Vec<(String, String)>) -> Vec<Vec<String>> {
    rows.into_iter().map(|(a, b)| vec![a, b]).collect()
}

pub fn corpus_table(stats: &CorpusStats) -> String {
    text_table("Corpus Statistics", &["Metric", "Value"], &pairs(stats.table_rows()))
}

pub fn interaction_table(stats: &InteractionStats) -> String {
    text_table(
        "Descriptive statistics on family interactions",
        &["Statistic", "Value"],
        &pairs(stats.table_rows()),
    )
}

pub fn sentiment_table(summary: &SentimentSummary) -> String {
    let rows: Vec<Vec<String>> = summary.table_rows().into_iter().map(|(a, b, c)| vec![a, b, c]).collect();
    text_table(
        &format!("Sentence sentiment (sentences with at least {} tokens)", summary.min_tokens),
        &["Class", "Sentences", "Share"],
        &rows,
    )
}

pub fn persona_table(report: &PersonaReport, lexicon: &PersonaLexicon) -> String {
    let rows: Vec<Vec<String>> = report.table_rows(lexicon).into_iter().map(Vec::from).collect();
    text_table("Persona references", &PersonaReport::TABLE_HEADER, &rows)
}

pub fn topics_table(topics: &[TopicSummary]) -> String {
    let rows: Vec<Vec<String>> = topics
        .iter()
        .map(|t| vec![t.topic_id.to_string(), format!("{:.2}", t.coherence), t.top_keywords.join(", ")])
        .collect();
    text_table("Topics", &["Topic", "Coherence", "Keywords"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_columns() {
        let t = text_table("T", &["a", "bbb"], &[vec!["long cell".into(), "1".into()], vec!["x".into(), "22".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "T");
        assert_eq!(lines[1], "a          bbb");
        assert_eq!(lines[2], "---------  ---");
        assert_eq!(lines[3], "long cell  1");
        assert_eq!(lines[4], "x          22");
    }

    #[test]
    fn corpus_table_layout() {
        let s = CorpusStats {
            n_documents: 310,
            long_threshold: 1500,
            n_long_documents: 235,
            mean_words: 3835.2,
            max_words: 38748,
            vocab_size: 44407,
        };
        let t = corpus_table(&s);
        assert!(t.contains("Number of casenotes with more than 1500 words  235"));
        assert!(t.contains("38,748"));
        assert!(t.contains("Average number of words per casenote"));
        assert!(t.contains("3,835"));
        assert!(t.contains("44,407"));
    }
}
