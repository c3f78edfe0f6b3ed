//! The pipeline stages. Each reads upstream artifacts from the output
//! directory, writes its own atomically, and records a run manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::artifacts::{
    atomic_write_bytes, manifest_key, read_json, read_jsonl, sha256_bytes, sha256_file, to_json_bytes,
    to_jsonl_bytes, RunManifest,
};
use super::config::{Lexicons, PipelineConfig};
use super::figures::emit_figures;
use super::tables;
use crate::cohort_lifeline::{assign_cohorts, interaction_stats, read_trends_csv, topic_trends, write_trends_csv, LifelineTrend};
use crate::corpus::{
    collate_by_case, corpus_stats, load_records, prepare_documents, write_records_csv, CaseDocument, CollatedCase,
    RecordFormat, RowError,
};
use crate::error::{Error, Result};
use crate::persona_power::{
    analyze_cases, filter_rare_personas, ledgers_by_group, persona_stats, write_matrix_csv, write_scores_csv,
    CasePersonas, PersonaReport, PowerLedger, Roster,
};
use crate::sentiment::{corpus_sentiment, write_sentences_csv, SentimentSummary};
use crate::synth_oracle::{
    generate_corpus_with, measure_svo_recall, verify_pipeline, write_roster_csv, GroundTruthManifest, LearnedTopics,
    PipelineOutputs, RecallReport, TemplateSet, VerificationReport,
};
use crate::topic_engine::{
    select_k, summarize_topics, train_lda, write_keywords_csv, CooccurrenceIndex, KSelectionReport, LdaConfig,
    ModelFile, PruneConfig, SelectionConfig, TopicCorpus, TopicSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Stats,
    Train,
    SelectK,
    Trends,
    Sentiment,
    Personas,
    Power,
    Synth,
    Verify,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Ingest,
        Stage::Stats,
        Stage::Train,
        Stage::SelectK,
        Stage::Trends,
        Stage::Sentiment,
        Stage::Personas,
        Stage::Power,
        Stage::Synth,
        Stage::Verify,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Stats => "stats",
            Stage::Train => "train",
            Stage::SelectK => "select-k",
            Stage::Trends => "trends",
            Stage::Sentiment => "sentiment",
            Stage::Personas => "personas",
            Stage::Power => "power",
            Stage::Synth => "synth",
            Stage::Verify => "verify",
            Stage::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Artifact names, relative to the output directory.
pub const COLLATED: &str = "corpus/collated.jsonl";
pub const DOCUMENTS: &str = "corpus/documents.jsonl";
pub const INGEST_SUMMARY: &str = "corpus/ingest.json";
pub const CORPUS_STATS: &str = "stats/corpus_stats.json";
pub const INTERACTION_STATS: &str = "stats/interaction_stats.json";
pub const COHORTS: &str = "stats/cohorts.csv";
pub const STATS_TABLES: &str = "stats/tables.txt";
pub const SELECTION_REPORT: &str = "select_k/report.json";
pub const SELECTION_METRICS: &str = "select_k/metrics.csv";
pub const MODEL: &str = "model/model.json";
pub const TOPICS: &str = "model/topics.json";
pub const TOPICS_TABLE: &str = "model/topics.txt";
pub const KEYWORDS: &str = "model/keywords.csv";
pub const TRENDS: &str = "trends/trends.csv";
pub const SENTENCES: &str = "sentiment/sentences.csv";
pub const SENTIMENT_SUMMARY: &str = "sentiment/summary.json";
pub const SENTIMENT_TABLE: &str = "sentiment/table.txt";
pub const CASE_PERSONAS: &str = "personas/cases.jsonl";
pub const PERSONA_REPORT: &str = "personas/report.json";
pub const RETAINED: &str = "personas/retained.json";
pub const PERSONA_TABLE: &str = "personas/table.txt";
pub const LEDGERS: &str = "power/ledgers.json";
pub const SCORES: &str = "power/scores.csv";
pub const MATRIX: &str = "power/matrix.csv";
pub const SYNTH_CORPUS: &str = "synth/corpus.csv";
pub const SYNTH_ROSTER: &str = "synth/roster.csv";
pub const SYNTH_MANIFEST: &str = "synth/manifest.json";
pub const SYNTH_SPEC: &str = "synth/spec.json";
pub const SYNTH_RECALL: &str = "synth/recall.json";
pub const VERIFY_REPORT: &str = "verify/report.json";
pub const VERIFY_TEXT: &str = "verify/report.txt";
pub const REPORT_TABLES: &str = "report/tables.txt";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub corpus: String,
    pub records_loaded: usize,
    pub dropped_empty: usize,
    pub row_errors: Vec<RowError>,
    pub duplicates_removed: usize,
    pub n_cases: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallSummary {
    pub clean: RecallReport,
    pub distractor: RecallReport,
    pub min_distractor_recall: f64,
    pub distractor_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Ran(String),
    UpToDate,
}

pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
    pub force: bool,
    pub lexicons: Lexicons,
    config_hash: String,
}

struct Outputs<'a> {
    out: &'a Path,
    files: BTreeMap<String, String>,
}

impl Outputs<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        atomic_write_bytes(&self.out.join(rel), bytes)?;
        self.files.insert(rel.to_string(), sha256_bytes(bytes));
        Ok(())
    }

    fn write_with<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(rel, &buf)
    }

    fn record(&mut self, path: &Path) -> Result<()> {
        self.files.insert(manifest_key(self.out, path), sha256_file(path)?);
        Ok(())
    }
}

fn text_bytes(s: String) -> Vec<u8> {
    s.into_bytes()
}

impl Context {
    pub fn new(config: PipelineConfig, force: bool) -> Result<Self> {
        config.validate()?;
        let lexicons = config.lexicons()?;
        Ok(Context {
            out: config.output_dir.clone(),
            config_hash: config.hash(),
            config,
            force,
            lexicons,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.out.join("manifests").join(format!("{}.json", stage.name()))
    }

    fn require(&self, rel: &str, producer: Stage) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                stage: producer.name().into(),
                path: p,
            })
        }
    }

    fn corpus_path(&self) -> Result<PathBuf> {
        match &self.config.inputs.corpus {
            Some(p) => Ok(p.clone()),
            None => self.require(SYNTH_CORPUS, Stage::Synth),
        }
    }

    fn roster_path(&self) -> Option<PathBuf> {
        match (&self.config.inputs.roster, &self.config.inputs.corpus) {
            (Some(p), _) => Some(p.clone()),
            (None, None) => Some(self.path(SYNTH_ROSTER)).filter(|p| p.is_file()),
            _ => None,
        }
    }

    fn lexicon_inputs(&self) -> Vec<PathBuf> {
        self.config.inputs.lexicon_files().into_iter().map(Path::to_path_buf).collect()
    }

    fn group_order(&self) -> Vec<String> {
        self.config.cohorts.labels().to_vec()
    }

    /// Files a stage reads; a missing upstream artifact is an error naming
    /// the stage that produces it.
    fn inputs(&self, stage: Stage) -> Result<Vec<PathBuf>> {
        let mut v = match stage {
            Stage::Ingest => {
                let mut v = vec![self.corpus_path()?];
                v.extend(self.lexicon_inputs());
                v
            }
            Stage::Stats | Stage::SelectK => vec![self.require(DOCUMENTS, Stage::Ingest)?],
            Stage::Train => {
                let mut v = vec![self.require(DOCUMENTS, Stage::Ingest)?];
                if self.config.topics.k.is_none() {
                    v.push(self.require(SELECTION_REPORT, Stage::SelectK)?);
                }
                v
            }
            Stage::Trends => vec![
                self.require(MODEL, Stage::Train)?,
                self.require(DOCUMENTS, Stage::Ingest)?,
                self.require(COHORTS, Stage::Stats)?,
            ],
            Stage::Sentiment => {
                let mut v = vec![self.require(COLLATED, Stage::Ingest)?];
                v.extend(self.lexicon_inputs());
                v
            }
            Stage::Personas => {
                let mut v = vec![self.require(COLLATED, Stage::Ingest)?];
                v.extend(self.roster_path());
                v.extend(self.lexicon_inputs());
                v
            }
            Stage::Power => {
                let mut v = vec![
                    self.require(CASE_PERSONAS, Stage::Personas)?,
                    self.require(RETAINED, Stage::Personas)?,
                    self.require(COHORTS, Stage::Stats)?,
                ];
                v.extend(self.lexicon_inputs());
                v
            }
            Stage::Synth => {
                let mut v = self.lexicon_inputs();
                v.extend(self.config.synth.spec_path.clone());
                v
            }
            Stage::Verify => vec![
                self.require(SYNTH_MANIFEST, Stage::Synth)?,
                self.require(MODEL, Stage::Train)?,
                self.require(TRENDS, Stage::Trends)?,
                self.require(LEDGERS, Stage::Power)?,
                self.require(SENTIMENT_SUMMARY, Stage::Sentiment)?,
                self.require(COHORTS, Stage::Stats)?,
                self.require(PERSONA_REPORT, Stage::Personas)?,
                self.require(RETAINED, Stage::Personas)?,
            ],
            Stage::Report => vec![
                self.require(CORPUS_STATS, Stage::Stats)?,
                self.require(INTERACTION_STATS, Stage::Stats)?,
                self.require(TOPICS, Stage::Train)?,
                self.require(TRENDS, Stage::Trends)?,
                self.require(SENTIMENT_SUMMARY, Stage::Sentiment)?,
                self.require(PERSONA_REPORT, Stage::Personas)?,
                self.require(LEDGERS, Stage::Power)?,
            ],
        };
        v.dedup();
        Ok(v)
    }

    /// Run one stage behind the checksum guard.
    pub fn run(&self, stage: Stage) -> Result<StageOutcome> {
        if stage == Stage::Verify {
            self.require(SYNTH_MANIFEST, Stage::Synth)?;
            for upstream in self.verify_upstream() {
                let outcome = self.run(upstream)?;
                log::info!("{upstream}: {outcome:?}");
            }
        }
        let inputs = self.inputs(stage)?;
        let mut sums = BTreeMap::new();
        for p in &inputs {
            sums.insert(manifest_key(&self.out, p), sha256_file(p)?);
        }
        let manifest_path = self.manifest_path(stage);
        if !self.force && manifest_path.is_file() {
            if let Ok(m) = read_json::<RunManifest>(&manifest_path) {
                if m.is_current(&self.out, &self.config_hash, &sums) {
                    return Ok(StageOutcome::UpToDate);
                }
            }
        }
        let mut outputs = Outputs {
            out: &self.out,
            files: BTreeMap::new(),
        };
        let summary = match stage {
            Stage::Ingest => self.ingest(&mut outputs)?,
            Stage::Stats => self.stats(&mut outputs)?,
            Stage::SelectK => self.select_k(&mut outputs)?,
            Stage::Train => self.train(&mut outputs)?,
            Stage::Trends => self.trends(&mut outputs)?,
            Stage::Sentiment => self.sentiment(&mut outputs)?,
            Stage::Personas => self.personas(&mut outputs)?,
            Stage::Power => self.power(&mut outputs)?,
            Stage::Synth => self.synth(&mut outputs)?,
            Stage::Verify => self.verify(&mut outputs)?,
            Stage::Report => self.report(&mut outputs)?,
        };
        let manifest = RunManifest {
            stage: stage.name().into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            inputs: sums,
            outputs: outputs.files,
        };
        atomic_write_bytes(&manifest_path, &to_json_bytes(&manifest)?)?;
        Ok(StageOutcome::Ran(summary))
    }

    fn verify_upstream(&self) -> Vec<Stage> {
        let mut v = vec![Stage::Ingest, Stage::Stats];
        if self.config.topics.k.is_none() {
            v.push(Stage::SelectK);
        }
        v.extend([Stage::Train, Stage::Trends, Stage::Sentiment, Stage::Personas, Stage::Power]);
        v
    }

    fn documents(&self) -> Result<Vec<CaseDocument>> {
        read_jsonl(&self.require(DOCUMENTS, Stage::Ingest)?)
    }

    fn cohorts(&self) -> Result<BTreeMap<String, String>> {
        let path = self.require(COHORTS, Stage::Stats)?;
        let mut r = csv::Reader::from_path(&path)?;
        let mut out = BTreeMap::new();
        for row in r.records() {
            let row = row?;
            out.insert(row[0].to_string(), row[2].to_string());
        }
        Ok(out)
    }

    fn prune(&self) -> PruneConfig {
        PruneConfig {
            min_doc_frequency: self.config.topics.min_doc_frequency,
            top_frequency_fraction: self.config.topics.top_frequency_fraction,
        }
    }

    fn ingest(&self, o: &mut Outputs) -> Result<String> {
        let path = self.corpus_path()?;
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let loaded = load_records(BufReader::new(file), RecordFormat::from_path(&path))?;
        for e in &loaded.row_errors {
            log::warn!("{} line {}: {}", path.display(), e.line, e.message);
        }
        let collation = collate_by_case(&loaded.records)?;
        let docs = prepare_documents(&collation.cases, &self.lexicons.stopwords, &self.lexicons.names);
        o.write(COLLATED, &to_jsonl_bytes(&collation.cases)?)?;
        o.write(DOCUMENTS, &to_jsonl_bytes(&docs)?)?;
        let summary = IngestSummary {
            corpus: manifest_key(&self.out, &path),
            records_loaded: loaded.records.len(),
            dropped_empty: loaded.dropped_empty,
            row_errors: loaded.row_errors,
            duplicates_removed: collation.duplicates_removed,
            n_cases: collation.cases.len(),
        };
        o.write(INGEST_SUMMARY, &to_json_bytes(&summary)?)?;
        Ok(format!(
            "{} records ({} empty dropped, {} bad rows, {} duplicates) into {} cases",
            summary.records_loaded,
            summary.dropped_empty,
            summary.row_errors.len(),
            summary.duplicates_removed,
            summary.n_cases
        ))
    }

    fn stats(&self, o: &mut Outputs) -> Result<String> {
        let docs = self.documents()?;
        let cs = corpus_stats(&docs, self.config.corpus.long_threshold)?;
        let is = interaction_stats(&docs)?;
        let resolved = self.config.cohorts.resolve(&docs)?;
        let cohorts = assign_cohorts(&docs, &self.config.cohorts)?;
        o.write(CORPUS_STATS, &to_json_bytes(&cs)?)?;
        o.write(INTERACTION_STATS, &to_json_bytes(&is)?)?;
        o.write_with(COHORTS, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["case_id", "interaction_count", "group"])?;
            for d in &docs {
                w.write_record([d.case_id.as_str(), &d.interaction_count.to_string(), &cohorts[&d.case_id]])?;
            }
            w.flush().map_err(|e| Error::io(COHORTS, e))
        })?;
        o.write(
            STATS_TABLES,
            &text_bytes(format!("{}\n{}", tables::corpus_table(&cs), tables::interaction_table(&is))),
        )?;
        let mut sizes: Vec<String> = Vec::new();
        for label in &resolved.labels {
            sizes.push(format!("{label}={}", cohorts.values().filter(|g| *g == label).count()));
        }
        Ok(format!("{} documents, {} interactions; cohorts {}", cs.n_documents, is.n_interactions, sizes.join(" ")))
    }

    fn lda_config(&self, k: usize, iterations: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.config.topics.alpha,
            beta: self.config.topics.beta,
            iterations,
            seed: self.config.seed,
        }
    }

    fn select_k(&self, o: &mut Outputs) -> Result<String> {
        let docs = self.documents()?;
        let corpus = TopicCorpus::build(&docs, &self.prune());
        let s = &self.config.selection;
        let report = select_k(
            &corpus,
            &SelectionConfig {
                k_values: (s.k_min..=s.k_max).collect(),
                keyword_counts: s.keyword_counts.clone(),
                lda: self.lda_config(s.k_min, s.iterations),
            },
        )?;
        o.write(SELECTION_REPORT, &to_json_bytes(&report)?)?;
        o.write_with(SELECTION_METRICS, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush().map_err(|e| Error::io(SELECTION_METRICS, e))
        })?;
        Ok(format!("selected K = {} (per keyword count: {:?})", report.selected_k, report.best_k_per_n))
    }

    fn train(&self, o: &mut Outputs) -> Result<String> {
        let k = match self.config.topics.k {
            Some(k) => k,
            None => read_json::<KSelectionReport>(&self.require(SELECTION_REPORT, Stage::SelectK)?)?.selected_k,
        };
        let docs = self.documents()?;
        let corpus = TopicCorpus::build(&docs, &self.prune());
        let state = train_lda(&corpus, &self.lda_config(k, self.config.topics.iterations))?;
        let index = CooccurrenceIndex::new(&corpus.docs, corpus.vocab.len());
        let n = self.config.topics.top_n.min(state.vocab_size());
        let summaries = summarize_topics(&state, n, &index)?;
        o.write(MODEL, &to_json_bytes(&ModelFile::from_state(&state, true))?)?;
        o.write(TOPICS, &to_json_bytes(&summaries)?)?;
        o.write(TOPICS_TABLE, &text_bytes(tables::topics_table(&summaries)))?;
        o.write_with(KEYWORDS, |buf| write_keywords_csv(&state, n, buf))?;
        Ok(format!(
            "K = {k}, {} tokens, vocabulary {}, {} sweeps",
            corpus.n_tokens(),
            corpus.vocab.len(),
            self.config.topics.iterations
        ))
    }

    fn load_model(&self) -> Result<crate::topic_engine::TopicModelState> {
        read_json::<ModelFile>(&self.require(MODEL, Stage::Train)?)?.into_state()
    }

    fn figures_dir(&self, stage_dir: &str) -> Result<PathBuf> {
        let dir = self.out.join(stage_dir).join("figures");
        if dir.is_dir() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(dir)
    }

    fn trends(&self, o: &mut Outputs) -> Result<String> {
        let model = self.load_model()?;
        let docs = self.documents()?;
        let cohorts = self.cohorts()?;
        let trends = topic_trends(&model, &docs, &cohorts, &self.group_order(), &self.config.trends)?;
        o.write_with(TRENDS, |buf| write_trends_csv(&trends, buf))?;
        let dir = self.figures_dir("trends")?;
        if self.config.figures.trends {
            for p in emit_figures(&trends, &[], &dir)? {
                o.record(&p)?;
            }
        }
        Ok(format!("{} group-topic trends over {} sections", trends.len(), self.config.trends.n_sections))
    }

    fn collated(&self) -> Result<Vec<CollatedCase>> {
        read_jsonl(&self.require(COLLATED, Stage::Ingest)?)
    }

    fn sentiment(&self, o: &mut Outputs) -> Result<String> {
        let cases = self.collated()?;
        let (sentences, summary) = corpus_sentiment(&cases, &self.lexicons.sentiment, self.config.sentiment.min_tokens);
        o.write_with(SENTENCES, |buf| write_sentences_csv(&sentences, buf))?;
        o.write(SENTIMENT_SUMMARY, &to_json_bytes(&summary)?)?;
        o.write(SENTIMENT_TABLE, &text_bytes(tables::sentiment_table(&summary)))?;
        Ok(format!(
            "{} sentences scored ({} excluded): {:.2}% positive, {:.2}% negative, {:.2}% neutral",
            summary.scored_sentences, summary.excluded_sentences, summary.positive_pct, summary.negative_pct, summary.neutral_pct
        ))
    }

    fn personas(&self, o: &mut Outputs) -> Result<String> {
        let cases = self.collated()?;
        let lex = &self.lexicons;
        let roster = match self.roster_path() {
            Some(p) => {
                let f = File::open(&p).map_err(|e| Error::io(&p, e))?;
                Roster::from_csv(BufReader::new(f), &lex.personas, &lex.names.common_noun_exclusions)?
            }
            None => Roster::default(),
        };
        let analyzed = analyze_cases(&cases, &lex.personas, &roster, &lex.power, self.config.personas.window);
        let mentions: Vec<Vec<u64>> = analyzed.iter().map(|c| c.mentions.clone()).collect();
        let report = persona_stats(&mentions, &lex.personas);
        let retained = filter_rare_personas(&report, self.config.personas.min_documents);
        o.write(CASE_PERSONAS, &to_jsonl_bytes(&analyzed)?)?;
        o.write(PERSONA_REPORT, &to_json_bytes(&report)?)?;
        o.write(RETAINED, &to_json_bytes(&retained)?)?;
        o.write(PERSONA_TABLE, &text_bytes(tables::persona_table(&report, &lex.personas)))?;
        let triples: usize = analyzed.iter().map(|c| c.triples.len()).sum();
        Ok(format!("{triples} triples; retained {}", retained.join(", ")))
    }

    fn power(&self, o: &mut Outputs) -> Result<String> {
        let cases: Vec<CasePersonas> = read_jsonl(&self.require(CASE_PERSONAS, Stage::Personas)?)?;
        let retained: Vec<String> = read_json(&self.require(RETAINED, Stage::Personas)?)?;
        let cohorts = self.cohorts()?;
        let lex = &self.lexicons;
        let ledgers = ledgers_by_group(&cases, &cohorts, &self.group_order(), &lex.personas, &lex.power, &retained);
        o.write(LEDGERS, &to_json_bytes(&ledgers)?)?;
        o.write_with(SCORES, |buf| write_scores_csv(&ledgers, buf))?;
        o.write_with(MATRIX, |buf| write_matrix_csv(&ledgers, buf))?;
        let dir = self.figures_dir("power")?;
        if self.config.figures.power {
            for p in emit_figures(&[], &ledgers, &dir)? {
                o.record(&p)?;
            }
        }
        let scored: usize = ledgers.iter().map(|l| l.triples_scored).sum();
        let skipped: usize = ledgers.iter().map(|l| l.triples_skipped).sum();
        Ok(format!("{} groups, {scored} triples scored, {skipped} skipped", ledgers.len()))
    }

    fn synth(&self, o: &mut Outputs) -> Result<String> {
        let spec = self.config.generator_spec()?;
        let oracle = self.lexicons.oracle(&self.config);
        let generated = generate_corpus_with(&spec, &oracle)?;
        o.write_with(SYNTH_CORPUS, |buf| write_records_csv(&generated.records, buf))?;
        o.write_with(SYNTH_ROSTER, |buf| write_roster_csv(&generated.roster, buf))?;
        o.write(SYNTH_MANIFEST, &to_json_bytes(&generated.manifest)?)?;
        o.write(SYNTH_SPEC, &to_json_bytes(&spec)?)?;
        let n = self.config.synth.recall_sentences.unwrap_or(1200);
        let clean = measure_svo_recall(TemplateSet::Clean, n, spec.seed, &oracle)?;
        let distractor = measure_svo_recall(TemplateSet::Distractor, n, spec.seed, &oracle)?;
        let min = self.config.verify.min_distractor_recall;
        let recall = RecallSummary {
            distractor_ok: distractor.recall >= min,
            clean,
            distractor,
            min_distractor_recall: min,
        };
        o.write(SYNTH_RECALL, &to_json_bytes(&recall)?)?;
        Ok(format!(
            "{} cases, {} records, {} scripted triples; SVO recall clean {:.3}, distractor {:.3}",
            spec.n_cases,
            generated.records.len(),
            generated.manifest.scripted.len(),
            recall.clean.recall,
            recall.distractor.recall
        ))
    }

    /// Collect whatever pipeline outputs exist.
    pub fn pipeline_outputs(&self, top_n: usize) -> Result<PipelineOutputs> {
        let maybe = |rel: &str| Some(self.path(rel)).filter(|p| p.is_file());
        let topics = match maybe(MODEL) {
            Some(_) => Some(LearnedTopics::from_state(&self.load_model()?, top_n)?),
            None => None,
        };
        let trends = match maybe(TRENDS) {
            Some(p) => Some(read_trends_csv(File::open(&p).map_err(|e| Error::io(&p, e))?)?),
            None => None,
        };
        Ok(PipelineOutputs {
            topics,
            trends,
            ledgers: maybe(LEDGERS).map(|p| read_json::<Vec<PowerLedger>>(&p)).transpose()?,
            sentiment: maybe(SENTIMENT_SUMMARY).map(|p| read_json::<SentimentSummary>(&p)).transpose()?,
            cohorts: maybe(COHORTS).map(|_| self.cohorts()).transpose()?,
            personas: maybe(PERSONA_REPORT).map(|p| read_json::<PersonaReport>(&p)).transpose()?,
            retained_personas: maybe(RETAINED).map(|p| read_json::<Vec<String>>(&p)).transpose()?,
        })
    }

    fn verify(&self, o: &mut Outputs) -> Result<String> {
        let manifest: GroundTruthManifest = read_json(&self.require(SYNTH_MANIFEST, Stage::Synth)?)?;
        let tol = self.config.verify.tolerances;
        let outputs = self.pipeline_outputs(tol.top_n)?;
        let report = verify_pipeline(&manifest, &outputs, &tol);
        o.write(VERIFY_REPORT, &to_json_bytes(&report)?)?;
        o.write(VERIFY_TEXT, &text_bytes(report.render()))?;
        let passed = report.checks.iter().filter(|c| c.status == crate::synth_oracle::CheckStatus::Pass).count();
        Ok(format!("{passed}/{} checks passed\n{}", report.checks.len(), report.render().trim_end()))
    }

    /// The stored verification report, if `verify` has run.
    pub fn verification(&self) -> Result<VerificationReport> {
        read_json(&self.require(VERIFY_REPORT, Stage::Verify)?)
    }

    fn report(&self, o: &mut Outputs) -> Result<String> {
        let cs = read_json(&self.path(CORPUS_STATS))?;
        let is = read_json(&self.path(INTERACTION_STATS))?;
        let topics: Vec<TopicSummary> = read_json(&self.path(TOPICS))?;
        let sentiment: SentimentSummary = read_json(&self.path(SENTIMENT_SUMMARY))?;
        let personas: PersonaReport = read_json(&self.path(PERSONA_REPORT))?;
        let trends_path = self.path(TRENDS);
        let trends: Vec<LifelineTrend> = read_trends_csv(File::open(&trends_path).map_err(|e| Error::io(&trends_path, e))?)?;
        let ledgers: Vec<PowerLedger> = read_json(&self.path(LEDGERS))?;
        let mut text = String::new();
        for table in [
            tables::corpus_table(&cs),
            tables::interaction_table(&is),
            tables::topics_table(&topics),
            tables::sentiment_table(&sentiment),
            tables::persona_table(&personas, &self.lexicons.personas),
        ] {
            text.push_str(&table);
            text.push('\n');
        }
        for l in &ledgers {
            let rows: Vec<Vec<String>> = l
                .personas
                .iter()
                .zip(&l.scores)
                .zip(l.normalized_scores())
                .map(|((p, s), n)| vec![p.clone(), format!("{s}"), format!("{n:.4}")])
                .collect();
            text.push_str(&tables::text_table(&format!("Power scores, {}", l.group), &["Persona", "Score", "Per mention"], &rows));
            text.push('\n');
        }
        o.write(REPORT_TABLES, text.as_bytes())?;
        let dir = self.figures_dir("report")?;
        let figures = emit_figures(
            if self.config.figures.trends { &trends } else { &[] },
            if self.config.figures.power { &ledgers } else { &[] },
            &dir,
        )?;
        for p in &figures {
            o.record(p)?;
        }
        Ok(format!("{} tables and {} figures in {}", 5 + ledgers.len(), figures.len(), self.out.join("report").display()))
    }
}
