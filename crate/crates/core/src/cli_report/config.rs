//! Pipeline configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort_lifeline::{CohortMode, SectionInference, TrendConfig};
use crate::corpus::{default_name_lexicon, default_stopwords, parse_word_list, NameLexicon, Stopwords};
use crate::defaults;
use crate::error::{Error, Result};
use crate::persona_power::{PersonaLexicon, PowerLexicon, DEFAULT_MIN_DOCUMENTS, DEFAULT_WINDOW};
use crate::sentiment::SentimentLexicon;
use crate::synth_oracle::{GeneratorSpec, OracleLexicons, Tolerances};

use super::artifacts::sha256_bytes;

/// External inputs. Unset lexicons fall back to the bundled ones; an unset
/// corpus means the output of the `synth` stage.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub corpus: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub surnames: Option<PathBuf>,
    pub given_names: Option<PathBuf>,
    pub name_exclusions: Option<PathBuf>,
    pub personas: Option<PathBuf>,
    pub power_verbs: Option<PathBuf>,
    pub sentiment_valence: Option<PathBuf>,
    pub sentiment_boosters: Option<PathBuf>,
    pub negators: Option<PathBuf>,
}

impl InputPaths {
    fn all(&self) -> Vec<(&'static str, &Option<PathBuf>)> {
        vec![
            ("corpus", &self.corpus),
            ("roster", &self.roster),
            ("stopwords", &self.stopwords),
            ("surnames", &self.surnames),
            ("given_names", &self.given_names),
            ("name_exclusions", &self.name_exclusions),
            ("personas", &self.personas),
            ("power_verbs", &self.power_verbs),
            ("sentiment_valence", &self.sentiment_valence),
            ("sentiment_boosters", &self.sentiment_boosters),
            ("negators", &self.negators),
        ]
    }

    fn all_mut(&mut self) -> Vec<&mut Option<PathBuf>> {
        vec![
            &mut self.corpus,
            &mut self.roster,
            &mut self.stopwords,
            &mut self.surnames,
            &mut self.given_names,
            &mut self.name_exclusions,
            &mut self.personas,
            &mut self.power_verbs,
            &mut self.sentiment_valence,
            &mut self.sentiment_boosters,
            &mut self.negators,
        ]
    }

    /// Configured lexicon files (everything but corpus and roster).
    pub fn lexicon_files(&self) -> Vec<&Path> {
        self.all().into_iter().skip(2).filter_map(|(_, p)| p.as_deref()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub long_threshold: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection { long_threshold: 1500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsSection {
    /// Topic count; unset means the `select-k` result.
    pub k: Option<usize>,
    /// Unset means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Keywords reported per topic.
    pub top_n: usize,
    pub min_doc_frequency: usize,
    pub top_frequency_fraction: f64,
}

impl Default for TopicsSection {
    fn default() -> Self {
        TopicsSection {
            k: None,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            top_n: 20,
            min_doc_frequency: 2,
            top_frequency_fraction: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub k_min: usize,
    pub k_max: usize,
    pub keyword_counts: Vec<usize>,
    pub iterations: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            k_min: 2,
            k_max: 15,
            keyword_counts: vec![15, 20, 25, 30],
            iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentSection {
    pub min_tokens: usize,
}

impl Default for SentimentSection {
    fn default() -> Self {
        SentimentSection { min_tokens: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonaSection {
    pub min_documents: usize,
    pub window: usize,
    /// Fault injection: flip every power direction before scoring.
    pub invert_power: bool,
}

impl Default for PersonaSection {
    fn default() -> Self {
        PersonaSection {
            min_documents: DEFAULT_MIN_DOCUMENTS,
            window: DEFAULT_WINDOW,
            invert_power: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// JSON generator spec; replaces `spec` when set.
    pub spec_path: Option<PathBuf>,
    pub spec: GeneratorSpec,
    /// Sentences per template set for the extraction recall measurement.
    pub recall_sentences: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    #[serde(flatten)]
    pub tolerances: Tolerances,
    /// Minimum distractor-set extraction recall reported by `synth`.
    pub min_distractor_recall: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            tolerances: Tolerances::default(),
            min_distractor_recall: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureToggles {
    pub trends: bool,
    pub power: bool,
}

impl Default for FigureToggles {
    fn default() -> Self {
        FigureToggles { trends: true, power: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed for every random stage (LDA, selection, generator, fold-in).
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: InputPaths,
    pub corpus: CorpusSection,
    pub topics: TopicsSection,
    pub selection: SelectionSection,
    pub cohorts: CohortMode,
    pub trends: TrendConfig,
    pub sentiment: SentimentSection,
    pub personas: PersonaSection,
    pub synth: SynthSection,
    pub verify: VerifySection,
    pub figures: FigureToggles,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            output_dir: PathBuf::from("out"),
            inputs: InputPaths::default(),
            corpus: CorpusSection::default(),
            topics: TopicsSection::default(),
            selection: SelectionSection::default(),
            cohorts: CohortMode::default(),
            trends: TrendConfig::default(),
            sentiment: SentimentSection::default(),
            personas: PersonaSection::default(),
            synth: SynthSection::default(),
            verify: VerifySection::default(),
            figures: FigureToggles::default(),
        }
    }
}

/// Every lexicon a stage may need, loaded once.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub stopwords: Stopwords,
    pub names: NameLexicon,
    pub sentiment: SentimentLexicon,
    pub personas: PersonaLexicon,
    pub power: PowerLexicon,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_or(path: &Option<PathBuf>, fallback: &str) -> Result<String> {
    match path {
        Some(p) => read(p),
        None => Ok(fallback.to_string()),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in self.inputs.all_mut().into_iter().flatten() {
            fix(p);
        }
        if let Some(p) = &mut self.synth.spec_path {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    /// Check referenced files and parameter ranges before any stage runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, path) in self.inputs.all() {
            if let Some(p) = path {
                if !p.is_file() {
                    return bad(format!("inputs.{name}: {} does not exist", p.display()));
                }
            }
        }
        if let Some(p) = &self.synth.spec_path {
            if !p.is_file() {
                return bad(format!("synth.spec_path: {} does not exist", p.display()));
            }
        }
        let t = &self.topics;
        if t.k == Some(0) || t.iterations == 0 || t.top_n < 2 || !(t.beta > 0.0) || t.alpha.is_some_and(|a| !(a > 0.0)) {
            return bad("topics: k and iterations must be at least 1, top_n at least 2, alpha and beta positive".into());
        }
        if !(0.0..1.0).contains(&t.top_frequency_fraction) {
            return bad("topics.top_frequency_fraction must lie in [0, 1)".into());
        }
        let s = &self.selection;
        if s.k_min == 0 || s.k_min > s.k_max || s.iterations == 0 || s.keyword_counts.is_empty() || s.keyword_counts.iter().any(|&n| n < 2) {
            return bad("selection: need 1 <= k_min <= k_max, iterations >= 1 and keyword counts >= 2".into());
        }
        match &self.cohorts {
            CohortMode::Fixed(spec) => spec.validate()?,
            CohortMode::Percentile { labels } if labels.len() != 3 => {
                return bad("cohorts: percentile mode needs three labels".into());
            }
            CohortMode::Percentile { .. } => {}
        }
        if self.trends.n_sections == 0 {
            return bad("trends.n_sections must be at least 1".into());
        }
        if let SectionInference::FoldIn { sweeps: 0, .. } = self.trends.inference {
            return bad("trends.inference.sweeps must be at least 1".into());
        }
        if self.sentiment.min_tokens == 0 {
            return bad("sentiment.min_tokens must be at least 1".into());
        }
        if self.personas.window == 0 {
            return bad("personas.window must be at least 1".into());
        }
        let v = &self.verify;
        if !(0.0..=1.0).contains(&v.tolerances.topic_overlap) || v.tolerances.top_n == 0 || !(v.tolerances.sentiment_share >= 0.0) {
            return bad("verify tolerances out of range".into());
        }
        Ok(())
    }

    /// Hash of everything that affects outputs. The output directory is
    /// left out so the same run in two places hashes the same.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        sha256_bytes(&serde_json::to_vec(&c).expect("config serializes"))
    }

    pub fn lexicons(&self) -> Result<Lexicons> {
        let i = &self.inputs;
        let stopwords = match &i.stopwords {
            Some(p) => Stopwords::parse(&read(p)?),
            None => default_stopwords(),
        };
        let names = if i.surnames.is_none() && i.given_names.is_none() && i.name_exclusions.is_none() {
            default_name_lexicon()
        } else {
            NameLexicon::new(
                parse_word_list(&read_or(&i.surnames, defaults::SURNAMES)?),
                parse_word_list(&read_or(&i.given_names, defaults::GIVEN_NAMES)?),
                parse_word_list(&read_or(&i.name_exclusions, defaults::NAME_EXCLUSIONS)?),
            )
        };
        let sentiment = SentimentLexicon::parse(
            &read_or(&i.sentiment_valence, defaults::SENTIMENT_VALENCE)?,
            &read_or(&i.sentiment_boosters, defaults::SENTIMENT_BOOSTERS)?,
            &read_or(&i.negators, defaults::NEGATORS)?,
        )?;
        let personas = PersonaLexicon::parse_json(&read_or(&i.personas, defaults::PERSONAS)?)?;
        let mut power = PowerLexicon::parse_tsv(&read_or(&i.power_verbs, defaults::POWER_VERBS)?)?;
        if self.personas.invert_power {
            power = power.inverted();
        }
        Ok(Lexicons {
            stopwords,
            names,
            sentiment,
            personas,
            power,
        })
    }

    /// The generator spec with the base seed applied.
    pub fn generator_spec(&self) -> Result<GeneratorSpec> {
        let mut spec = match &self.synth.spec_path {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => self.synth.spec.clone(),
        };
        spec.seed = self.seed;
        Ok(spec)
    }
}

impl Lexicons {
    /// Lexicons for the generator. Directions are never inverted here: the
    /// oracle scripts the true directions.
    pub fn oracle(&self, config: &PipelineConfig) -> OracleLexicons {
        let power = if config.personas.invert_power { self.power.inverted() } else { self.power.clone() };
        OracleLexicons::new(self.personas.clone(), power, self.sentiment.clone(), self.stopwords.clone(), self.names.clone())
    }
}
