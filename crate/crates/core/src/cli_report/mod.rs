//! Command-line driver: one subcommand per pipeline stage, artifacts under
//! the output directory, and text tables and SVG figures for reporting.

mod artifacts;
mod config;
mod figures;
mod stages;
mod tables;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use artifacts::{atomic_write, atomic_write_bytes, read_json, read_jsonl, sha256_bytes, sha256_file, RunManifest};
pub use config::{
    CorpusSection, FigureToggles, InputPaths, Lexicons, PersonaSection, PipelineConfig, SelectionSection,
    SentimentSection, SynthSection, TopicsSection, VerifySection,
};
pub use figures::{emit_figures, group_color, heatmap_svg, scores_svg, trend_svg};
pub use stages::*;
pub use tables::{corpus_table, interaction_table, persona_table, sentiment_table, text_table, topics_table};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MISSING_ARTIFACT: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "narrative-miner", version, about = "Narrative analysis of longitudinal case records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Re-run the stage even when its outputs are current.
    #[arg(long, global = true)]
    pub force: bool,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Load, collate and prepare the corpus.
    Ingest,
    /// Corpus and interaction statistics, cohort assignment.
    Stats,
    /// Train the topic model.
    Train,
    /// Score candidate topic counts.
    #[command(name = "select-k")]
    SelectK,
    /// Topic popularity across the life of a case, per cohort.
    Trends,
    /// Sentence sentiment.
    Sentiment,
    /// Persona mentions and interaction triples.
    Personas,
    /// Power ledgers per cohort.
    Power,
    /// Generate a synthetic corpus with its ground truth.
    Synth,
    /// Run the pipeline on the synthetic corpus and check it against the ground truth.
    Verify,
    /// Collect tables and figures.
    Report,
}

impl Command {
    pub fn stage(self) -> Stage {
        match self {
            Command::Ingest => Stage::Ingest,
            Command::Stats => Stage::Stats,
            Command::Train => Stage::Train,
            Command::SelectK => Stage::SelectK,
            Command::Trends => Stage::Trends,
            Command::Sentiment => Stage::Sentiment,
            Command::Personas => Stage::Personas,
            Command::Power => Stage::Power,
            Command::Synth => Stage::Synth,
            Command::Verify => Stage::Verify,
            Command::Report => Stage::Report,
        }
    }
}

/// Build the effective configuration for a parsed command line.
pub fn load_config(cli: &Cli) -> crate::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingArtifact { .. } => EXIT_MISSING_ARTIFACT,
        _ => EXIT_ERROR,
    }
}

/// Parse arguments, run one stage and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> crate::Result<i32> {
    let config = load_config(cli)?;
    let ctx = Context::new(config, cli.force)?;
    let stage = cli.command.stage();
    match ctx.run(stage)? {
        StageOutcome::Ran(summary) => println!("{stage}: {summary}"),
        StageOutcome::UpToDate => println!("{stage}: up to date"),
    }
    if stage == Stage::Verify {
        let report = ctx.verification()?;
        if !report.all_pass() {
            eprintln!("verification failed");
            return Ok(EXIT_VERIFY_FAILED);
        }
    }
    Ok(EXIT_OK)
}
