//! Acceptance suite. Runs each criterion in order and prints one PASS/FAIL
//! line per criterion; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- 3 6` runs only the listed criteria.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narrative_miner::cli_report::{corpus_table, interaction_table, persona_table, read_json, PipelineConfig};
use narrative_miner::cohort_lifeline::{
    interaction_stats, record_section_ranges, segment, topic_trends, CohortMode, SectionInference, TrendConfig,
};
use narrative_miner::corpus::{
    collate_by_case, corpus_stats, default_name_lexicon, default_stopwords, prepare_documents, CaseDocument,
};
use narrative_miner::persona_power::{persona_stats, PersonaLexicon, PowerLedger, PowerLexicon, SvoTriple};
use narrative_miner::sentiment::{classify, score_case, score_sentence, SentimentClass, SentimentLexicon};
use narrative_miner::synth_oracle::{
    generate_corpus, measure_svo_recall, CountDistribution, GeneratorSpec, OracleLexicons, SentimentMix, TemplateSet,
    VerificationReport,
};
use narrative_miner::topic_engine::{
    select_k, train_lda, train_lda_observed, LdaConfig, ModelFile, PruneConfig, SelectionConfig, TopicCorpus,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const BIN: &str = env!("CARGO_BIN_EXE_narrative-miner");

fn run_cli(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn describe(o: &Output) -> String {
    format!(
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

/// Default generator spec, K fixed to the planted count, default sweeps.
const END_TO_END_CONFIG: &str = "seed = 42\n\n[topics]\nk = 5\n";

struct Workspace {
    root: tempfile::TempDir,
}

impl Workspace {
    fn config(&self) -> PathBuf {
        self.root.path().join("pipeline.toml")
    }
}

fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let root = tempfile::tempdir().expect("tempdir");
        fs::write(root.path().join("pipeline.toml"), END_TO_END_CONFIG).expect("write config");
        Workspace { root }
    })
}

/// Synth then verify into `out`; returns wall time and the final output.
fn synth_and_verify(config: &Path, out: &Path) -> Result<(Duration, Output), String> {
    let t = Instant::now();
    let synth = run_cli(&["synth"], config, out);
    ensure!(synth.status.success(), "synth failed: {}", describe(&synth));
    let verify = run_cli(&["verify"], config, out);
    Ok((t.elapsed(), verify))
}

fn reference_run() -> Result<PathBuf, String> {
    static DONE: OnceLock<Result<(Duration, String), String>> = OnceLock::new();
    let ws = workspace();
    let out = ws.root.path().join("run_a");
    DONE.get_or_init(|| {
        let (elapsed, verify) = synth_and_verify(&ws.config(), &out)?;
        ensure!(verify.status.code() == Some(0), "verify did not pass: {}", describe(&verify));
        Ok((elapsed, String::from_utf8_lossy(&verify.stdout).into_owned()))
    })
    .clone()?;
    Ok(out)
}

fn criterion_1() -> Outcome {
    let out = reference_run()?;
    // Time the whole pipeline again from scratch for the runtime bound.
    let ws = workspace();
    let fresh = ws.root.path().join("run_timed");
    let (elapsed, verify) = synth_and_verify(&ws.config(), &fresh)?;
    ensure!(verify.status.code() == Some(0), "timed run failed: {}", describe(&verify));
    let report: VerificationReport = read_json(&out.join("verify/report.json")).map_err(|e| e.to_string())?;
    for name in ["topics", "power", "sentiment", "cohorts", "trends", "personas"] {
        ensure!(
            report.status(name).map(|s| s.to_string()) == Some("PASS".into()),
            "check {name} did not pass:\n{}",
            report.render()
        );
    }
    ensure!(elapsed <= Duration::from_secs(600), "pipeline took {elapsed:?}");
    let topics = report.checks.iter().find(|c| c.name == "topics").map(|c| c.detail.clone()).unwrap_or_default();
    Ok(format!("all {} checks pass in {:.1}s; {topics}", report.checks.len(), elapsed.as_secs_f64()))
}

fn selection_corpus(k_true: usize, seed: u64) -> TopicCorpus {
    // Topic-only corpora: no persona, script or sentiment sentences and a
    // light background block, so the planted topics are the only structure.
    let spec = GeneratorSpec {
        k_true,
        vocab_size: 50 + 40 * k_true,
        background_weight: 0.02,
        doc_concentration: 0.1,
        n_cases: 150,
        records_per_case: CountDistribution::Uniform { min: 6, max: 12 },
        mentions: vec![],
        scripts: vec![],
        sentiment: SentimentMix { positive: 0.0, negative: 0.0 },
        seed,
        ..Default::default()
    };
    let g = generate_corpus(&spec).expect("generate");
    let col = collate_by_case(&g.records).expect("collate");
    let docs = prepare_documents(&col.cases, &default_stopwords(), &default_name_lexicon());
    TopicCorpus::build(&docs, &PruneConfig::default())
}

fn criterion_2() -> Outcome {
    let mut picks = Vec::new();
    for k_true in [4usize, 8] {
        for seed in [1u64, 2, 3] {
            let corpus = selection_corpus(k_true, seed);
            let report = select_k(
                &corpus,
                &SelectionConfig {
                    k_values: (2..=15).collect(),
                    keyword_counts: vec![15, 20, 25, 30],
                    lda: LdaConfig {
                        k: 2,
                        iterations: 200,
                        seed,
                        ..Default::default()
                    },
                },
            )
            .map_err(|e| e.to_string())?;
            picks.push(format!("K*={k_true}/seed {seed} -> {}", report.selected_k));
            ensure!(
                report.selected_k.abs_diff(k_true) <= 2,
                "K*={k_true} seed {seed}: selected {} (per keyword count {:?})",
                report.selected_k,
                report.best_k_per_n
            );
        }
    }
    Ok(picks.join(", "))
}

fn small_documents(seed: u64, n_cases: usize) -> Vec<CaseDocument> {
    let spec = GeneratorSpec {
        n_cases,
        seed,
        ..Default::default()
    };
    let g = generate_corpus(&spec).expect("generate");
    let col = collate_by_case(&g.records).expect("collate");
    prepare_documents(&col.cases, &default_stopwords(), &default_name_lexicon())
}

fn criterion_3() -> Outcome {
    let docs = small_documents(11, 80);
    let corpus = TopicCorpus::build(&docs, &PruneConfig::default());
    let config = LdaConfig {
        k: 6,
        iterations: 300,
        seed: 9,
        ..Default::default()
    };
    let mut checks = 0;
    let mut worst = 0.0f64;
    let first = train_lda_observed(&corpus, &config, 100, |state| {
        state.check_consistency()?;
        for t in 0..state.k {
            let sum: f64 = state.topic_word_distribution(t).iter().sum();
            worst = worst.max((sum - 1.0).abs());
        }
        checks += 1;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    ensure!(checks == 3, "expected 3 observations, got {checks}");
    ensure!(worst <= 1e-9, "topic-word distribution off by {worst:e}");
    let second = train_lda(&corpus, &config).map_err(|e| e.to_string())?;
    ensure!(first == second, "two runs with one seed differ");
    let a = serde_json::to_vec(&ModelFile::from_state(&first, true)).map_err(|e| e.to_string())?;
    let b = serde_json::to_vec(&ModelFile::from_state(&second, true)).map_err(|e| e.to_string())?;
    ensure!(a == b, "serialized models differ");
    Ok(format!("{checks} count audits exact, max |sum-1| = {worst:.1e}, models bit-identical ({} bytes)", a.len()))
}

fn sorted_quantile(sorted: &[u64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * (pos - lo as f64)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..10 {
        let seed = rng.random::<u64>();
        let n_cases = rng.random_range(15..60);
        let spec = GeneratorSpec {
            n_cases,
            seed,
            ..Default::default()
        };
        let g = generate_corpus(&spec).map_err(|e| e.to_string())?;
        let col = collate_by_case(&g.records).map_err(|e| e.to_string())?;
        let docs = prepare_documents(&col.cases, &default_stopwords(), &default_name_lexicon());

        // Interaction counts straight from the raw records.
        let mut per_case: BTreeMap<&str, u64> = BTreeMap::new();
        for r in &g.records {
            *per_case.entry(r.case_id.as_str()).or_default() += 1;
        }
        let mut counts: Vec<u64> = per_case.values().copied().collect();
        counts.sort_unstable();
        let n = counts.len() as f64;
        let total: u64 = counts.iter().sum();
        let mean = total as f64 / n;
        let var = counts.iter().map(|&c| (c as f64 - mean) * (c as f64 - mean)).sum::<f64>() / (n - 1.0);
        let is = interaction_stats(&docs).map_err(|e| e.to_string())?;
        ensure!(is.n_cases == counts.len() && is.n_interactions as u64 == total, "round {round}: counts differ");
        ensure!(close(is.mean, mean) && close(is.std, var.sqrt()), "round {round}: moments differ");
        ensure!(
            close(is.p25, sorted_quantile(&counts, 0.25))
                && close(is.median, sorted_quantile(&counts, 0.5))
                && close(is.p75, sorted_quantile(&counts, 0.75)),
            "round {round}: percentiles differ: {is:?}"
        );

        let threshold = rng.random_range(50..400);
        let mut long = 0;
        let mut max = 0;
        let mut words = 0;
        let mut vocab = BTreeSet::new();
        for d in &docs {
            let len = d.tokens.len();
            words += len;
            max = max.max(len);
            long += usize::from(len > threshold);
            vocab.extend(d.tokens.iter().cloned());
        }
        let cs = corpus_stats(&docs, threshold).map_err(|e| e.to_string())?;
        ensure!(
            cs.n_documents == docs.len() && cs.n_long_documents == long && cs.max_words == max && cs.vocab_size == vocab.len(),
            "round {round}: corpus counts differ"
        );
        ensure!(close(cs.mean_words, words as f64 / docs.len() as f64), "round {round}: mean words differ");

        if round == 0 {
            let t = corpus_table(&cs);
            let labels = [
                format!("Number of casenotes with more than {threshold} words"),
                "Average number of words per casenote".into(),
                "Number of words in longest casenote".into(),
                "Number of unique words".into(),
            ];
            ensure!(t.lines().nth(1).is_some_and(|l| l.starts_with("Metric") && l.contains("Value")), "corpus header");
            for (line, label) in t.lines().skip(3).zip(&labels) {
                ensure!(line.starts_with(label.as_str()), "corpus table row {line:?} should start with {label:?}");
            }
            let t = interaction_table(&is);
            let labels = ["N", "Mean", "Standard deviation", "25 percentile", "Median", "75 percentile"];
            ensure!(t.lines().count() == 3 + labels.len(), "interaction table has {} lines", t.lines().count());
            for (line, label) in t.lines().skip(3).zip(labels) {
                ensure!(line.starts_with(label), "interaction table row {line:?} should start with {label:?}");
            }
            let lex = PersonaLexicon::default_lexicon();
            let report = persona_stats(&[vec![1; lex.personas().len()]], &lex);
            let t = persona_table(&report, &lex);
            let header = t.lines().nth(1).unwrap_or_default();
            let cols = ["Persona", "References", "Total Mentions", "Casenotes containing Mentions", "Average Mentions per Casenote"];
            let mut at = 0;
            for c in cols {
                let i = header[at..].find(c).ok_or_else(|| format!("persona header {header:?} lacks {c:?} in order"))?;
                at += i + c.len();
            }
            ensure!(t.lines().skip(3).count() == lex.personas().len(), "one persona row per persona");
        }
    }
    Ok("10 corpora match the brute-force recount; corpus, interaction and persona tables follow the published layouts".into())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let len = rng.random_range(0..2500);
        let tokens: Vec<String> = (0..len).map(|j| format!("w{}", (j * 7 + i) % 97)).collect();
        let sections = segment(&tokens, 10);
        ensure!(sections.len() == 10, "doc {i}: {} sections", sections.len());
        ensure!(sections.concat() == tokens, "doc {i}: sections do not concatenate to the document");
        let lens: Vec<usize> = sections.iter().map(|s| s.len()).collect();
        let spread = lens.iter().max().unwrap() - lens.iter().min().unwrap();
        ensure!(spread <= 1, "doc {i}: section lengths {lens:?}");

        let n_records = rng.random_range(1..40usize);
        let mut offsets: Vec<usize> = (0..n_records).map(|_| rng.random_range(0..=len)).collect();
        offsets.sort_unstable();
        offsets[0] = 0;
        let mut doc = CaseDocument::new(format!("D{i}"), n_records, tokens.clone());
        doc.record_offsets = offsets;
        let ranges = record_section_ranges(&doc, 10);
        let mut cursor = 0;
        for r in ranges.iter().filter(|r| !r.is_empty()) {
            ensure!(r.start == cursor, "doc {i}: record sections not contiguous");
            cursor = r.end;
        }
        ensure!(cursor == len, "doc {i}: record sections cover {cursor} of {len} tokens");
    }

    let docs = small_documents(21, 60);
    let corpus = TopicCorpus::build(&docs, &PruneConfig::default());
    let model = train_lda(&corpus, &LdaConfig { k: 5, iterations: 100, seed: 3, ..Default::default() }).map_err(|e| e.to_string())?;
    let mode = CohortMode::default();
    let cohorts = narrative_miner::cohort_lifeline::assign_cohorts(&docs, &mode).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for inference in [
        SectionInference::default(),
        SectionInference::TrainingAssignments,
        SectionInference::WholeDocument,
    ] {
        let config = TrendConfig { inference, ..Default::default() };
        let trends = topic_trends(&model, &docs, &cohorts, mode.labels(), &config).map_err(|e| e.to_string())?;
        let mut sums: BTreeMap<(String, usize), f64> = BTreeMap::new();
        for t in &trends {
            for (s, m) in t.section_means.iter().enumerate() {
                *sums.entry((t.group.clone(), s)).or_default() += m;
            }
        }
        ensure!(!sums.is_empty(), "no trends");
        for ((g, s), v) in &sums {
            worst = worst.max((v - 1.0).abs());
            ensure!((v - 1.0).abs() <= 1e-6, "{inference:?}: group {g} section {s} sums to {v}");
        }
    }
    Ok(format!("1000 documents partition exactly; section topic means sum to 1 (max error {worst:.1e})"))
}

/// Hand rule traces against the bundled lexicon: valences good 1.9, bad -2.5,
/// happy 2.7, sad -2.1, safe 1.9, great 3.1, love 3.2, hate -2.7, hurt -2.4,
/// angry -2.3, fine 0.8, poor -2.1; boosters +0.293 (very, extremely) and
/// -0.293 (slightly); negation x -0.74 within three preceding tokens; caps
/// x 1.5; 0.292 per trailing "!" up to four.
fn sentiment_cases() -> Vec<(&'static str, f64)> {
    let neg = -0.74;
    let b = 0.293;
    let ex = 0.292;
    vec![
        ("The mother was happy at the visit.", 2.7),
        ("The mother was not happy at the visit.", 2.7 * neg),
        ("The mother was very happy at the visit.", 2.7 + b),
        ("The mother was not very happy at the visit.", (2.7 + b) * neg),
        ("The visit was HAPPY and safe today.", 2.7 * 1.5 + 1.9),
        ("The father was angry at the meeting!", -2.3 - ex),
        ("The father was angry at the meeting!!!!!!", -2.3 - 4.0 * ex),
        ("The child was slightly sad after school.", -2.1 + b),
        ("The mother never visited the child home and was good.", 1.9),
        ("The worker observed no child was fine today.", 0.8 * neg),
        ("The staff reported good and bad during the visit.", 1.9 - 2.5),
        ("The child said love and hate at school.", 3.2 - 2.7),
        ("The caseworker visited the home at the appointment.", 0.0),
        ("The mother was great, great, great today.", 3.0 * 3.1),
        ("The kids were not hurt during the visit.", -2.4 * neg),
        ("The mother was extremely happy and very safe!", (2.7 + b) + (1.9 + b) + ex),
        ("The father was NOT good at the meeting.", 1.9 * neg),
        ("The worker observed the child was extremely poor today.", -2.1 - b),
        ("The visit with the mother was GOOD and fine!!", 1.9 * 1.5 + 0.8 + 2.0 * ex),
        ("The mother said no, not bad, at the visit.", -2.5 * neg),
    ]
}

fn criterion_6() -> Outcome {
    let lex = SentimentLexicon::default_lexicon();
    for (sentence, s) in sentiment_cases() {
        let expected = if s == 0.0 { 0.0 } else { s / (s * s + 15.0).sqrt() };
        let got = score_sentence(sentence, &lex);
        ensure!((got - expected).abs() <= 1e-12, "{sentence:?}: compound {got}, rule trace gives {expected}");
    }
    let boundary = [
        (0.05, SentimentClass::Positive),
        (0.0499999, SentimentClass::Neutral),
        (-0.05, SentimentClass::Negative),
        (-0.0499999, SentimentClass::Neutral),
        (0.0, SentimentClass::Neutral),
    ];
    for (c, class) in boundary {
        ensure!(classify(c) == class, "classify({c}) = {:?}, expected {class:?}", classify(c));
    }
    let text = "Happy happy good day. The mother was very happy today. Bad bad bad bad. Not good at all!";
    let (scored, skipped) = score_case("C1", text, &lex, 5);
    ensure!(scored.len() == 1 && skipped == 3, "scored {scored:?}, skipped {skipped}");
    ensure!(scored[0].sentence_idx == 1 && scored[0].token_count == 6, "wrong sentence scored: {scored:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let words = ["good", "bad", "the", "visit", "very", "not", "happy", "sad", "home", "child"];
    for _ in 0..500 {
        let text: String = (0..rng.random_range(1..12))
            .map(|_| {
                let n = rng.random_range(1..9);
                let w: Vec<&str> = (0..n).map(|_| words[rng.random_range(0..words.len())]).collect();
                format!("{}. ", w.join(" "))
            })
            .collect();
        let (scored, _) = score_case("C", &text, &lex, 5);
        ensure!(scored.iter().all(|s| s.token_count >= 5), "a sentence under 5 tokens was scored in {text:?}");
    }
    Ok("20 rule traces exact, threshold boundaries classified, short sentences never scored".into())
}

fn lexicon_directions() -> Vec<(String, i32)> {
    include_str!("../data/power_verbs.tsv")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (verb, dir) = l.split_once('\t').expect("two columns");
            let sign = match dir.trim() {
                "agent_power" => 1,
                "theme_power" => -1,
                "equal" => 0,
                other => panic!("unknown direction {other}"),
            };
            (verb.trim().to_string(), sign)
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let power = PowerLexicon::default_lexicon();
    let personas: Vec<String> = PersonaLexicon::default_lexicon().personas().to_vec();
    let verbs = lexicon_directions();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut triples = Vec::new();
    let mut whole = PowerLedger::empty("all", &personas);
    for i in 0..10_000 {
        let s = rng.random_range(0..personas.len());
        let o = (s + rng.random_range(1..personas.len())) % personas.len();
        let (verb, sign) = &verbs[rng.random_range(0..verbs.len())];
        let t = SvoTriple {
            subject: personas[s].clone(),
            verb: verb.clone(),
            object: Some(personas[o].clone()),
            sentence_idx: i,
        };
        let mut single = PowerLedger::empty("one", &personas);
        ensure!(single.add(&t, &power), "triple {t:?} not scored");
        let total: f64 = single.scores.iter().sum();
        ensure!(total == 0.0, "triple {t:?} is not zero-sum: {total}");
        ensure!(
            single.scores[s] == *sign as f64 && single.scores[o] == -(*sign as f64),
            "triple {t:?}: subject {} object {}, lexicon sign {sign}",
            single.scores[s],
            single.scores[o]
        );
        whole.add(&t, &power);
        triples.push(t);
    }
    for parts in [2usize, 3, 7] {
        let mut ledgers: Vec<PowerLedger> = (0..parts).map(|_| PowerLedger::empty("all", &personas)).collect();
        for t in &triples {
            ledgers[rng.random_range(0..parts)].add(t, &power);
        }
        let mut merged = PowerLedger::empty("all", &personas);
        for l in &ledgers {
            merged.merge(l).map_err(|e| e.to_string())?;
        }
        ensure!(merged == whole, "ledger over {parts} parts differs from the whole");
    }

    let ws = workspace();
    let out = ws.root.path().join("fault");
    let clean = ws.root.path().join("fault_clean.toml");
    let inverted = ws.root.path().join("fault_inverted.toml");
    fs::write(&clean, "seed = 42\n[topics]\nk = 5\niterations = 200\n").map_err(|e| e.to_string())?;
    fs::write(&inverted, "seed = 42\n[topics]\nk = 5\niterations = 200\n[personas]\ninvert_power = true\n")
        .map_err(|e| e.to_string())?;
    let synth = run_cli(&["synth"], &clean, &out);
    ensure!(synth.status.success(), "synth failed: {}", describe(&synth));
    let verify = run_cli(&["verify"], &inverted, &out);
    ensure!(verify.status.code() == Some(3), "inverted run should exit 3: {}", describe(&verify));
    let report: VerificationReport = read_json(&out.join("verify/report.json")).map_err(|e| e.to_string())?;
    ensure!(report.status("power").map(|s| s.to_string()) == Some("FAIL".into()), "power check did not fail");
    let control = run_cli(&["verify"], &clean, &out);
    ensure!(control.status.code() == Some(0), "clean control should pass: {}", describe(&control));
    Ok("10000 triples zero-sum, ledgers additive over 2/3/7-way partitions, inverted lexicon caught by verify (exit 3)".into())
}

fn criterion_8() -> Outcome {
    let lex = OracleLexicons::default();
    let threshold = PipelineConfig::default().verify.min_distractor_recall;
    let clean = measure_svo_recall(TemplateSet::Clean, 1200, 42, &lex).map_err(|e| e.to_string())?;
    let distractor = measure_svo_recall(TemplateSet::Distractor, 1200, 42, &lex).map_err(|e| e.to_string())?;
    ensure!(clean.recall == 1.0, "clean recall {} ({:?})", clean.recall, clean.per_template);
    ensure!(
        distractor.recall >= threshold,
        "distractor recall {:.3} below {threshold} ({:?})",
        distractor.recall,
        distractor.per_template
    );
    Ok(format!(
        "clean {}/{} = 1.000; distractor {}/{} = {:.3} (threshold {threshold}); per template {:?}",
        clean.recovered, clean.sentences, distractor.recovered, distractor.sentences, distractor.recall, distractor.per_template
    ))
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn is_temp(rel: &Path) -> bool {
    rel.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with('.') && n.contains(".tmp."))
}

/// Every non-temporary file under `partial` must equal its counterpart from
/// the completed reference run.
fn no_partial_artifacts(partial: &Path, reference: &Path) -> Result<(usize, usize), String> {
    let mut finals = 0;
    let mut temps = 0;
    for rel in files_under(partial) {
        if is_temp(&rel) {
            temps += 1;
            continue;
        }
        finals += 1;
        let got = fs::read(partial.join(&rel)).map_err(|e| e.to_string())?;
        let want = fs::read(reference.join(&rel)).map_err(|e| format!("{} has no reference: {e}", rel.display()))?;
        ensure!(got == want, "{} differs from the completed run (partial write?)", rel.display());
    }
    Ok((finals, temps))
}

fn criterion_9() -> Outcome {
    let reference = reference_run()?;
    let ws = workspace();
    let second = ws.root.path().join("run_b");
    let (_, verify) = synth_and_verify(&ws.config(), &second)?;
    ensure!(verify.status.code() == Some(0), "second run failed: {}", describe(&verify));
    let manifests = files_under(&reference.join("manifests"));
    ensure!(manifests.len() >= 9, "only {} manifests", manifests.len());
    for m in &manifests {
        let a = fs::read(reference.join("manifests").join(m)).map_err(|e| e.to_string())?;
        let b = fs::read(second.join("manifests").join(m)).map_err(|e| e.to_string())?;
        ensure!(a == b, "manifest {} differs between output directories", m.display());
    }

    let killed = ws.root.path().join("run_killed");
    let mut kills = 0;
    let mut checked = 0;
    let mut temps_seen = 0;
    for delay_ms in [5u64, 30, 80, 150, 300, 500, 800, 1200, 2000, 3000] {
        let stage = if killed.join("manifests/synth.json").is_file() { "verify" } else { "synth" };
        let mut child = Command::new(BIN)
            .args([stage, "--config"])
            .arg(ws.config())
            .arg("--out")
            .arg(&killed)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        std::thread::sleep(Duration::from_millis(delay_ms));
        if child.try_wait().map_err(|e| e.to_string())?.is_none() {
            child.kill().map_err(|e| e.to_string())?;
            kills += 1;
        }
        let _ = child.wait();
        let (finals, temps) = no_partial_artifacts(&killed, &reference)?;
        checked += finals;
        temps_seen = temps_seen.max(temps);
    }
    ensure!(kills > 0, "no run was interrupted");
    let (_, verify) = synth_and_verify(&ws.config(), &killed)?;
    ensure!(verify.status.code() == Some(0), "resumed run failed: {}", describe(&verify));
    for m in &manifests {
        let a = fs::read(reference.join("manifests").join(m)).map_err(|e| e.to_string())?;
        let b = fs::read(killed.join("manifests").join(m)).map_err(|e| e.to_string())?;
        ensure!(a == b, "manifest {} differs after interrupted runs", m.display());
    }
    Ok(format!(
        "{} manifests identical across output dirs; {kills} kills, {checked} final-name files checked, none partial ({temps_seen} stray temp files)",
        manifests.len()
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "oracle end-to-end", criterion_1),
        (2, "K-selection recovery", criterion_2),
        (3, "LDA invariants", criterion_3),
        (4, "statistics fidelity", criterion_4),
        (5, "segmentation partition", criterion_5),
        (6, "sentiment contract", criterion_6),
        (7, "power scoring", criterion_7),
        (8, "SVO recall", criterion_8),
        (9, "determinism and atomicity", criterion_9),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{secs:.1}s] {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
