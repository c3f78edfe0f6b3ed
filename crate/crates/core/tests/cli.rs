use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use narrative_miner::cli_report::{read_json, RunManifest};
use narrative_miner::synth_oracle::VerificationReport;

const BIN: &str = env!("CARGO_BIN_EXE_narrative-miner");

/// Small corpus and short training so each test runs in a few seconds.
const SMALL: &str = r#"seed = 7

[topics]
k = 5
iterations = 150

[personas]
min_documents = 20

[synth]
recall_sentences = 120

[synth.spec]
n_cases = 60
min_persona_documents = 20
"#;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn downstream_stage_without_upstream_exits_2() {
    let dir = setup(SMALL);
    let o = cli(dir.path(), &["trends", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("`train`"), "{}", stderr(&o));

    let o = cli(dir.path(), &["ingest", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`synth`"));

    let o = cli(dir.path(), &["verify", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_1() {
    let dir = setup("[topics]\nbeta = 0.0\n");
    let o = cli(dir.path(), &["stats", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("configuration"));

    fs::write(dir.path().join("c.toml"), "[topics]\nkk = 3\n").unwrap();
    assert_eq!(cli(dir.path(), &["stats", "--config", "c.toml"]).status.code(), Some(1));

    fs::write(dir.path().join("c.toml"), "[verify]\ntopic_overlap = 1.5\n").unwrap();
    assert_eq!(cli(dir.path(), &["stats", "--config", "c.toml"]).status.code(), Some(1));

    fs::write(dir.path().join("c.toml"), "[inputs]\ncorpus = \"missing.csv\"\n").unwrap();
    assert_eq!(cli(dir.path(), &["ingest", "--config", "c.toml"]).status.code(), Some(1));

    assert_eq!(cli(dir.path(), &["stats", "--config", "nowhere.toml"]).status.code(), Some(1));
    assert_eq!(cli(dir.path(), &["no-such-stage"]).status.code(), Some(1));
    assert_eq!(cli(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn synth_verify_report_and_checksum_guard() {
    let dir = setup(SMALL);
    let o = cli(dir.path(), &["synth", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cli(dir.path(), &["verify", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = dir.path().join("out");
    let report: VerificationReport = read_json(&out.join("verify/report.json")).unwrap();
    assert!(report.all_pass(), "{}", report.render());

    let o = cli(dir.path(), &["verify", "--config", "c.toml"]);
    assert!(stdout(&o).contains("up to date"));

    let o = cli(dir.path(), &["report", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let tables = fs::read_to_string(out.join("report/tables.txt")).unwrap();
    for title in ["Corpus Statistics", "Descriptive statistics on family interactions", "Persona references", "Power scores, G1"] {
        assert!(tables.contains(title), "missing {title}");
    }
    let figures: Vec<_> = fs::read_dir(out.join("report/figures")).unwrap().flatten().collect();
    assert!(figures.len() >= 5 + 2 * 3);
    for f in &figures {
        let svg = fs::read_to_string(f.path()).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    // Tampering with an output makes the stage stale; --force always reruns.
    let model = out.join("model/topics.txt");
    fs::write(&model, "edited").unwrap();
    let o = cli(dir.path(), &["train", "--config", "c.toml"]);
    assert!(stdout(&o).starts_with("train: K = 5"), "{}", stdout(&o));
    let o = cli(dir.path(), &["train", "--config", "c.toml"]);
    assert!(stdout(&o).contains("up to date"));
    let o = cli(dir.path(), &["train", "--config", "c.toml", "--force"]);
    assert!(stdout(&o).starts_with("train: K = 5"));

    let m: RunManifest = read_json(&out.join("manifests/train.json")).unwrap();
    assert_eq!(m.stage, "train");
    assert!(m.inputs.contains_key("corpus/documents.jsonl"));
    assert!(m.outputs.contains_key("model/model.json"));
}

#[test]
fn seed_flag_changes_the_synthetic_corpus() {
    let dir = setup(SMALL);
    cli(dir.path(), &["synth", "--config", "c.toml", "--out", "a"]);
    cli(dir.path(), &["synth", "--config", "c.toml", "--out", "b"]);
    cli(dir.path(), &["synth", "--config", "c.toml", "--out", "c", "--seed", "8"]);
    let read = |d: &str| fs::read(dir.path().join(d).join("synth/corpus.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let m: RunManifest = read_json(&dir.path().join("c/manifests/synth.json")).unwrap();
    assert_eq!(m.seed, 8);
}

#[test]
fn external_corpus_runs_through_the_descriptive_stages() {
    let mut csv = String::from("case_id,timestamp,duration_minutes,author_id,text\n");
    for c in 0..12 {
        for r in 0..(c % 5 + 1) {
            csv.push_str(&format!(
                "K{c},2020-03-{:02} 10:00,30,W1,\"The caseworker met the mother and the child at home. The visit went very well and the child was happy. Mom asked about the court date on {r}.\"\n",
                r + 1
            ));
        }
    }
    csv.push_str("K99,not a date,,W1,broken row\n");
    let dir = setup("[inputs]\ncorpus = \"notes.csv\"\n\n[topics]\nk = 2\niterations = 20\nmin_doc_frequency = 1\n\n[personas]\nmin_documents = 1\n");
    fs::write(dir.path().join("notes.csv"), csv).unwrap();
    for stage in ["ingest", "stats", "train", "trends", "sentiment", "personas", "power", "report"] {
        let o = cli(dir.path(), &[stage, "--config", "c.toml"]);
        assert_eq!(o.status.code(), Some(0), "{stage}: {}", stderr(&o));
    }
    let out = dir.path().join("out");
    let ingest: serde_json::Value = read_json(&out.join("corpus/ingest.json")).unwrap();
    assert_eq!(ingest["n_cases"], 12);
    assert_eq!(ingest["row_errors"].as_array().unwrap().len(), 1);
    let cohorts = fs::read_to_string(out.join("stats/cohorts.csv")).unwrap();
    assert_eq!(cohorts.lines().count(), 13);
    assert!(cohorts.lines().skip(1).all(|l| l.ends_with(",G1")));
    let sentiment: serde_json::Value = read_json(&out.join("sentiment/summary.json")).unwrap();
    assert!(sentiment["positive"].as_u64().unwrap() > 0);
}
