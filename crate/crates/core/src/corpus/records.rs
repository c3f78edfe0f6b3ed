//! Casenote record ingestion and per-case chronological collation.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl RecordFormat {
    /// Guess the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => RecordFormat::Jsonl,
            _ => RecordFormat::Csv,
        }
    }
}

/// One casenote entry as written by a caseworker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub case_id: String,
    #[serde(with = "timestamp_serde")]
    pub timestamp: NaiveDateTime,
    #[serde(default)]
    pub duration_minutes: Option<u32>,
    #[serde(default)]
    pub author_id: Option<String>,
    pub text: String,
}

/// A row that could not be turned into a [`RawRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadOutcome {
    pub records: Vec<RawRecord>,
    pub dropped_empty: usize,
    pub row_errors: Vec<RowError>,
}

pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%m/%d/%Y %H:%M:%S",
        "%m/%d/%Y %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt);
        }
    }
    for fmt in ["%Y-%m-%d", "%m/%d/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(raw, fmt) {
            return d.and_hms_opt(0, 0, 0);
        }
    }
    None
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

mod timestamp_serde {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("unparseable timestamp {raw:?}")))
    }
}

/// Load casenote records. Rows with blank text are dropped and counted;
/// malformed rows are reported with their line number and skipped. A missing
/// required column is fatal.
pub fn load_records<R: Read>(source: R, format: RecordFormat) -> Result<LoadOutcome> {
    match format {
        RecordFormat::Csv => load_csv(source),
        RecordFormat::Jsonl => load_jsonl(source),
    }
}

struct Columns {
    case_id: usize,
    timestamp: usize,
    text: usize,
    duration: Option<usize>,
    author: Option<usize>,
}

fn load_csv<R: Read>(source: R) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| {
        find(name).ok_or_else(|| Error::Format(format!("missing required column `{name}`")))
    };
    let cols = Columns {
        case_id: required("case_id")?,
        timestamp: required("timestamp")?,
        text: required("text")?,
        duration: find("duration_minutes"),
        author: find("author_id"),
    };

    let mut out = LoadOutcome::default();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.row_errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let fields = RowFields {
            case_id: field(cols.case_id),
            timestamp: field(cols.timestamp),
            text: field(cols.text),
            duration: cols.duration.map(field),
            author: cols.author.map(field),
        };
        if row.len() <= cols.text.max(cols.case_id).max(cols.timestamp) {
            out.row_errors.push(RowError {
                line,
                message: format!("row has {} fields, expected at least {}", row.len(), headers.len()),
            });
            continue;
        }
        push_row(&mut out, line, fields);
    }
    Ok(out)
}

struct RowFields<'a> {
    case_id: &'a str,
    timestamp: &'a str,
    text: &'a str,
    duration: Option<&'a str>,
    author: Option<&'a str>,
}

fn push_row(out: &mut LoadOutcome, line: u64, f: RowFields<'_>) {
    let fail = |out: &mut LoadOutcome, message: String| out.row_errors.push(RowError { line, message });
    if f.text.trim().is_empty() {
        out.dropped_empty += 1;
        return;
    }
    let case_id = f.case_id.trim();
    if case_id.is_empty() {
        return fail(out, "empty case_id".into());
    }
    let Some(timestamp) = parse_timestamp(f.timestamp) else {
        return fail(out, format!("unparseable timestamp {:?}", f.timestamp));
    };
    let duration_minutes = match f.duration.map(str::trim).filter(|s| !s.is_empty()) {
        None => None,
        Some(d) => match d.parse::<u32>() {
            Ok(v) => Some(v),
            Err(_) => return fail(out, format!("invalid duration_minutes {d:?}")),
        },
    };
    let author_id = f
        .author
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    out.records.push(RawRecord {
        case_id: case_id.to_string(),
        timestamp,
        duration_minutes,
        author_id,
        text: f.text.to_string(),
    });
}

fn load_jsonl<R: Read>(source: R) -> Result<LoadOutcome> {
    let mut out = LoadOutcome::default();
    let reader = BufReader::new(source);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::Format(format!("line {line_no}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                out.row_errors.push(RowError {
                    line: line_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            out.row_errors.push(RowError {
                line: line_no,
                message: "row is not a JSON object".into(),
            });
            continue;
        };
        let missing: Vec<_> = ["case_id", "timestamp", "text"]
            .into_iter()
            .filter(|k| !obj.contains_key(*k))
            .collect();
        if !missing.is_empty() {
            out.row_errors.push(RowError {
                line: line_no,
                message: format!("missing keys {missing:?}"),
            });
            continue;
        }
        let as_text = |key: &str| -> Option<String> {
            match obj.get(key)? {
                serde_json::Value::Null => None,
                serde_json::Value::String(s) => Some(s.clone()),
                other => Some(other.to_string()),
            }
        };
        let case_id = as_text("case_id").unwrap_or_default();
        let timestamp = as_text("timestamp").unwrap_or_default();
        let text = as_text("text").unwrap_or_default();
        let duration = as_text("duration_minutes");
        let author = as_text("author_id");
        push_row(
            &mut out,
            line_no,
            RowFields {
                case_id: &case_id,
                timestamp: &timestamp,
                text: &text,
                duration: duration.as_deref(),
                author: author.as_deref(),
            },
        );
    }
    Ok(out)
}

/// Write records in the CSV layout accepted by [`load_records`].
pub fn write_records_csv<W: Write>(records: &[RawRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["case_id", "timestamp", "duration_minutes", "author_id", "text"])?;
    for r in records {
        w.write_record([
            r.case_id.as_str(),
            &format_timestamp(&r.timestamp),
            &r.duration_minutes.map(|d| d.to_string()).unwrap_or_default(),
            r.author_id.as_deref().unwrap_or(""),
            r.text.as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

/// All casenotes for one case, in chronological order, before tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollatedCase {
    pub case_id: String,
    pub interaction_count: usize,
    pub records: Vec<String>,
}

impl CollatedCase {
    pub fn text(&self) -> String {
        self.records.join(" ")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Collation {
    pub cases: Vec<CollatedCase>,
    pub duplicates_removed: usize,
}

/// Group records by case, ordered by timestamp (ties keep input order).
/// Exact `(case_id, timestamp, text)` repeats are dropped. Cases come out
/// sorted by case id.
pub fn collate_by_case(records: &[RawRecord]) -> Result<Collation> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to collate".into()));
    }
    let mut by_case: BTreeMap<&str, Vec<&RawRecord>> = BTreeMap::new();
    let mut seen: HashSet<(&str, NaiveDateTime, &str)> = HashSet::new();
    let mut duplicates_removed = 0;
    for r in records {
        if !seen.insert((r.case_id.as_str(), r.timestamp, r.text.as_str())) {
            duplicates_removed += 1;
            continue;
        }
        by_case.entry(r.case_id.as_str()).or_default().push(r);
    }
    if duplicates_removed > 0 {
        log::warn!("dropped {duplicates_removed} duplicate casenote record(s)");
    }
    let cases = by_case
        .into_iter()
        .map(|(case_id, mut recs)| {
            recs.sort_by_key(|r| r.timestamp);
            CollatedCase {
                case_id: case_id.to_string(),
                interaction_count: recs.len(),
                records: recs.iter().map(|r| r.text.clone()).collect(),
            }
        })
        .collect();
    Ok(Collation {
        cases,
        duplicates_removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(case: &str, ts: &str, text: &str) -> RawRecord {
        RawRecord {
            case_id: case.into(),
            timestamp: parse_timestamp(ts).unwrap(),
            duration_minutes: None,
            author_id: None,
            text: text.into(),
        }
    }

    #[test]
    fn csv_drops_empty_text_rows() {
        let csv = "case_id,timestamp,duration_minutes,author_id,text\n\
                   A,2020-01-01 10:00:00,30,w1,Visit went fine.\n\
                   A,2020-01-02 10:00:00,,w1,   \n\
                   B,2020-01-03,15,,Phone call.\n";
        let out = load_records(csv.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.dropped_empty, 1);
        assert!(out.row_errors.is_empty());
        assert_eq!(out.records[0].duration_minutes, Some(30));
        assert_eq!(out.records[1].author_id, None);
    }

    #[test]
    fn csv_missing_text_column_is_fatal() {
        let csv = "case_id,timestamp\nA,2020-01-01\n";
        let err = load_records(csv.as_bytes(), RecordFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn csv_bad_timestamp_reports_line() {
        let csv = "case_id,timestamp,text\nA,2020-01-01,ok\nA,yesterday,bad\n";
        let out = load_records(csv.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.row_errors.len(), 1);
        assert_eq!(out.row_errors[0].line, 3);
    }

    #[test]
    fn jsonl_keeps_input_order() {
        let jsonl = r#"{"case_id":"A","timestamp":"2020-03-01T00:00:00","text":"later"}
{"case_id":"A","timestamp":"2020-01-01T00:00:00","text":"earlier"}
not json
"#;
        let out = load_records(jsonl.as_bytes(), RecordFormat::Jsonl).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].text, "later");
        assert_eq!(out.row_errors.len(), 1);
        assert_eq!(out.row_errors[0].line, 3);
    }

    #[test]
    fn collate_groups_chronologically() {
        let records = vec![
            rec("A", "2020-01-02", "y"),
            rec("B", "2020-01-01", "z"),
            rec("A", "2020-01-01", "x"),
        ];
        let c = collate_by_case(&records).unwrap();
        assert_eq!(c.cases.len(), 2);
        assert_eq!(c.cases[0].case_id, "A");
        assert_eq!(c.cases[0].interaction_count, 2);
        assert_eq!(c.cases[0].text(), "x y");
        assert_eq!(c.cases[1].interaction_count, 1);
    }

    #[test]
    fn collate_single_record() {
        let c = collate_by_case(&[rec("A", "2020-01-01", "only")]).unwrap();
        assert_eq!(c.cases.len(), 1);
        assert_eq!(c.cases[0].interaction_count, 1);
    }

    #[test]
    fn collate_dedups_exact_triples_and_keeps_tie_order() {
        let records = vec![
            rec("A", "2020-01-01", "first"),
            rec("A", "2020-01-01", "second"),
            rec("A", "2020-01-01", "first"),
        ];
        let c = collate_by_case(&records).unwrap();
        assert_eq!(c.duplicates_removed, 1);
        assert_eq!(c.cases[0].records, vec!["first", "second"]);
    }

    #[test]
    fn collate_rejects_empty() {
        assert!(collate_by_case(&[]).is_err());
    }

    #[test]
    fn realistic_scale_case_count() {
        // 310 families, 9719 entries spread unevenly across them.
        let mut records = Vec::new();
        for i in 0..9719usize {
            let case = format!("F{:03}", (i * 7919) % 310);
            let day = 1 + (i % 28);
            records.push(rec(&case, &format!("2020-02-{day:02}"), &format!("note {i}")));
        }
        let c = collate_by_case(&records).unwrap();
        assert_eq!(c.cases.len(), 310);
        assert_eq!(c.cases.iter().map(|c| c.interaction_count).sum::<usize>(), 9719);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec("A", "2020-01-01 09:30:00", "Said \"hi\", left.")];
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf).unwrap();
        let back = load_records(buf.as_slice(), RecordFormat::Csv).unwrap();
        assert_eq!(back.records, records);
    }
}
