//! Hand-written SVG charts. Output depends only on the inputs: fixed
//! viewboxes, fixed number formatting, colors keyed by group label.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cohort_lifeline::LifelineTrend;
use crate::error::Result;
use crate::persona_power::PowerLedger;

use super::artifacts::atomic_write_bytes;

const PALETTE: &[&str] = &["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

/// Color of a group label. The default labels get the first three colors;
/// any other label is hashed (FNV-1a) into the palette.
pub fn group_color(label: &str) -> &'static str {
    match label {
        "G1" => PALETTE[0],
        "G2" => PALETTE[1],
        "G3" => PALETTE[2],
        _ => {
            let h = label.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
            PALETTE[(h % PALETTE.len() as u64) as usize]
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, w: u32, h: u32, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2, escape(title));
}

/// Round up to a multiple of 0.05, at least 0.05.
fn nice_max(v: f64) -> f64 {
    ((v / 0.05).ceil() * 0.05).max(0.05)
}

/// Line chart of one topic's section means, one series per group.
pub fn trend_svg(topic_id: usize, series: &[&LifelineTrend]) -> String {
    let (w, h) = (640u32, 400u32);
    let (left, right, top, bottom) = (60.0, 110.0, 40.0, 50.0);
    let pw = w as f64 - left - right;
    let ph = h as f64 - top - bottom;
    let n = series.iter().map(|s| s.section_means.len()).max().unwrap_or(0).max(1);
    let ymax = nice_max(series.iter().flat_map(|s| s.section_means.iter().copied()).fold(0.0, f64::max));
    let x = |i: usize| left + if n == 1 { pw / 2.0 } else { pw * i as f64 / (n - 1) as f64 };
    let y = |v: f64| top + ph * (1.0 - v / ymax);

    let mut out = String::new();
    header(&mut out, w, h, &format!("Topic {topic_id}"));
    let _ = writeln!(
        out,
        r#"<line x1="{left:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(out, r#"<line x1="{left:.1}" y1="{top:.1}" x2="{left:.1}" y2="{:.1}" stroke="black"/>"#, top + ph);
    for i in 0..n {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}%</text>"#,
            x(i),
            top + ph + 18.0,
            (i + 1) * 100 / n
        );
    }
    for t in 0..=4 {
        let v = ymax * t as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">Section of case</text>"#,
        left + pw / 2.0,
        h - 10
    );
    for (si, s) in series.iter().enumerate() {
        let color = group_color(&s.group);
        let points: Vec<String> = s.section_means.iter().enumerate().map(|(i, v)| format!("{:.1},{:.1}", x(i), y(*v))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 16.0 * si as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(out, r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{color}"/>"#, ly);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{} (n={})</text>"#,
            lx + 18.0,
            ly + 10.0,
            escape(&s.group),
            s.n_documents
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of persona scores for one group.
pub fn scores_svg(ledger: &PowerLedger) -> String {
    let n = ledger.personas.len().max(1);
    let bar = 56.0;
    let (left, top, bottom) = (50.0, 40.0, 90.0);
    let w = (left + bar * n as f64 + 30.0).max(320.0) as u32;
    let h = 400u32;
    let ph = h as f64 - top - bottom;
    let extent = ledger.scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let extent = if extent > 0.0 { extent } else { 1.0 };
    let zero = top + ph / 2.0;
    let scale = (ph / 2.0) / extent;

    let mut out = String::new();
    header(&mut out, w, h, &format!("Power scores, {}", ledger.group));
    let _ = writeln!(
        out,
        r#"<line x1="{left:.1}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="black"/>"#,
        left + bar * n as f64
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{extent:.0}</text>"#, left - 6.0, top + 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">0</text>"#, left - 6.0, zero + 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">-{extent:.0}</text>"#, left - 6.0, top + ph + 4.0);
    let color = group_color(&ledger.group);
    for (i, (p, s)) in ledger.personas.iter().zip(&ledger.scores).enumerate() {
        let x = left + bar * i as f64 + 8.0;
        let height = s.abs() * scale;
        let y = if *s >= 0.0 { zero - height } else { zero };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{height:.1}" fill="{color}"><title>{}: {s}</title></rect>"#,
            bar - 16.0,
            escape(p)
        );
        let lx = x + (bar - 16.0) / 2.0;
        let ly = top + ph + 14.0;
        let _ = writeln!(
            out,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-40 {lx:.1} {ly:.1})">{}</text>"#,
            escape(p)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Diverging fill for a value in [-1, 1]: blue for negative, red for positive.
fn diverging(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Heatmap of the co-occurrence-normalized matrix: rows are subjects,
/// columns objects.
pub fn heatmap_svg(ledger: &PowerLedger) -> String {
    let n = ledger.personas.len();
    let cell = 54.0;
    let (left, top) = (130.0, 120.0);
    let w = (left + cell * n as f64 + 20.0).max(320.0) as u32;
    let h = (top + cell * n as f64 + 20.0).max(200.0) as u32;
    let norm = ledger.normalized_matrix();
    let mut out = String::new();
    header(&mut out, w, h, &format!("Pairwise power, {}", ledger.group));
    for (i, p) in ledger.personas.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * i as f64 + cell / 2.0 + 4.0,
            escape(p)
        );
        let cx = left + cell * i as f64 + cell / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="start" transform="rotate(-50 {cx:.1} {:.1})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(p)
        );
    }
    for (i, row) in norm.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let _ = writeln!(
                out,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{}" stroke="#cccccc"/>"##,
                diverging(*v)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Write one trend chart per topic and a bar chart plus heatmap per ledger.
/// Returns the written paths in a stable order.
pub fn emit_figures(trends: &[LifelineTrend], ledgers: &[PowerLedger], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut topics: Vec<usize> = trends.iter().map(|t| t.topic_id).collect();
    topics.sort_unstable();
    topics.dedup();
    for k in topics {
        let series: Vec<&LifelineTrend> = trends.iter().filter(|t| t.topic_id == k).collect();
        let path = dir.join(format!("trend_topic_{k:02}.svg"));
        atomic_write_bytes(&path, trend_svg(k, &series).as_bytes())?;
        written.push(path);
    }
    for l in ledgers {
        let safe: String = l.group.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        let path = dir.join(format!("power_scores_{safe}.svg"));
        atomic_write_bytes(&path, scores_svg(l).as_bytes())?;
        written.push(path);
        let path = dir.join(format!("power_heatmap_{safe}.svg"));
        atomic_write_bytes(&path, heatmap_svg(l).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trend(group: &str, topic: usize, means: Vec<f64>) -> LifelineTrend {
        LifelineTrend {
            group: group.into(),
            topic_id: topic,
            n_documents: 3,
            section_means: means,
        }
    }

    #[test]
    fn one_group_one_topic() {
        let dir = tempfile::tempdir().unwrap();
        let t = vec![trend("G1", 0, vec![0.1; 10])];
        let files = emit_figures(&t, &[], dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("100%"));
    }

    #[test]
    fn empty_ledger_has_flat_bars() {
        let personas: Vec<String> = vec!["a".into(), "b".into()];
        let l = PowerLedger::empty("G2", &personas);
        let svg = scores_svg(&l);
        assert_eq!(svg.matches(r#"height="0.0""#).count(), 2);
        assert!(heatmap_svg(&l).contains("0.00"));
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let t = vec![trend("A<B", 2, vec![0.3, 0.2]), trend("G1", 2, vec![0.1, 0.4])];
        let refs: Vec<&LifelineTrend> = t.iter().collect();
        assert_eq!(trend_svg(2, &refs), trend_svg(2, &refs));
        assert!(trend_svg(2, &refs).contains("A&lt;B"));
        assert_eq!(group_color("G1"), "#1b9e77");
        assert_eq!(group_color("custom"), group_color("custom"));
    }

    #[test]
    fn diverging_endpoints() {
        assert_eq!(diverging(0.0), "#ffffff");
        assert_eq!(diverging(1.0), "#ff0000");
        assert_eq!(diverging(-1.0), "#0000ff");
    }
}
