//! Report artifacts: a JSON report per run, and per-metric CSV tables and SVG line charts
//! rendered from one or more reports.
//!
//! Charts and tables are built from [`Report`] values only, so any set of saved
//! `report.json` files can be compared without re-running an evaluation. Nothing in the
//! output depends on the clock, so reruns are byte-identical.

use crate::corpus::Subset;
use crate::evaluator::{
    aggregate_by_depth, aggregate_by_subset, summary, CiMode, DepthAggregate, EvalRecord, InvalidHandling, Metric,
    SummaryRow,
};
use crate::extraction::TemplateFamily;
use crate::penman::StructuralErrorKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: report schema version {found}, expected {SCHEMA_VERSION}")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Settings that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub seed: u64,
    pub restarts: usize,
    pub exact_threshold: usize,
    pub family: Option<TemplateFamily>,
    pub ci_mode: CiMode,
    pub invalid: InvalidHandling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub id: String,
    pub depth: usize,
    pub subset: Subset,
    pub valid: bool,
    pub errors: Vec<StructuralErrorKind>,
    pub raw_length: usize,
    pub matched: Option<usize>,
    pub gold_triples: Option<usize>,
    pub pred_triples: Option<usize>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl From<&EvalRecord> for RecordRow {
    fn from(r: &EvalRecord) -> Self {
        let s = r.score.as_ref();
        Self {
            id: r.entry_id.clone(),
            depth: r.depth,
            subset: r.subset.clone(),
            valid: r.is_valid(),
            errors: r.structural.kinds(),
            raw_length: r.raw_length,
            matched: s.map(|s| s.matched),
            gold_triples: s.map(|s| s.gold_triples),
            pred_triples: s.map(|s| s.pred_triples),
            precision: s.map(|s| s.precision),
            recall: s.map(|s| s.recall),
            f1: s.map(|s| s.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSection {
    pub subset: Subset,
    pub summary: Vec<SummaryRow>,
    pub depths: Vec<DepthAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub label: String,
    pub run: RunInfo,
    pub summary: Vec<SummaryRow>,
    pub depths: Vec<DepthAggregate>,
    pub subsets: Vec<SubsetSection>,
    pub records: Vec<RecordRow>,
}

impl Report {
    /// Aggregates `records` into a report. Records are listed in the order given.
    pub fn build(label: &str, run: RunInfo, records: &[EvalRecord]) -> Result<Self, ReportError> {
        if records.is_empty() {
            return Err(ReportError::Empty);
        }
        let depths = aggregate_by_depth(records, run.invalid);
        let subsets = aggregate_by_subset(records, run.invalid)
            .into_iter()
            .map(|(subset, aggs)| {
                let recs: Vec<EvalRecord> = records.iter().filter(|r| r.subset == subset).cloned().collect();
                SubsetSection {
                    summary: summary(&recs, &aggs, run.ci_mode, run.invalid),
                    subset,
                    depths: aggs,
                }
            })
            .collect();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            label: label.to_string(),
            summary: summary(records, &depths, run.ci_mode, run.invalid),
            depths,
            subsets,
            records: records.iter().map(RecordRow::from).collect(),
            run,
        })
    }

    pub fn summary_row(&self, metric: Metric) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.metric == metric)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.into(), source })?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|source| ReportError::Json { path: path.into(), source })?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(ReportError::Schema { path: path.into(), found });
        }
        serde_json::from_value(value).map_err(|source| ReportError::Json { path: path.into(), source })
    }
}

fn write(path: &Path, contents: &str) -> Result<(), ReportError> {
    std::fs::write(path, contents).map_err(|source| ReportError::Io { path: path.into(), source })
}

/// Writes `report.json` plus the tables and charts for this single run. Returns the paths written.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if report.records.is_empty() {
        return Err(ReportError::Empty);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.into(), source })?;
    let path = out_dir.join(REPORT_FILE);
    write(&path, &report.to_json())?;
    let mut written = vec![path];
    written.extend(render(std::slice::from_ref(report), out_dir)?);
    Ok(written)
}

/// Writes `<metric>.csv` and `<metric>.svg` for each metric, one column or series per report.
pub fn render(reports: &[Report], out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::Empty);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.into(), source })?;
    let mut written = Vec::new();
    for metric in Metric::ALL {
        let csv_path = out_dir.join(format!("{}.csv", metric.slug()));
        write(&csv_path, &metric_csv(reports, metric).map_err(|source| ReportError::Csv {
            path: csv_path.clone(),
            source,
        })?)?;
        let svg_path = out_dir.join(format!("{}.svg", metric.slug()));
        write(&svg_path, &line_chart(reports, metric))?;
        written.extend([csv_path, svg_path]);
    }
    Ok(written)
}

fn all_depths(reports: &[Report]) -> Vec<usize> {
    let set: BTreeSet<usize> = reports.iter().flat_map(|r| r.depths.iter().map(|d| d.depth)).collect();
    set.into_iter().collect()
}

fn value_at(report: &Report, metric: Metric, depth: usize) -> Option<f64> {
    report.depths.iter().find(|a| a.depth == depth).and_then(|a| metric.of(a))
}

/// `depth,<label>,...` with one row per depth present in any report; empty cells mark gaps.
pub fn metric_csv(reports: &[Report], metric: Metric) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["depth".to_string()];
    header.extend(reports.iter().map(|r| r.label.clone()));
    w.write_record(&header)?;
    for d in all_depths(reports) {
        let mut row = vec![d.to_string()];
        row.extend(
            reports
                .iter()
                .map(|r| value_at(r, metric, d).map(|v| format!("{v}")).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of `metric` against depth, one labeled series per report.
///
/// Fractions use a fixed 0–1 axis; error counts scale to the largest value. Missing values
/// break the line.
pub fn line_chart(reports: &[Report], metric: Metric) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 150.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    let depths = all_depths(reports);
    let (d_min, d_max) = (
        depths.first().copied().unwrap_or(0) as f64,
        depths.last().copied().unwrap_or(1) as f64,
    );
    let y_max = if metric == Metric::MeanErrorCount {
        let top = reports
            .iter()
            .flat_map(|r| depths.iter().filter_map(move |&d| value_at(r, metric, d)))
            .fold(0.0f64, f64::max);
        top.ceil().max(1.0)
    } else {
        1.0
    };
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let x = |d: f64| {
        if d_max > d_min {
            LEFT + (d - d_min) / (d_max - d_min) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let y = |v: f64| TOP + plot_h - v / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{} by depth</text>"#,
        LEFT + plot_w / 2.0,
        metric.name()
    );
    // Axes, grid and ticks.
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0:.1}"/></g>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            yy + 4.0,
            trim_number(v)
        );
    }
    for &d in &depths {
        let xx = x(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.1}" y1="{0:.1}" x2="{xx:.1}" y2="{1:.1}" stroke="black"/><text x="{xx:.1}" y="{2:.1}" text-anchor="middle">{d}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Depth</text>"#,
        LEFT + plot_w / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
        TOP + plot_h / 2.0,
        metric.name()
    );
    // Series.
    for (i, r) in reports.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let label = escape(&r.label);
        let _ = writeln!(s, r#"<g class="series" data-label="{label}" stroke="{colour}" fill="{colour}">"#);
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, s: &mut String| {
            if run.len() > 1 {
                let pts: Vec<String> = run.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke-width="2" points="{}"/>"#, pts.join(" "));
            }
            run.clear();
        };
        for &d in &depths {
            match value_at(r, metric, d) {
                Some(v) => {
                    let p = (x(d as f64), y(v));
                    let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3"/>"#, p.0, p.1);
                    run.push(p);
                }
                None => flush(&mut run, &mut s),
            }
        }
        flush(&mut run, &mut s);
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke-width="2"/><text x="{:.1}" y="{:.1}" stroke="none" fill="black">{label}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

fn trim_number(v: f64) -> String {
    let t = format!("{v:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Plain-text summary table for terminals.
pub fn summary_table(report: &Report) -> String {
    let mut s = format!("{:<16} {:>8} {:>10} {:>5}\n", "metric", "mean", "95% CI ±", "n");
    for row in &report.summary {
        let mean = row.mean.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
        let ci = row.ci_half_width.map(|h| format!("{h:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<16} {:>8} {:>10} {:>5}", row.metric.name(), mean, ci, row.n);
    }
    s
}
