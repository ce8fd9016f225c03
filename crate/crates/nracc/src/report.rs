//! Report files: summary.txt, metrics.csv, metrics.json, eventlog.hash.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nracc_core::engine::{Metric, MetricRow, MetricsReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = ["metric", "ai", "ac", "slice", "cause", "count", "sum", "p50", "p95"];

/// Structured mirror of a metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub metric: String,
    pub ai: Option<u8>,
    pub ac: Option<u8>,
    pub slice: Option<String>,
    pub cause: Option<String>,
    pub count: u64,
    pub sum: u64,
    pub p50: Option<u64>,
    pub p95: Option<u64>,
}

impl From<&MetricRow> for RowRecord {
    fn from(r: &MetricRow) -> Self {
        RowRecord {
            metric: r.metric.as_str().to_string(),
            ai: r.dims.ai,
            ac: r.dims.ac,
            slice: r.dims.slice.map(|s| s.to_string()),
            cause: r.dims.cause.map(|c| c.as_str().to_string()),
            count: r.count,
            sum: r.sum,
            p50: r.p50,
            p95: r.p95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub scenario: String,
    pub seed: u64,
    pub duration_us: u64,
    pub events_processed: u64,
    pub eventlog_sha256: String,
    pub audit_violations: Vec<String>,
    pub metrics: Vec<RowRecord>,
}

impl From<&MetricsReport> for ReportDocument {
    fn from(r: &MetricsReport) -> Self {
        ReportDocument {
            scenario: r.scenario.clone(),
            seed: r.seed,
            duration_us: r.duration.as_micros(),
            events_processed: r.events_processed,
            eventlog_sha256: r.digest_hex(),
            audit_violations: r.audit_violations.clone(),
            metrics: r.rows.iter().map(RowRecord::from).collect(),
        }
    }
}

pub fn metrics_csv(report: &MetricsReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &report.rows {
        w.write_record([
            r.metric.as_str().to_string(),
            opt(r.dims.ai.map(|v| v.to_string())),
            opt(r.dims.ac.map(|v| v.to_string())),
            opt(r.dims.slice.map(|v| v.to_string())),
            opt(r.dims.cause.map(|v| v.as_str().to_string())),
            r.count.to_string(),
            r.sum.to_string(),
            opt(r.p50.map(|v| v.to_string())),
            opt(r.p95.map(|v| v.to_string())),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn metrics_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(&ReportDocument::from(report)).expect("report serializes");
    s.push('\n');
    s
}

pub fn summary(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", report.scenario);
    let _ = writeln!(s, "seed: {}", report.seed);
    let _ = writeln!(s, "duration: {}", report.duration);
    let _ = writeln!(s, "events processed: {}", report.events_processed);
    let _ = writeln!(s, "event log sha256: {}", report.digest_hex());
    let attempts = report.total(Metric::AttemptsGenerated);
    let _ = writeln!(s, "\nattempts generated: {attempts}");
    for m in Metric::OUTCOMES {
        let n = report.total(m);
        let pct = if attempts == 0 { 0.0 } else { 100.0 * n as f64 / attempts as f64 };
        let _ = writeln!(s, "  {:<16} {n:>9}  ({pct:.2}%)", m.as_str());
    }
    let _ = writeln!(s);
    for m in [
        Metric::ArrivalsSuppressed,
        Metric::RaPreambles,
        Metric::RaCollisions,
        Metric::Preemptions,
        Metric::Queued,
        Metric::PagingRequests,
        Metric::PagingDelivered,
        Metric::PagingDropped,
        Metric::PagingConnected,
    ] {
        let _ = writeln!(s, "{:<20} {:>9}", m.as_str(), report.total(m));
    }

    // Success rate per access identity.
    let mut ais: Vec<u8> = report.rows.iter().filter_map(|r| r.dims.ai).collect();
    ais.sort_unstable();
    ais.dedup();
    if !ais.is_empty() {
        let _ = writeln!(s, "\naccess success by AI:");
        for ai in ais {
            let tried = report.total_where(Metric::AttemptsGenerated, |d| d.ai == Some(ai));
            let ok = report.total_where(Metric::AccessSuccess, |d| d.ai == Some(ai));
            if tried > 0 {
                let _ = writeln!(s, "  AI {ai:<2} {ok:>7}/{tried:<7} {:.4}", ok as f64 / tried as f64);
            }
        }
    }
    if let Some(lat) = report.rows.iter().filter(|r| r.metric == Metric::AccessLatency).max_by_key(|r| r.count) {
        let _ = writeln!(
            s,
            "\nlatency (largest series): p50={}us p95={}us",
            lat.p50.unwrap_or(0),
            lat.p95.unwrap_or(0)
        );
    }
    if !report.audit_violations.is_empty() {
        let _ = writeln!(s, "\naudit violations: {}", report.audit_violations.len());
        for v in &report.audit_violations {
            let _ = writeln!(s, "  {v}");
        }
    }
    s
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Writes the report into `dir`, creating it if needed. Returns the paths
/// written, in order.
pub fn write_report(dir: &Path, report: &MetricsReport, formats: &[Format]) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let mut files = vec![("summary.txt", summary(report))];
    if formats.contains(&Format::Csv) {
        files.push(("metrics.csv", metrics_csv(report)?));
    }
    if formats.contains(&Format::Json) {
        files.push(("metrics.json", metrics_json(report)));
    }
    files.push(("eventlog.hash", format!("{}\n", report.digest_hex())));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}
