//! Score reports: per-document rows, per-group aggregates, run metadata.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tae::extract::corpus::write_atomic;
use tae::score::macro_average;
use tae::TaeScore;

use crate::args::{ReportFormat, RunConfig};
use crate::invalid;

/// Largest difference tolerated between a stored aggregate and the mean
/// recomputed from its rows.
pub const AGGREGATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunMetadata {
    pub fn start(config: &RunConfig) -> Self {
        Self {
            tool: "tae".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: config.command.clone(),
            config_hash: config.hash(),
            config: config.effective(),
            seed: config.seed,
            started_at: now(),
            finished_at: String::new(),
            warnings: Vec::new(),
        }
    }

    pub fn finish(mut self) -> Self {
        self.finished_at = now();
        self
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub metric: String,
    pub q_p: f64,
    pub q_r: f64,
    pub o_p: f64,
    pub o_r: f64,
    pub l: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub reference_panels: usize,
    pub generated_panels: usize,
}

impl ScoreRow {
    pub fn new(id: &str, variant: Option<&str>, metric: &str, s: &TaeScore) -> Self {
        Self {
            id: id.to_string(),
            variant: variant.map(str::to_string),
            metric: metric.to_string(),
            q_p: s.q_p,
            q_r: s.q_r,
            o_p: s.o_p,
            o_r: s.o_r,
            l: s.l,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            reference_panels: s.reference_panels,
            generated_panels: s.generated_panels,
        }
    }

    fn score(&self) -> TaeScore {
        TaeScore {
            q_p: self.q_p,
            q_r: self.q_r,
            o_p: self.o_p,
            o_r: self.o_r,
            l: self.l,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            reference_panels: self.reference_panels,
            generated_panels: self.generated_panels,
        }
    }
}

/// Macro-average of the rows sharing a variant and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub metric: String,
    pub documents: usize,
    pub q_p: f64,
    pub q_r: f64,
    pub o_p: f64,
    pub o_r: f64,
    pub l: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

type GroupKey = (Option<String>, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: RunMetadata,
    pub rows: Vec<ScoreRow>,
    pub aggregate: Vec<AggregateRow>,
}

impl Report {
    /// Build aggregates from `rows`. Groups appear in order of first row.
    pub fn new(metadata: RunMetadata, rows: Vec<ScoreRow>) -> anyhow::Result<Self> {
        let aggregate = aggregate(&rows)?;
        Ok(Self {
            metadata,
            rows,
            aggregate,
        })
    }

    /// Recompute every aggregate from the rows and compare.
    pub fn check(&self) -> anyhow::Result<()> {
        let fresh = aggregate(&self.rows)?;
        if fresh.len() != self.aggregate.len() {
            return Err(invalid(format!(
                "report has {} aggregate rows, rows imply {}",
                self.aggregate.len(),
                fresh.len()
            )));
        }
        for (stored, want) in self.aggregate.iter().zip(&fresh) {
            let pairs = [
                ("q_p", stored.q_p, want.q_p),
                ("q_r", stored.q_r, want.q_r),
                ("o_p", stored.o_p, want.o_p),
                ("o_r", stored.o_r, want.o_r),
                ("l", stored.l, want.l),
                ("precision", stored.precision, want.precision),
                ("recall", stored.recall, want.recall),
                ("f1", stored.f1, want.f1),
            ];
            let bad = stored.variant != want.variant
                || stored.metric != want.metric
                || stored.documents != want.documents
                || pairs
                    .iter()
                    .any(|(_, a, b)| (a - b).abs() > AGGREGATE_TOLERANCE);
            if bad {
                return Err(invalid(format!(
                    "aggregate for metric {} ({}) does not match the mean of its rows",
                    stored.metric,
                    stored.variant.as_deref().unwrap_or("-")
                )));
            }
        }
        Ok(())
    }

    /// Read a JSON report and verify its aggregates.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let report: Self = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("{} line {}: {e}", path.display(), e.line())))?;
        report.check()?;
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Rows then aggregates, one table. Aggregate lines have kind
    /// `aggregate` and an empty id.
    pub fn to_csv(&self) -> anyhow::Result<String> {
        #[derive(Serialize)]
        struct Line<'a> {
            kind: &'a str,
            variant: &'a str,
            id: &'a str,
            metric: &'a str,
            documents: usize,
            q_p: f64,
            q_r: f64,
            o_p: f64,
            o_r: f64,
            l: f64,
            precision: f64,
            recall: f64,
            f1: f64,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(Line {
                kind: "row",
                variant: r.variant.as_deref().unwrap_or(""),
                id: &r.id,
                metric: &r.metric,
                documents: 1,
                q_p: r.q_p,
                q_r: r.q_r,
                o_p: r.o_p,
                o_r: r.o_r,
                l: r.l,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
            })?;
        }
        for a in &self.aggregate {
            w.serialize(Line {
                kind: "aggregate",
                variant: a.variant.as_deref().unwrap_or(""),
                id: "",
                metric: &a.metric,
                documents: a.documents,
                q_p: a.q_p,
                q_r: a.q_r,
                o_p: a.o_p,
                o_r: a.o_r,
                l: a.l,
                precision: a.precision,
                recall: a.recall,
                f1: a.f1,
            })?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

fn aggregate(rows: &[ScoreRow]) -> anyhow::Result<Vec<AggregateRow>> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: BTreeMap<GroupKey, Vec<TaeScore>> = BTreeMap::new();
    for r in rows {
        let key = (r.variant.clone(), r.metric.clone());
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        entry.push(r.score());
    }
    order
        .into_iter()
        .map(|key| {
            let scores = &groups[&key];
            let mean = macro_average(scores)?;
            Ok(AggregateRow {
                variant: key.0,
                metric: key.1,
                documents: scores.len(),
                q_p: mean.q_p,
                q_r: mean.q_r,
                o_p: mean.o_p,
                o_r: mean.o_r,
                l: mean.l,
                precision: mean.precision,
                recall: mean.recall,
                f1: mean.f1,
            })
        })
        .collect()
}

/// Write `body` atomically to `path`, or to stdout without a path.
pub fn emit(path: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            write_atomic(p, body.as_bytes())?;
            tracing::info!(path = %p.display(), "wrote output");
        }
        None => print!("{body}"),
    }
    Ok(())
}

/// Sidecar path for metadata next to a non-JSON output.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// Write a report in the configured format. CSV reports get their
/// metadata in a sidecar file.
pub fn write_report(report: &Report, config: &RunConfig) -> anyhow::Result<()> {
    match config.format {
        ReportFormat::Json => emit(config.out.as_deref(), &report.to_json()),
        ReportFormat::Csv => {
            emit(config.out.as_deref(), &report.to_csv()?)?;
            if let Some(out) = &config.out {
                let meta = serde_json::to_string_pretty(&report.metadata)? + "\n";
                write_atomic(&meta_path(out), meta.as_bytes())?;
            }
            Ok(())
        }
    }
}
