//! Human-evaluation statistics: signed preferences, metric-delta affinity,
//! inter-annotator agreement and preference rates.
//!
//! Each annotation records which of two views of a document an annotator
//! preferred (the one generated with an intermediate representation, or the
//! one without) and how strongly, on a 1..=3 scale. A metric's affinity is
//! the Pearson correlation, over all annotations, between the signed
//! preference and the metric's score difference `m(with) - m(skip)` on the
//! annotated document.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no metric delta for document {0:?}")]
    MissingDelta(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preference {
    #[serde(rename = "with")]
    WithRep,
    #[serde(rename = "skip")]
    SkipRep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceAnnotation {
    pub doc_id: String,
    pub annotator_id: String,
    pub preferred: Preference,
    pub degree: u8,
}

impl PreferenceAnnotation {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=3).contains(&self.degree) {
            return Err(format!("degree must be 1, 2 or 3, got {}", self.degree));
        }
        if self.doc_id.is_empty() || self.annotator_id.is_empty() {
            return Err("doc_id and annotator_id must be non-empty".into());
        }
        Ok(())
    }
}

/// `+degree` when the view with a representation was preferred, else
/// `-degree`.
pub fn signed_preference(ann: &PreferenceAnnotation) -> i32 {
    let d = i32::from(ann.degree);
    match ann.preferred {
        Preference::WithRep => d,
        Preference::SkipRep => -d,
    }
}

/// A metric's score difference on one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub doc_id: String,
    pub metric: String,
    pub s: f64,
}

/// One row of a delta file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub doc_id: String,
    pub metric: String,
    pub with_score: f64,
    pub skip_score: f64,
}

impl DeltaRecord {
    pub fn delta(&self) -> MetricDelta {
        MetricDelta {
            doc_id: self.doc_id.clone(),
            metric: self.metric.clone(),
            s: self.with_score - self.skip_score,
        }
    }
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::DegenerateInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(AnalysisError::DegenerateInput(
            "need at least two points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateInput("non-finite value".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(AnalysisError::DegenerateInput("zero variance".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value for `r` over `n` pairs under the t approximation with
/// `n - 2` degrees of freedom. `None` when `n < 3`.
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affinity {
    pub r: f64,
    /// Number of (annotation, delta) pairs.
    pub n: usize,
    /// Two-sided t-approximation p-value; informational only.
    pub p_value: Option<f64>,
}

/// Pearson correlation between each annotation's signed preference and
/// its document's delta. `deltas` must hold a single metric.
pub fn affinity(
    deltas: &[MetricDelta],
    prefs: &[PreferenceAnnotation],
) -> Result<Affinity, AnalysisError> {
    let mut by_doc: HashMap<&str, f64> = HashMap::with_capacity(deltas.len());
    for d in deltas {
        if !d.s.is_finite() {
            return Err(AnalysisError::DegenerateInput(format!(
                "non-finite delta for document {:?}",
                d.doc_id
            )));
        }
        if by_doc.insert(&d.doc_id, d.s).is_some() {
            return Err(AnalysisError::DegenerateInput(format!(
                "document {:?} has more than one delta",
                d.doc_id
            )));
        }
    }
    let mut x = Vec::with_capacity(prefs.len());
    let mut y = Vec::with_capacity(prefs.len());
    for a in prefs {
        let s = by_doc
            .get(a.doc_id.as_str())
            .ok_or_else(|| AnalysisError::MissingDelta(a.doc_id.clone()))?;
        x.push(*s);
        y.push(f64::from(signed_preference(a)));
    }
    let r = pearson(&x, &y)?;
    Ok(Affinity {
        r,
        n: x.len(),
        p_value: pearson_p_value(r, x.len()),
    })
}

/// Split deltas by metric, keeping metrics in sorted order.
pub fn group_by_metric(deltas: &[MetricDelta]) -> BTreeMap<String, Vec<MetricDelta>> {
    let mut out: BTreeMap<String, Vec<MetricDelta>> = BTreeMap::new();
    for d in deltas {
        out.entry(d.metric.clone()).or_default().push(d.clone());
    }
    out
}

/// Nominal Krippendorff's alpha over the preferred label, with documents
/// as units and annotators as coders.
pub fn krippendorff_alpha(prefs: &[PreferenceAnnotation]) -> Result<f64, AnalysisError> {
    let annotators: HashSet<&str> = prefs.iter().map(|a| a.annotator_id.as_str()).collect();
    if annotators.len() < 2 {
        return Err(AnalysisError::InsufficientData(
            "agreement needs at least two annotators".into(),
        ));
    }
    let mut units: BTreeMap<&str, Vec<Preference>> = BTreeMap::new();
    for a in prefs {
        units.entry(&a.doc_id).or_default().push(a.preferred);
    }
    let units: Vec<&Vec<Preference>> = units.values().filter(|v| v.len() >= 2).collect();
    if units.is_empty() {
        return Err(AnalysisError::InsufficientData(
            "no document was labelled by two or more annotators".into(),
        ));
    }

    // Coincidence matrix over the two labels.
    let idx = |p: Preference| match p {
        Preference::WithRep => 0,
        Preference::SkipRep => 1,
    };
    let mut o = [[0.0f64; 2]; 2];
    for values in &units {
        let m = values.len() as f64;
        let mut counts = [0.0f64; 2];
        for v in values.iter() {
            counts[idx(*v)] += 1.0;
        }
        for c in 0..2 {
            for k in 0..2 {
                let pairs = if c == k {
                    counts[c] * (counts[c] - 1.0)
                } else {
                    counts[c] * counts[k]
                };
                o[c][k] += pairs / (m - 1.0);
            }
        }
    }
    let observed = o[0][1] + o[1][0];
    if observed == 0.0 {
        return Ok(1.0);
    }
    let n_c = [o[0][0] + o[0][1], o[1][0] + o[1][1]];
    let n = n_c[0] + n_c[1];
    let expected = 2.0 * n_c[0] * n_c[1];
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRate {
    /// Share of documents where strictly more annotators preferred the view
    /// with a representation.
    pub majority_rate: f64,
    /// Share of documents where every annotator did.
    pub unanimous_rate: f64,
    pub documents: usize,
}

pub fn preference_rate(prefs: &[PreferenceAnnotation]) -> Result<PreferenceRate, AnalysisError> {
    let mut docs: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for a in prefs {
        let e = docs.entry(&a.doc_id).or_default();
        match a.preferred {
            Preference::WithRep => e.0 += 1,
            Preference::SkipRep => e.1 += 1,
        }
    }
    if docs.is_empty() {
        return Err(AnalysisError::InsufficientData("no annotations".into()));
    }
    let n = docs.len() as f64;
    let majority = docs.values().filter(|(w, s)| w > s).count() as f64;
    let unanimous = docs.values().filter(|(_, s)| *s == 0).count() as f64;
    Ok(PreferenceRate {
        majority_rate: majority / n,
        unanimous_rate: unanimous / n,
        documents: docs.len(),
    })
}

/// Check ranges and `(doc_id, annotator_id)` uniqueness.
pub fn validate_annotations(prefs: &[PreferenceAnnotation]) -> Result<(), AnalysisError> {
    let mut seen = BTreeSet::new();
    for (i, a) in prefs.iter().enumerate() {
        a.validate().map_err(|message| AnalysisError::Invalid {
            line: i + 1,
            message,
        })?;
        if !seen.insert((a.doc_id.as_str(), a.annotator_id.as_str())) {
            return Err(AnalysisError::Invalid {
                line: i + 1,
                message: format!(
                    "annotator {:?} labelled document {:?} twice",
                    a.annotator_id, a.doc_id
                ),
            });
        }
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, AnalysisError> {
    let mut s = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| AnalysisError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    Ok(s)
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(
    text: &str,
) -> Result<Vec<(usize, T)>, AnalysisError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| AnalysisError::Invalid {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Parse annotation JSON lines, validating each record and uniqueness.
pub fn parse_annotations(text: &str) -> Result<Vec<PreferenceAnnotation>, AnalysisError> {
    let rows = parse_jsonl::<PreferenceAnnotation>(text)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, a) in rows {
        a.validate()
            .map_err(|message| AnalysisError::Invalid { line, message })?;
        if !seen.insert((a.doc_id.clone(), a.annotator_id.clone())) {
            return Err(AnalysisError::Invalid {
                line,
                message: format!(
                    "annotator {:?} labelled document {:?} twice",
                    a.annotator_id, a.doc_id
                ),
            });
        }
        out.push(a);
    }
    Ok(out)
}

pub fn load_annotations(
    path: impl AsRef<Path>,
) -> Result<Vec<PreferenceAnnotation>, AnalysisError> {
    parse_annotations(&read_file(path.as_ref())?)
}

/// Parse delta rows from CSV (with a header row) or JSON lines.
pub fn parse_deltas(text: &str, csv_format: bool) -> Result<Vec<DeltaRecord>, AnalysisError> {
    let rows: Vec<(usize, DeltaRecord)> = if csv_format {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        reader
            .deserialize::<DeltaRecord>()
            .enumerate()
            .map(|(i, r)| {
                r.map(|v| (i + 2, v)).map_err(|e| AnalysisError::Invalid {
                    line: i + 2,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?
    } else {
        parse_jsonl(text)?
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if !r.with_score.is_finite() || !r.skip_score.is_finite() {
            return Err(AnalysisError::Invalid {
                line,
                message: "scores must be finite".into(),
            });
        }
        if !seen.insert((r.doc_id.clone(), r.metric.clone())) {
            return Err(AnalysisError::Invalid {
                line,
                message: format!("duplicate delta for {:?} / {:?}", r.doc_id, r.metric),
            });
        }
        out.push(r);
    }
    Ok(out)
}

/// Load deltas; files ending in `.csv` are read as CSV, anything else as
/// JSON lines.
pub fn load_deltas(path: impl AsRef<Path>) -> Result<Vec<DeltaRecord>, AnalysisError> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    parse_deltas(&read_file(path)?, is_csv)
}
