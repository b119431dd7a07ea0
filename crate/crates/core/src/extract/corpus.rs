//! JSON-lines corpus files, panel sequence files and plain-text panel dumps.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{make_sequence, PanelSequence, Role, TemplateKind, TokenizerConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: record `{id}` has no reference panels")]
    EmptyReferences { line: usize, id: String },
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One document of a corpus: its id, template, optional long input
/// document, and reference panels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub template: TemplateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_text: Option<String>,
    #[serde(default)]
    pub reference_panels: Vec<String>,
}

/// A generated view of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateKind>,
    /// Free-form label of the pipeline variant that produced this record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Generated document text, usually LaTeX.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Pre-split panels; takes precedence over `text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<serde_json::Value>,
}

/// Records carrying a document id.
pub trait Identified {
    fn id(&self) -> &str;
    const REQUIRED: &'static [&'static str];
}

impl Identified for CorpusRecord {
    fn id(&self) -> &str {
        &self.id
    }
    const REQUIRED: &'static [&'static str] = &["id", "template"];
}

impl Identified for GeneratedRecord {
    fn id(&self) -> &str {
        &self.id
    }
    const REQUIRED: &'static [&'static str] = &["id"];
}

/// Read a JSON-lines file in order, skipping blank lines, checking required
/// fields and id uniqueness. Line numbers are 1-based.
pub fn read_jsonl<T>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError>
where
    T: DeserializeOwned + Identified,
{
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::Parse {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        for &field in T::REQUIRED {
            if !obj.contains_key(field) {
                return Err(CorpusError::MissingField {
                    line: line_no,
                    field,
                });
            }
        }
        let record: T = serde_json::from_value(value).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id().to_string()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: record.id().to_string(),
            });
        }
        out.push((line_no, record));
    }
    Ok(out)
}

/// Load a corpus file, preserving record order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>, CorpusError> {
    Ok(read_jsonl(path.as_ref())?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

/// Load a corpus whose every record must carry reference panels.
pub fn load_scoring_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>, CorpusError> {
    let rows = read_jsonl::<CorpusRecord>(path.as_ref())?;
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.reference_panels.is_empty()) {
        return Err(CorpusError::EmptyReferences {
            line: *line,
            id: r.id.clone(),
        });
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn load_generated(path: impl AsRef<Path>) -> Result<Vec<GeneratedRecord>, CorpusError> {
    Ok(read_jsonl(path.as_ref())?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

/// Write `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CorpusError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| CorpusError::Invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Serialize records as JSON lines.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String, CorpusError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| CorpusError::Invalid(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_corpus(records: &[CorpusRecord], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    write_atomic(path.as_ref(), to_jsonl(records)?.as_bytes())
}

pub fn save_generated(
    records: &[GeneratedRecord],
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    write_atomic(path.as_ref(), to_jsonl(records)?.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct PanelEntry {
    index: usize,
    text: String,
}

/// On-disk form of a panel sequence. Tokens are recomputed on load.
#[derive(Debug, Serialize, Deserialize)]
pub struct PanelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub role: Role,
    pub template: TemplateKind,
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    panels: Vec<PanelEntry>,
}

impl PanelFile {
    pub fn from_sequence(id: Option<String>, seq: &PanelSequence) -> Self {
        Self {
            id,
            role: seq.role(),
            template: seq.template().clone(),
            tokenizer: *seq.tokenizer(),
            panels: seq
                .panels()
                .iter()
                .map(|p| PanelEntry {
                    index: p.index(),
                    text: p.text().to_string(),
                })
                .collect(),
        }
    }

    pub fn into_sequence(self) -> Result<PanelSequence, CorpusError> {
        for (i, p) in self.panels.iter().enumerate() {
            if p.index != i {
                return Err(CorpusError::Invalid(format!(
                    "panel indices must run 0..n in order; found {} at position {i}",
                    p.index
                )));
            }
        }
        Ok(make_sequence(
            self.panels.into_iter().map(|p| p.text),
            self.role,
            self.template,
            &self.tokenizer,
        ))
    }
}

pub fn save_panels(seq: &PanelSequence, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let json = serde_json::to_string_pretty(&PanelFile::from_sequence(None, seq))
        .map_err(|e| CorpusError::Invalid(e.to_string()))?;
    write_atomic(path.as_ref(), json.as_bytes())
}

pub fn load_panels(path: impl AsRef<Path>) -> Result<PanelSequence, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let file: PanelFile = serde_json::from_slice(&bytes).map_err(|e| CorpusError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    file.into_sequence()
}

/// Delimiter line between panels in plain-text dumps.
pub const DUMP_DELIMITER: &str = "\n===\n";

/// Human-readable dump: panel texts separated by `===` lines.
pub fn panel_dump(seq: &PanelSequence) -> String {
    seq.texts().collect::<Vec<_>>().join(DUMP_DELIMITER)
}

/// Split a dump back into panel texts.
pub fn parse_panel_dump(text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    text.split(DUMP_DELIMITER).map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let d = tempfile::tempdir().unwrap();
        assert!(load_corpus(write(d.path(), "c.jsonl", ""))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn two_valid_lines() {
        let d = tempfile::tempdir().unwrap();
        let body = r#"{"id":"a","template":"slides","reference_panels":["x","y"]}
{"id":"b","template":"blog","input_text":"doc","reference_panels":["z"]}
"#;
        let recs = load_corpus(write(d.path(), "c.jsonl", body)).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].template, TemplateKind::Blog);
        assert_eq!(recs[1].input_text.as_deref(), Some("doc"));
    }

    #[test]
    fn duplicate_id_reports_line() {
        let d = tempfile::tempdir().unwrap();
        let body =
            "{\"id\":\"a\",\"template\":\"slides\"}\n\n{\"id\":\"a\",\"template\":\"poster\"}\n";
        let e = load_corpus(write(d.path(), "c.jsonl", body)).unwrap_err();
        assert!(matches!(e, CorpusError::DuplicateId { line: 3, ref id } if id == "a"));
    }

    #[test]
    fn missing_field_and_parse_errors() {
        let d = tempfile::tempdir().unwrap();
        let e = load_corpus(write(d.path(), "a.jsonl", "{\"id\":\"a\"}\n")).unwrap_err();
        assert!(matches!(
            e,
            CorpusError::MissingField {
                line: 1,
                field: "template"
            }
        ));
        let e = load_corpus(write(
            d.path(),
            "b.jsonl",
            "{\"id\":\"a\",\"template\":\"slides\"}\nnot json\n",
        ))
        .unwrap_err();
        assert!(matches!(e, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn scoring_corpus_needs_references() {
        let d = tempfile::tempdir().unwrap();
        let e = load_scoring_corpus(write(
            d.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"template\":\"slides\"}\n",
        ))
        .unwrap_err();
        assert!(matches!(e, CorpusError::EmptyReferences { line: 1, .. }));
    }

    #[test]
    fn custom_template_serialization() {
        let r = CorpusRecord {
            id: "t".into(),
            template: TemplateKind::Custom {
                name: "thread".into(),
                rule: crate::text::PanelRule::Paragraph,
            },
            input_text: None,
            reference_panels: vec!["a".into()],
        };
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"id":"t","template":{"custom":{"name":"thread","rule":"paragraph"}},"reference_panels":["a"]}"#
        );
    }

    #[test]
    fn panel_dump_round_trip() {
        let seq = make_sequence(
            ["one\ntwo", "", "three"],
            Role::Generated,
            TemplateKind::Slides,
            &TokenizerConfig::default(),
        );
        let dump = panel_dump(&seq);
        assert_eq!(parse_panel_dump(&dump), ["one\ntwo", "", "three"]);
    }

    #[test]
    fn rejects_non_contiguous_indices() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "p.json",
            r#"{"role":"reference","template":"slides","panels":[{"index":1,"text":"a"}]}"#,
        );
        assert!(load_panels(p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn template() -> impl Strategy<Value = TemplateKind> {
            prop_oneof![
                Just(TemplateKind::Slides),
                Just(TemplateKind::Poster),
                Just(TemplateKind::Blog),
                "[a-z]{1,8}".prop_map(|name| TemplateKind::Custom {
                    name,
                    rule: crate::text::PanelRule::Heading
                }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn panels_round_trip(
                texts in proptest::collection::vec("\\PC{0,40}", 0..6),
                t in template(),
                generated: bool,
                lower: bool,
            ) {
                let role = if generated { Role::Generated } else { Role::Reference };
                let cfg = TokenizerConfig { lowercase: lower, strip_punctuation: true };
                let seq = make_sequence(texts, role, t, &cfg);
                let d = tempfile::tempdir().unwrap();
                let p = d.path().join("seq.json");
                save_panels(&seq, &p).unwrap();
                prop_assert_eq!(load_panels(&p).unwrap(), seq);
            }

            #[test]
            fn corpus_round_trip(
                recs in proptest::collection::vec(
                    (template(), proptest::option::of("\\PC{0,30}"), proptest::collection::vec("\\PC{0,20}", 0..4)),
                    0..5,
                ),
            ) {
                let records: Vec<CorpusRecord> = recs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (template, input_text, reference_panels))| CorpusRecord {
                        id: format!("doc-{i}"),
                        template,
                        input_text,
                        reference_panels,
                    })
                    .collect();
                let d = tempfile::tempdir().unwrap();
                let p = d.path().join("c.jsonl");
                save_corpus(&records, &p).unwrap();
                prop_assert_eq!(load_corpus(&p).unwrap(), records);
            }
        }
    }
}
