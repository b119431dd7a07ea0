//! Turning documents into panel sequences, and the corpus file formats.
//!
//! The panel rule comes from the template (slides: frames, posters:
//! sections, blogs: the whole document, custom templates: their own rule);
//! the source format decides how that rule is recognized:
//!
//! | rule      | LaTeX                                   | plain text | markdown   |
//! |-----------|-----------------------------------------|------------|------------|
//! | frame     | `frame` environments                    | paragraphs | headings   |
//! | section   | top-level sectioning commands / blocks  | paragraphs | headings   |
//! | paragraph | blank-line paragraphs, stripped         | paragraphs | paragraphs |
//! | heading   | as `section`                            | headings   | headings   |
//! | whole     | whole body, stripped                    | whole text | whole text |
//!
//! Markup that fails a balance check, or a LaTeX document in which the rule
//! finds nothing, falls back to stripped paragraphs and is flagged as
//! degraded rather than rejected.

pub mod corpus;
pub mod latex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::{make_sequence, PanelRule, PanelSequence, Role, TemplateKind, TokenizerConfig};
use latex::{Marker, BLOCK_ENVS, SECTIONING};

pub use latex::strip_latex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFormat {
    LatexBeamer,
    LatexGeneric,
    PlainText,
    MarkdownLike,
}

impl SourceFormat {
    /// Guess the format from content.
    pub fn detect(text: &str) -> Self {
        if text.contains("\\begin{frame}") || text.contains("{beamer}") {
            Self::LatexBeamer
        } else if text.contains("\\documentclass")
            || text.contains("\\begin{")
            || text.contains("\\section")
        {
            Self::LatexGeneric
        } else if text.lines().any(|l| l.trim_start().starts_with('#')) {
            Self::MarkdownLike
        } else {
            Self::PlainText
        }
    }

    pub fn is_latex(self) -> bool {
        matches!(self, Self::LatexBeamer | Self::LatexGeneric)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LatexBeamer => "latex-beamer",
            Self::LatexGeneric => "latex-generic",
            Self::PlainText => "plain-text",
            Self::MarkdownLike => "markdown-like",
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "latex-beamer" | "beamer" => Ok(Self::LatexBeamer),
            "latex-generic" | "latex" | "tex" => Ok(Self::LatexGeneric),
            "plain-text" | "plain" | "text" | "txt" => Ok(Self::PlainText),
            "markdown-like" | "markdown" | "md" => Ok(Self::MarkdownLike),
            other => Err(format!("unknown source format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub sequence: PanelSequence,
    /// Set when the format's rule could not be applied and paragraphs were
    /// used instead.
    pub degraded: bool,
    pub warnings: Vec<String>,
}

/// Split `document` into panels according to `template` and `format`.
pub fn extract_panels(
    document: &str,
    template: &TemplateKind,
    format: SourceFormat,
    role: Role,
    cfg: &TokenizerConfig,
) -> Extraction {
    let mut warnings = Vec::new();
    let mut degraded = false;
    let rule = template.panel_rule();

    let texts = if format.is_latex() {
        match latex::check_balanced(document) {
            Err(problem) => {
                warnings.push(format!("malformed LaTeX ({problem}); split as plain text"));
                degraded = true;
                if rule == PanelRule::Whole {
                    vec![strip_latex(document)]
                } else {
                    latex_paragraphs(document)
                }
            }
            Ok(()) => {
                let found = latex_panels(document, rule);
                if found.is_empty() && rule != PanelRule::Whole {
                    warnings.push(format!(
                        "no {} boundaries found; split as paragraphs",
                        rule_name(rule)
                    ));
                    degraded = true;
                    latex_paragraphs(document)
                } else {
                    found
                }
            }
        }
    } else {
        match (rule, format) {
            (PanelRule::Whole, _) => vec![collapse(document)],
            (PanelRule::Heading, _)
            | (PanelRule::Frame | PanelRule::Section, SourceFormat::MarkdownLike) => {
                markdown_headings(document)
            }
            _ => plain_paragraphs(document),
        }
    };

    Extraction {
        sequence: make_sequence(texts, role, template.clone(), cfg),
        degraded,
        warnings,
    }
}

fn rule_name(rule: PanelRule) -> &'static str {
    match rule {
        PanelRule::Frame => "frame",
        PanelRule::Section => "section",
        PanelRule::Paragraph => "paragraph",
        PanelRule::Heading => "heading",
        PanelRule::Whole => "whole-document",
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn paragraphs(document: &str) -> impl Iterator<Item = &str> {
    let mut out = Vec::new();
    let mut start = None;
    let mut offset = 0;
    let mut last_end = 0;
    for line in document.split_inclusive('\n') {
        let blank = line.trim().is_empty();
        match (blank, start) {
            (false, None) => start = Some(offset),
            (true, Some(s)) => {
                out.push(&document[s..last_end]);
                start = None;
            }
            _ => {}
        }
        offset += line.len();
        if !blank {
            last_end = offset;
        }
    }
    if let Some(s) = start {
        out.push(&document[s..last_end]);
    }
    out.into_iter()
}

fn plain_paragraphs(document: &str) -> Vec<String> {
    paragraphs(document)
        .map(collapse)
        .filter(|p| !p.is_empty())
        .collect()
}

fn latex_paragraphs(document: &str) -> Vec<String> {
    let (_, body) = latex::split_document(document);
    paragraphs(&latex::remove_comments(body))
        .map(strip_latex)
        .filter(|p| !p.is_empty())
        .collect()
}

fn markdown_headings(document: &str) -> Vec<String> {
    let mut panels: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut started = false;
    for line in document.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            if started || !collapse(&current).is_empty() {
                panels.push(collapse(&current));
            }
            current.clear();
            started = true;
            current.push_str(trimmed.trim_start_matches('#'));
            current.push('\n');
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    if started || !collapse(&current).is_empty() {
        panels.push(collapse(&current));
    }
    panels
}

/// Stripped text of a LaTeX fragment, with title-page commands expanded to
/// the preamble's title fields.
fn strip_with_title(fragment: &str, title_page: &str) -> String {
    let stripped = strip_latex(fragment);
    let has_title_cmd = latex::markers(&latex::remove_comments(fragment))
        .iter()
        .any(|(_, m)| matches!(m, Marker::Command("titlepage" | "maketitle")));
    match (has_title_cmd && !title_page.is_empty(), stripped.is_empty()) {
        (true, true) => title_page.to_string(),
        (true, false) => format!("{title_page} {stripped}"),
        (false, _) => stripped,
    }
}

fn latex_panels(document: &str, rule: PanelRule) -> Vec<String> {
    let (preamble, body) = latex::split_document(document);
    let title_page = latex::title_page_text(preamble);
    let body = latex::remove_comments(body);
    match rule {
        PanelRule::Whole => vec![strip_with_title(&body, &title_page)],
        PanelRule::Paragraph => latex_paragraphs(document),
        PanelRule::Frame => frames(&body)
            .into_iter()
            .map(|f| strip_with_title(f, &title_page))
            .collect(),
        PanelRule::Section | PanelRule::Heading => sections(&body)
            .into_iter()
            .map(|s| strip_with_title(s, &title_page))
            .filter(|s| !s.is_empty())
            .collect(),
    }
}

/// Every `frame` environment, in order, as raw LaTeX.
fn frames(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut at = 0;
    const OPEN: &str = "\\begin{frame}";
    while let Some(pos) = body[at..].find(OPEN) {
        let start = at + pos;
        let inner = start + OPEN.len();
        match latex::find_env_end(body, "frame", inner) {
            Some((close, end)) => {
                out.push(&body[inner..close]);
                at = end;
            }
            None => break,
        }
    }
    out
}

/// Poster panels: a new panel starts at every sectioning command or block
/// environment that is not inside another block. Text before the first
/// boundary forms a leading panel.
fn sections(body: &str) -> Vec<&str> {
    let mut starts = vec![0];
    let mut block_depth = 0usize;
    for (pos, marker) in latex::markers(body) {
        match marker {
            Marker::Begin(env) if BLOCK_ENVS.contains(&env) => {
                if block_depth == 0 {
                    starts.push(pos);
                }
                block_depth += 1;
            }
            Marker::End(env) if BLOCK_ENVS.contains(&env) => {
                block_depth = block_depth.saturating_sub(1);
            }
            Marker::Command(name) if block_depth == 0 && SECTIONING.contains(&name) => {
                starts.push(pos);
            }
            _ => {}
        }
    }
    if starts.len() == 1 {
        return Vec::new();
    }
    starts.push(body.len());
    starts.windows(2).map(|w| &body[w[0]..w[1]]).collect()
}
