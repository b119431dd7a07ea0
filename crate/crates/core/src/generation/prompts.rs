//! Prompt templates, style parameters, input-window truncation and LaTeX
//! post-processing.

use serde::{Deserialize, Serialize};

use super::ir::IR_SCHEMA;
use crate::text::TemplateKind;

/// Opening instruction of the step-one prompt.
pub const IR_PROMPT_HEAD: &str = "Given the input text, extract the document title and authors. \
For each section in the given input text, extract the most important sentences.";

/// Opening of the step-two prompt, before the template word.
pub const VIEW_PROMPT_HEAD: &str = "Summarize the following input in a ";

pub const SLIDES_STYLE: &str = "Slides should include a title page. Following slides should \
contain an informative slide title and short, concise bullet points. Longer slides should be \
broken up into multiple slides.";

pub const POSTER_STYLE: &str = "Posters should include a title section at the top. Each panel \
should include a heading and short, concise bullet points of the most important take-aways from \
that section.";

pub const BLOG_STYLE: &str = "Blogs should include paragraphs introducing the topic, a summary \
of the input document, and important takeaways. The blog should be more readable to a general \
audience than the input document.";

/// A short description of the target format appended to the step-two
/// prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleParameter {
    pub template: TemplateKind,
    pub description: String,
}

impl StyleParameter {
    /// The stock description for slides, posters and blogs; `None` for
    /// custom templates, which must supply their own.
    pub fn default_for(template: &TemplateKind) -> Option<Self> {
        let description = match template {
            TemplateKind::Slides => SLIDES_STYLE,
            TemplateKind::Poster => POSTER_STYLE,
            TemplateKind::Blog => BLOG_STYLE,
            TemplateKind::Custom { .. } => return None,
        };
        Some(Self {
            template: template.clone(),
            description: description.to_string(),
        })
    }
}

/// How the input window is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenWindow {
    pub max_tokens: usize,
    /// A whitespace token of `c` characters counts as `ceil(c / chars_per_token)`
    /// tokens, and at least one.
    pub chars_per_token: f64,
}

impl Default for TokenWindow {
    fn default() -> Self {
        Self {
            max_tokens: 12_000,
            chars_per_token: 4.0,
        }
    }
}

impl TokenWindow {
    pub fn new(max_tokens: usize) -> Self {
        Self {
            max_tokens,
            ..Self::default()
        }
    }

    fn word_cost(&self, word: &str) -> usize {
        let chars = word.chars().count() as f64;
        let cpt = if self.chars_per_token > 0.0 {
            self.chars_per_token
        } else {
            f64::INFINITY
        };
        ((chars / cpt).ceil() as usize).max(1)
    }

    pub fn count(&self, text: &str) -> usize {
        text.split_whitespace().map(|w| self.word_cost(w)).sum()
    }
}

/// Keep the head of `text` that fits the window. Cuts only between
/// whitespace tokens; text that fits is returned unchanged.
pub fn truncate_to_window<'a>(text: &'a str, window: &TokenWindow) -> &'a str {
    let budget = window.max_tokens.max(1);
    let mut used = 0;
    let mut end = 0;
    let mut word_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = word_start.take() {
                let cost = window.word_cost(&text[s..i]);
                if used + cost > budget {
                    return &text[..end];
                }
                used += cost;
                end = i;
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        let cost = window.word_cost(&text[s..]);
        if used + cost > budget {
            return &text[..end];
        }
    }
    text
}

/// Step-one prompt. The JSON template block is included for schema-guided
/// extraction and left out when the model picks its own structure.
pub fn build_ir_prompt(document: &str, include_schema: bool) -> String {
    if include_schema {
        format!(
            "{IR_PROMPT_HEAD} Format the output using the following JSON template:\n{IR_SCHEMA}\n\nInput: {document}\nOutput:"
        )
    } else {
        format!("{IR_PROMPT_HEAD}\n\nInput: {document}\nOutput:")
    }
}

/// Step-two prompt. Without a style parameter the style sentence is left
/// out entirely.
pub fn build_view_prompt(
    input: &str,
    template: &TemplateKind,
    style: Option<&StyleParameter>,
) -> String {
    let style_line = style
        .map(|s| format!(" Style parameters: {}", s.description))
        .unwrap_or_default();
    format!(
        "{VIEW_PROMPT_HEAD}{} style.{style_line} Format the output document as a latex file:\nInput: {input}\n\nOutput:",
        template.display_name()
    )
}

/// Wrap bare text in a document environment; text that already has one is
/// returned unchanged.
pub fn ensure_latex_document(text: &str) -> String {
    if text.contains("\\begin{document}") {
        text.to_string()
    } else {
        format!(
            "\\begin{{document}}\n{}\n\\end{{document}}\n",
            text.trim_end()
        )
    }
}

/// Pull LaTeX out of a model answer: the first fenced block when present,
/// else the answer itself, trimmed.
pub fn extract_latex(answer: &str) -> &str {
    if let Some(open) = answer.find("```") {
        let after = &answer[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        if let Some(close) = after[body_start..].find("```") {
            return after[body_start..body_start + close].trim();
        }
    }
    answer.trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ir_prompt_with_and_without_schema() {
        let with = build_ir_prompt("tiny doc", true);
        assert!(with.contains(IR_SCHEMA));
        assert!(with.ends_with("Input: tiny doc\nOutput:"));
        let without = build_ir_prompt("tiny doc", false);
        assert!(!without.contains(IR_SCHEMA));
        assert!(!without.contains("JSON template"));
        assert_eq!(
            without,
            format!("{IR_PROMPT_HEAD}\n\nInput: tiny doc\nOutput:")
        );
    }

    #[test]
    fn view_prompt_substitution() {
        let style = StyleParameter::default_for(&TemplateKind::Slides).unwrap();
        let p = build_view_prompt("body", &TemplateKind::Slides, Some(&style));
        assert_eq!(
            p,
            format!("Summarize the following input in a slides style. Style parameters: {SLIDES_STYLE} Format the output document as a latex file:\nInput: body\n\nOutput:")
        );
        let bare = build_view_prompt("body", &TemplateKind::Poster, None);
        assert_eq!(
            bare,
            "Summarize the following input in a poster style. Format the output document as a latex file:\nInput: body\n\nOutput:"
        );
        assert!(!bare.contains("Style parameters"));
    }

    #[test]
    fn custom_templates_have_no_default_style() {
        let t = TemplateKind::parse("thread:paragraph").unwrap();
        assert!(StyleParameter::default_for(&t).is_none());
        assert!(build_view_prompt("x", &t, None).contains("in a thread style."));
    }

    #[test]
    fn truncation_budget_edges() {
        let w = TokenWindow::new(4);
        assert_eq!(truncate_to_window("a b c", &w), "a b c");
        assert_eq!(truncate_to_window("a b c d", &w), "a b c d");
        assert_eq!(truncate_to_window("  a b c d  ", &w), "  a b c d  ");
    }

    // 2x budget of one-token words keeps exactly the first half.
    #[test]
    fn truncation_keeps_head() {
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let text = words.join(" ");
        let w = TokenWindow::new(10);
        let kept = truncate_to_window(&text, &w);
        assert_eq!(kept, words[..10].join(" "));
        assert_eq!(w.count(kept), 10);
    }

    #[test]
    fn long_words_cost_more() {
        let w = TokenWindow::new(3);
        // "abcdefghij" is 10 chars -> 3 tokens under 4 chars/token.
        assert_eq!(w.count("abcdefghij"), 3);
        assert_eq!(truncate_to_window("abcdefghij x", &w), "abcdefghij");
        assert_eq!(truncate_to_window("x abcdefghij", &w), "x");
    }

    #[test]
    fn oversized_document_is_head_truncated_in_prompt() {
        let doc: String = (0..100).map(|i| format!("t{i} ")).collect();
        let w = TokenWindow::new(30);
        let p = build_ir_prompt(truncate_to_window(&doc, &w), true);
        assert!(p.contains("t29\nOutput:"));
        assert!(!p.contains("t30"));
    }

    #[test]
    fn latex_wrapping() {
        assert_eq!(
            ensure_latex_document("Hello"),
            "\\begin{document}\nHello\n\\end{document}\n"
        );
        let full =
            "\\documentclass{article}\n\\usepackage{x}\n\\begin{document}\nHi\n\\end{document}\n";
        assert_eq!(ensure_latex_document(full), full);
        let wrapped = ensure_latex_document("x");
        assert_eq!(ensure_latex_document(&wrapped), wrapped);
    }

    #[test]
    fn latex_from_fenced_answer() {
        assert_eq!(
            extract_latex("Here:\n```latex\n\\section{A}\n```\nDone"),
            "\\section{A}"
        );
        assert_eq!(extract_latex("  \\section{A} "), "\\section{A}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn truncation_is_a_prefix_within_budget(s in "[a-z ]{0,200}", budget in 1usize..40) {
                let w = TokenWindow::new(budget);
                let kept = truncate_to_window(&s, &w);
                prop_assert!(s.starts_with(kept));
                prop_assert!(w.count(kept) <= budget || kept == s);
                // never splits inside a word
                let rest = &s[kept.len()..];
                prop_assert!(kept.is_empty() || rest.is_empty() || rest.starts_with(' ') || kept.ends_with(' '));
            }

            #[test]
            fn style_absent_when_disabled(input in "\\PC{0,50}") {
                for t in [TemplateKind::Slides, TemplateKind::Poster, TemplateKind::Blog] {
                    let p = build_view_prompt(&input, &t, None);
                    for style in [SLIDES_STYLE, POSTER_STYLE, BLOG_STYLE] {
                        prop_assert!(input.contains(style) || !p.contains(style));
                    }
                    prop_assert!(input.contains("Style parameters") || !p.contains("Style parameters"));
                }
            }
        }
    }
}
