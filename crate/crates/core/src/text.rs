//! Text containers shared by every scoring and extraction routine.
//!
//! A document view is a [`PanelSequence`]: an ordered list of [`Panel`]s, each
//! holding its raw text and the tokens produced by [`tokenize`] under one
//! [`TokenizerConfig`]. Both sides of a comparison must be tokenized with the
//! same configuration.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Tokenization switches. Splitting on Unicode whitespace is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// When set, punctuation is a separator and is discarded. When unset,
    /// every punctuation character becomes a token of its own.
    pub strip_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

/// Anything that is neither alphanumeric nor whitespace.
fn is_punctuation(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Split `text` into tokens. Total and deterministic; tokens never contain
/// whitespace.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };

    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if !cfg.strip_punctuation {
                tokens.push(c.to_string());
            }
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Which side of a comparison a sequence sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reference,
    Generated,
}

/// Identifier of a panel segmentation rule, used by custom templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelRule {
    /// One panel per `frame` environment.
    Frame,
    /// One panel per top-level sectioning command or block environment.
    Section,
    /// One panel per blank-line separated paragraph.
    Paragraph,
    /// One panel per markdown heading.
    Heading,
    /// The whole document is one panel.
    Whole,
}

impl PanelRule {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frame" => Some(Self::Frame),
            "section" => Some(Self::Section),
            "paragraph" => Some(Self::Paragraph),
            "heading" => Some(Self::Heading),
            "whole" => Some(Self::Whole),
            _ => None,
        }
    }
}

/// The kind of document view being scored or generated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Slides,
    Poster,
    Blog,
    Custom { name: String, rule: PanelRule },
}

impl TemplateKind {
    /// The word substituted into generation prompts.
    pub fn display_name(&self) -> &str {
        match self {
            Self::Slides => "slides",
            Self::Poster => "poster",
            Self::Blog => "blog",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn panel_rule(&self) -> PanelRule {
        match self {
            Self::Slides => PanelRule::Frame,
            Self::Poster => PanelRule::Section,
            Self::Blog => PanelRule::Whole,
            Self::Custom { rule, .. } => *rule,
        }
    }

    /// Parses `slides`, `poster`, `blog`, or `name:rule` for custom templates.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slides" | "slide" => Some(Self::Slides),
            "poster" | "posters" => Some(Self::Poster),
            "blog" | "blogs" => Some(Self::Blog),
            _ => {
                let (name, rule) = s.split_once(':')?;
                if name.is_empty() {
                    return None;
                }
                Some(Self::Custom {
                    name: name.to_string(),
                    rule: PanelRule::parse(rule)?,
                })
            }
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Custom { name, rule } => write!(f, "{name}:{rule:?}"),
            other => f.write_str(other.display_name()),
        }
    }
}

/// One unit of organization within a view (a slide, a poster section, a
/// whole blog post).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Panel {
    index: usize,
    text: String,
    tokens: Vec<String>,
}

impl Panel {
    pub fn new(index: usize, text: impl Into<String>, cfg: &TokenizerConfig) -> Self {
        let text = text.into();
        let tokens = tokenize(&text, cfg);
        Self {
            index,
            text,
            tokens,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// A panel with no tokens after normalization.
    pub fn is_degenerate(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// An ordered view of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelSequence {
    panels: Vec<Panel>,
    role: Role,
    template: TemplateKind,
    tokenizer: TokenizerConfig,
}

impl PanelSequence {
    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn template(&self) -> &TemplateKind {
        &self.template
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.panels.iter().map(Panel::text)
    }

    /// Same panels reordered by `order`, which must be a permutation of
    /// `0..len`. Indices are reassigned to stay contiguous.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len(), "permutation length mismatch");
        make_sequence(
            order.iter().map(|&i| self.panels[i].text.clone()),
            self.role,
            self.template.clone(),
            &self.tokenizer,
        )
    }
}

/// Build a sequence from panel texts, indexing panels `0..n` in input order.
/// Empty texts are kept.
pub fn make_sequence<I, S>(
    texts: I,
    role: Role,
    template: TemplateKind,
    cfg: &TokenizerConfig,
) -> PanelSequence
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let panels = texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| Panel::new(i, t, cfg))
        .collect();
    PanelSequence {
        panels,
        role,
        template,
        tokenizer: *cfg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_cfg() -> TokenizerConfig {
        TokenizerConfig::default()
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("", &default_cfg()).is_empty());
        assert!(tokenize(" \t\n ", &default_cfg()).is_empty());
    }

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(tokenize("A b. c", &default_cfg()), ["a", "b", "c"]);
    }

    // Expected output produced by a separate Python reference tokenizer:
    //   re.findall(r"[^\W_]+", s.lower())
    #[test]
    fn mixed_punctuation_fixture() {
        let s = "Hello,World! (TAE)-v2: x_y; 3.14... ok?!";
        assert_eq!(s.chars().count(), 40);
        assert_eq!(
            tokenize(s, &default_cfg()),
            ["hello", "world", "tae", "v2", "x", "y", "3", "14", "ok"]
        );
    }

    #[test]
    fn keeps_punctuation_tokens_when_not_stripping() {
        let cfg = TokenizerConfig {
            lowercase: false,
            strip_punctuation: false,
        };
        assert_eq!(tokenize("Hi, you.", &cfg), ["Hi", ",", "you", "."]);
    }

    #[test]
    fn unicode_whitespace_splits() {
        let s = "alpha\u{00A0}beta\u{2003}gamma";
        assert_eq!(tokenize(s, &default_cfg()), ["alpha", "beta", "gamma"]);
    }

    #[test]
    fn make_sequence_indexes_in_order() {
        let seq = make_sequence(
            Vec::<String>::new(),
            Role::Reference,
            TemplateKind::Slides,
            &default_cfg(),
        );
        assert!(seq.is_empty());

        let seq = make_sequence(
            ["x", "y"],
            Role::Generated,
            TemplateKind::Slides,
            &default_cfg(),
        );
        let idx: Vec<_> = seq.panels().iter().map(Panel::index).collect();
        assert_eq!(idx, [0, 1]);

        let paras = ["p0", "p1", "p2", "p3", "p4"];
        let seq = make_sequence(paras, Role::Reference, TemplateKind::Poster, &default_cfg());
        assert_eq!(seq.texts().collect::<Vec<_>>(), paras);
    }

    #[test]
    fn empty_panels_are_retained() {
        let seq = make_sequence(
            ["a", "", "b"],
            Role::Generated,
            TemplateKind::Slides,
            &default_cfg(),
        );
        assert_eq!(seq.len(), 3);
        assert!(seq.panels()[1].is_degenerate());
    }

    #[test]
    fn template_parsing() {
        assert_eq!(TemplateKind::parse("Slides"), Some(TemplateKind::Slides));
        assert_eq!(
            TemplateKind::parse("thread:paragraph"),
            Some(TemplateKind::Custom {
                name: "thread".into(),
                rule: PanelRule::Paragraph
            })
        );
        assert_eq!(TemplateKind::parse("thread:bogus"), None);
        assert_eq!(TemplateKind::Blog.panel_rule(), PanelRule::Whole);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn idempotent_on_joined_output(s in "\\PC{0,80}") {
                let cfg = TokenizerConfig::default();
                let once = tokenize(&s, &cfg);
                let twice = tokenize(&once.join(" "), &cfg);
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn token_count_bounded_by_chars(s in "\\PC{0,80}", lower: bool, strip: bool) {
                let cfg = TokenizerConfig { lowercase: lower, strip_punctuation: strip };
                let toks = tokenize(&s, &cfg);
                prop_assert!(toks.len() <= s.chars().count());
                prop_assert!(toks.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
            }
        }
    }
}
