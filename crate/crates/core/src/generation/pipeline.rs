//! The two-step pipeline: an optional intermediate representation, then
//! the final LaTeX view.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::client::{CompletionClient, CompletionEndpointConfig, CompletionRequest};
use super::ir::{
    flatten_ir, flatten_json_value, parse_ir, serialize_ir, IntermediateRepresentation, ParsedIr,
};
use super::prompts::{
    build_ir_prompt, build_view_prompt, ensure_latex_document, extract_latex, truncate_to_window,
    StyleParameter, TokenWindow,
};
use super::GenerationError;
use crate::text::TemplateKind;

/// Temperatures swept by benchmark runs.
pub const TEMPERATURE_SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationMode {
    /// Generate the view directly from the document.
    NoRep,
    /// Step one without a schema; the model picks its own structure.
    OwnRep,
    /// Schema-guided step one, flattened to plain text before step two.
    TextRep,
    /// Schema-guided step one, passed to step two as JSON.
    JsonRep,
}

impl RepresentationMode {
    pub const ALL: [Self; 4] = [Self::NoRep, Self::OwnRep, Self::TextRep, Self::JsonRep];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoRep => "no-rep",
            Self::OwnRep => "own-rep",
            Self::TextRep => "text-rep",
            Self::JsonRep => "json-rep",
        }
    }

    /// Number of completion calls one document costs.
    pub fn calls(self) -> usize {
        if self == Self::NoRep {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for RepresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "norep" | "none" => Ok(Self::NoRep),
            "ownrep" | "own" => Ok(Self::OwnRep),
            "textrep" | "text" => Ok(Self::TextRep),
            "jsonrep" | "json" => Ok(Self::JsonRep),
            _ => Err(format!(
                "unknown representation mode {s:?} (expected no-rep, own-rep, text-rep or json-rep)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub endpoint: CompletionEndpointConfig,
    pub temperature: f64,
    pub window: TokenWindow,
    pub max_output_tokens: usize,
    pub mode: RepresentationMode,
    pub template: TemplateKind,
    pub style_enabled: bool,
    /// Overrides the stock style description; required for custom
    /// templates when style is enabled.
    pub style_text: Option<String>,
    /// In JsonRep, fail when step one does not produce the schema instead
    /// of falling back to its raw text.
    pub strict_ir: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            endpoint: CompletionEndpointConfig::default(),
            temperature: 0.0,
            window: TokenWindow::default(),
            max_output_tokens: 2048,
            mode: RepresentationMode::JsonRep,
            template: TemplateKind::Slides,
            style_enabled: true,
            style_text: None,
            strict_ir: false,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(GenerationError::Config(format!(
                "temperature must be in [0, 1], got {}",
                self.temperature
            )));
        }
        if self.window.max_tokens == 0 {
            return Err(GenerationError::Config(
                "max input tokens must be at least 1".into(),
            ));
        }
        if self.max_output_tokens == 0 {
            return Err(GenerationError::Config(
                "max output tokens must be at least 1".into(),
            ));
        }
        if self.style_enabled && self.style().is_none() {
            return Err(GenerationError::Config(format!(
                "template {} has no default style text; provide one or disable style",
                self.template
            )));
        }
        Ok(())
    }

    /// The style parameter in effect, if any.
    pub fn style(&self) -> Option<StyleParameter> {
        if !self.style_enabled {
            return None;
        }
        match &self.style_text {
            Some(text) if !text.trim().is_empty() => Some(StyleParameter {
                template: self.template.clone(),
                description: text.trim().to_string(),
            }),
            Some(_) => None,
            None => StyleParameter::default_for(&self.template),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Representation,
    View,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Representation => "representation",
            Self::View => "view",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: Step,
    pub prompt: String,
    pub output: String,
    pub prompt_tokens: usize,
    pub output_tokens: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedView {
    pub latex: String,
    /// The parsed step-one structure, when the mode has one and it parsed.
    pub ir: Option<IntermediateRepresentation>,
    pub trace: Vec<StepRecord>,
}

fn call(
    client: &dyn CompletionClient,
    config: &GenerationConfig,
    step: Step,
    prompt: String,
) -> Result<StepRecord, GenerationError> {
    let request = CompletionRequest {
        model: config.endpoint.model.clone(),
        prompt,
        temperature: config.temperature,
        max_tokens: config.max_output_tokens,
        chat: config.endpoint.chat,
    };
    let started = Instant::now();
    let output = client
        .complete(&request)
        .map_err(|source| GenerationError::Completion { step, source })?;
    let elapsed_ms = started.elapsed().as_millis() as u64;
    tracing::debug!(%step, elapsed_ms, "completion finished");
    Ok(StepRecord {
        step,
        prompt_tokens: config.window.count(&request.prompt),
        output_tokens: config.window.count(&output),
        prompt: request.prompt,
        output,
        elapsed_ms,
    })
}

/// Run the pipeline for one document. Timings aside, the result is a pure
/// function of the inputs when the client is deterministic.
pub fn generate_view(
    document: &str,
    config: &GenerationConfig,
    client: &dyn CompletionClient,
) -> Result<GeneratedView, GenerationError> {
    config.validate()?;
    if document.trim().is_empty() {
        return Err(GenerationError::EmptyDocument);
    }
    let document = truncate_to_window(document, &config.window);
    let style = config.style();
    let mut trace = Vec::with_capacity(2);
    let mut ir = None;

    let view_input = match config.mode {
        RepresentationMode::NoRep => document.to_string(),
        mode => {
            let include_schema = mode != RepresentationMode::OwnRep;
            let record = call(
                client,
                config,
                Step::Representation,
                build_ir_prompt(document, include_schema),
            )?;
            let raw = record.output.clone();
            trace.push(record);
            match (mode, parse_ir(&raw)) {
                (RepresentationMode::OwnRep, _) => raw.trim().to_string(),
                (RepresentationMode::JsonRep, ParsedIr::Structured(parsed)) => {
                    let text = serialize_ir(&parsed);
                    ir = Some(parsed);
                    text
                }
                (RepresentationMode::JsonRep, other) if config.strict_ir => {
                    let what = match other {
                        ParsedIr::OtherJson(_) => "JSON does not match the schema",
                        _ => "no JSON block found",
                    };
                    return Err(GenerationError::IrParse(what.into()));
                }
                (RepresentationMode::JsonRep, ParsedIr::OtherJson(v)) => {
                    serde_json::to_string_pretty(&v).unwrap_or_else(|_| raw.trim().to_string())
                }
                (RepresentationMode::TextRep, ParsedIr::Structured(parsed)) => {
                    let text = flatten_ir(&parsed);
                    ir = Some(parsed);
                    text
                }
                (RepresentationMode::TextRep, ParsedIr::OtherJson(v)) => flatten_json_value(&v),
                (_, _) => raw.trim().to_string(),
            }
        }
    };

    let record = call(
        client,
        config,
        Step::View,
        build_view_prompt(&view_input, &config.template, style.as_ref()),
    )?;
    let latex = ensure_latex_document(extract_latex(&record.output));
    trace.push(record);
    Ok(GeneratedView { latex, ir, trace })
}
