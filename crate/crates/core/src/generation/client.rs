//! Completion endpoints: an HTTP client and an offline stub.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ir::{parse_ir, IntermediateRepresentation, IrSection, ParsedIr, IR_SCHEMA};
use super::prompts::{IR_PROMPT_HEAD, VIEW_PROMPT_HEAD};
use crate::retry::{RetryPolicy, Retryable};

#[derive(Debug, Clone, Error)]
pub enum CompletionError {
    /// Timeout, connection failure, or a 5xx/429 answer.
    #[error("completion endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("completion endpoint rejected the request: {0}")]
    Rejected(String),
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("invalid completion configuration: {0}")]
    Config(String),
    #[error("stub completion store: {0}")]
    Store(String),
}

impl Retryable for CompletionError {
    fn is_retryable(&self) -> bool {
        matches!(self, Self::Unavailable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: usize,
    /// Send the prompt as a single user message instead of a raw prompt.
    pub chat: bool,
}

pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionEndpointConfig {
    /// `http(s)://...` URL, or `stub:<dir>` for canned completions.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_secs: u64,
    pub chat: bool,
    pub retry: RetryPolicy,
}

impl Default for CompletionEndpointConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: "default".into(),
            auth_env: Some("TAE_COMPLETION_API_KEY".into()),
            timeout_secs: 120,
            chat: false,
            retry: RetryPolicy::default(),
        }
    }
}

impl CompletionEndpointConfig {
    pub fn validate(&self) -> Result<(), CompletionError> {
        if self.endpoint.trim().is_empty() {
            return Err(CompletionError::Config(
                "completion endpoint is empty".into(),
            ));
        }
        if self.stub_dir().is_none()
            && !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://"))
        {
            return Err(CompletionError::Config(format!(
                "endpoint must be an http(s) URL or stub:<dir>, got {:?}",
                self.endpoint
            )));
        }
        Ok(())
    }

    pub fn stub_dir(&self) -> Option<&str> {
        self.endpoint.strip_prefix("stub:")
    }

    /// Build the client this configuration names.
    pub fn connect(&self) -> Result<Box<dyn CompletionClient>, CompletionError> {
        self.validate()?;
        match self.stub_dir() {
            Some(dir) => Ok(Box::new(StubCompletionClient::from_dir(dir))),
            None => Ok(Box::new(HttpCompletionClient::new(self.clone())?)),
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    messages: Option<Vec<ChatMessage<'a>>>,
    temperature: f64,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

pub struct HttpCompletionClient {
    config: CompletionEndpointConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl HttpCompletionClient {
    pub fn new(config: CompletionEndpointConfig) -> Result<Self, CompletionError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| CompletionError::Config(e.to_string()))?;
        let token = config
            .auth_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        Ok(Self {
            config,
            client,
            token,
        })
    }

    fn post(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        let body = WireRequest {
            model: &request.model,
            prompt: (!request.chat).then_some(request.prompt.as_str()),
            messages: request.chat.then(|| {
                vec![ChatMessage {
                    role: "user",
                    content: &request.prompt,
                }]
            }),
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| CompletionError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let msg = format!("completion endpoint returned {status}");
            return if status.is_server_error() || matches!(status.as_u16(), 408 | 429) {
                Err(CompletionError::Unavailable(msg))
            } else {
                Err(CompletionError::Rejected(msg))
            };
        }
        let text = resp
            .text()
            .map_err(|e| CompletionError::Unavailable(e.to_string()))?;
        serde_json::from_str::<WireResponse>(&text)
            .map(|r| r.text)
            .map_err(|e| CompletionError::MalformedResponse(e.to_string()))
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        let (res, attempts) = self.config.retry.run(|| self.post(request));
        if res.is_err() {
            tracing::error!(attempts, "completion request failed");
        }
        res
    }
}

/// Hex SHA-256 of a prompt; names canned completion files.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Offline client. Answers from `<dir>/<prompt_key>.txt` when that file
/// exists, otherwise synthesizes a deterministic answer from the prompt
/// itself (a JSON representation, a plain outline, or a LaTeX view).
#[derive(Debug, Default)]
pub struct StubCompletionClient {
    dir: Option<PathBuf>,
    strict: bool,
    calls: AtomicUsize,
}

impl StubCompletionClient {
    /// Synthesizes every answer.
    pub fn synthetic() -> Self {
        Self::default()
    }

    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: Some(dir.as_ref().to_path_buf()),
            ..Self::default()
        }
    }

    /// Fail instead of synthesizing when no canned file exists.
    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Store a canned completion for `prompt`.
    pub fn record(dir: &Path, prompt: &str, answer: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.txt", prompt_key(prompt)));
        std::fs::write(&path, answer)?;
        Ok(path)
    }
}

impl CompletionClient for StubCompletionClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.txt", prompt_key(&request.prompt)));
            match std::fs::read_to_string(&path) {
                Ok(text) => return Ok(text),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(CompletionError::Store(format!("{}: {e}", path.display()))),
            }
        }
        if self.strict {
            return Err(CompletionError::Store(format!(
                "no canned completion for prompt {}",
                prompt_key(&request.prompt)
            )));
        }
        Ok(synthesize(&request.prompt))
    }
}

/// The text after the prompt's `Input:` marker, without the trailing
/// `Output:` cue.
fn prompt_input(prompt: &str) -> &str {
    let start = prompt.find("Input: ").map_or(0, |i| i + "Input: ".len());
    let body = &prompt[start..];
    body.strip_suffix("Output:").unwrap_or(body).trim_end()
}

fn synthesize(prompt: &str) -> String {
    if prompt.starts_with(IR_PROMPT_HEAD) {
        let doc = prompt_input(prompt);
        let ir = outline(doc, Some(2));
        if prompt.contains(IR_SCHEMA) {
            super::ir::serialize_ir(&ir)
        } else {
            super::ir::flatten_ir(&ir)
        }
    } else if let Some(rest) = prompt.strip_prefix(VIEW_PROMPT_HEAD) {
        let template = rest.split(" style.").next().unwrap_or("").to_string();
        let styled = prompt.contains(" Style parameters: ");
        let input = prompt_input(prompt);
        let ir = match parse_ir(input) {
            ParsedIr::Structured(ir) => ir,
            _ => outline(input, None),
        };
        render_view(&template, &ir, styled)
    } else {
        prompt_input(prompt).to_string()
    }
}

/// Blank-line separated blocks, each as its trimmed non-empty lines.
fn blocks(text: &str) -> Vec<Vec<&str>> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(line.trim());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for word in text.split_whitespace() {
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(word);
        if word.ends_with(['.', '!', '?']) {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// The first block's first line is the title. Every later block is a
/// section: a leading line without sentence punctuation is its heading,
/// otherwise the first few words are. `keep` caps sentences per section.
fn outline(doc: &str, keep: Option<usize>) -> IntermediateRepresentation {
    let mut bs = blocks(doc).into_iter();
    let title = bs
        .next()
        .and_then(|b| b.first().map(|l| l.to_string()))
        .unwrap_or_default();
    let sections = bs
        .map(|lines| {
            let first = lines[0];
            let (heading, body) = if lines.len() > 1 && !first.ends_with(['.', '!', '?']) {
                (first.to_string(), lines[1..].join(" "))
            } else {
                let joined = lines.join(" ");
                let heading = joined
                    .split_whitespace()
                    .take(4)
                    .collect::<Vec<_>>()
                    .join(" ");
                (heading, joined)
            };
            let mut sentences = sentences(&body);
            if let Some(k) = keep {
                sentences.truncate(k);
            }
            IrSection { heading, sentences }
        })
        .collect();
    IntermediateRepresentation {
        title,
        authors: Vec::new(),
        sections,
    }
}

fn tex_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' | '&' | '#' | '_' | '$' => {
                out.push('\\');
                out.push(c);
            }
            '\\' | '{' | '}' | '~' | '^' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

/// Slides get one frame per section; with a style parameter, frames hold
/// at most two bullets and longer sections continue on further frames.
fn render_view(template: &str, ir: &IntermediateRepresentation, styled: bool) -> String {
    let mut out = String::new();
    let title = tex_escape(&ir.title);
    match template {
        "slides" => {
            out.push_str("\\documentclass{beamer}\n");
            out.push_str(&format!("\\title{{{title}}}\n\\begin{{document}}\n"));
            if styled {
                out.push_str("\\begin{frame}\n\\titlepage\n\\end{frame}\n");
            }
            for s in &ir.sections {
                let per_frame = if styled { 2 } else { s.sentences.len().max(1) };
                let chunks: Vec<&[String]> = if s.sentences.is_empty() {
                    vec![&[]]
                } else {
                    s.sentences.chunks(per_frame).collect()
                };
                for chunk in chunks {
                    out.push_str(&format!(
                        "\\begin{{frame}}{{{}}}\n\\begin{{itemize}}\n",
                        tex_escape(&s.heading)
                    ));
                    for line in chunk {
                        out.push_str(&format!("\\item {}\n", tex_escape(line)));
                    }
                    out.push_str("\\end{itemize}\n\\end{frame}\n");
                }
            }
        }
        "poster" => {
            out.push_str("\\documentclass{article}\n");
            out.push_str(&format!(
                "\\title{{{title}}}\n\\begin{{document}}\n\\maketitle\n"
            ));
            for s in &ir.sections {
                out.push_str(&format!(
                    "\\begin{{block}}{{{}}}\n\\begin{{itemize}}\n",
                    tex_escape(&s.heading)
                ));
                let take = if styled { 2 } else { s.sentences.len() };
                for line in s.sentences.iter().take(take) {
                    out.push_str(&format!("\\item {}\n", tex_escape(line)));
                }
                out.push_str("\\end{itemize}\n\\end{block}\n");
            }
        }
        _ => {
            out.push_str("\\documentclass{article}\n");
            out.push_str(&format!(
                "\\title{{{title}}}\n\\begin{{document}}\n\\maketitle\n"
            ));
            for s in &ir.sections {
                out.push_str(&format!("\\section*{{{}}}\n", tex_escape(&s.heading)));
                out.push_str(&tex_escape(&s.sentences.join(" ")));
                out.push_str("\n\n");
            }
        }
    }
    out.push_str("\\end{document}\n");
    out
}
