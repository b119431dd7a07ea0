//! Command-line flags, the JSON config file, and their merge into a
//! validated [`RunConfig`]. Flags win over the config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tae::extract::SourceFormat;
use tae::generation::RepresentationMode;
use tae::{MetricId, Role, TemplateKind};

use crate::invalid;

#[derive(Debug, Parser)]
#[command(
    name = "tae",
    version,
    about = "Template-adaptable evaluation of templatic document views"
)]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split documents into panels.
    Extract(ExtractArgs),
    /// Score generated views against reference panels.
    Score,
    /// Run the generation pipeline over a corpus of input documents.
    Generate(GenerateArgs),
    /// Sweep representation modes, style settings and metrics.
    Bench(BenchArgs),
    /// Correlate metric score differences with human preferences.
    Correlate(CorrelateArgs),
    /// Inter-annotator agreement and preference rates.
    Agreement(AgreementArgs),
    /// Write a seeded synthetic corpus for smoke tests and demos.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Extract(_) => "extract",
            Self::Score => "score",
            Self::Generate(_) => "generate",
            Self::Bench(_) => "bench",
            Self::Correlate(_) => "correlate",
            Self::Agreement(_) => "agreement",
            Self::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Each one may also come from the
/// config file under the same name with dashes replaced by underscores.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL: id, template, input_text, reference_panels.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Generated-view JSONL: id and either panels or text.
    #[arg(long, global = true)]
    pub generated: Option<PathBuf>,
    /// Similarity metric; repeat or comma-separate for several.
    #[arg(long, global = true, value_delimiter = ',')]
    pub metric: Vec<MetricId>,
    /// slides, poster, blog, or name:rule for a custom template.
    #[arg(long, global = true, value_parser = parse_template)]
    pub template: Option<TemplateKind>,
    /// Representation mode; repeat or comma-separate for sweeps.
    #[arg(long = "rep-mode", global = true, value_delimiter = ',')]
    pub rep_mode: Vec<RepresentationMode>,
    #[arg(long, global = true, overrides_with = "no_style")]
    pub style: bool,
    #[arg(long = "no-style", global = true, overrides_with = "style")]
    pub no_style: bool,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Completion endpoint: an http(s) URL or stub:<dir>.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long = "max-input-tokens", global = true)]
    pub max_input_tokens: Option<usize>,
    /// Embedding endpoint URL, or stub[:dim] for offline hash vectors.
    #[arg(long = "embedding-endpoint", global = true)]
    pub embedding_endpoint: Option<String>,
    #[arg(long = "embedding-model", global = true)]
    pub embedding_model: Option<String>,
    /// Directory for cached embedding vectors.
    #[arg(long = "embedding-cache", global = true)]
    pub embedding_cache: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<ReportFormat>,
    /// Upper bound on documents processed in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn parse_template(s: &str) -> Result<TemplateKind, String> {
    TemplateKind::parse(s).ok_or_else(|| {
        format!("unknown template `{s}` (expected slides, poster, blog or name:rule)")
    })
}

fn parse_role(s: &str) -> Result<Role, String> {
    match s.to_ascii_lowercase().as_str() {
        "reference" | "ref" => Ok(Role::Reference),
        "generated" | "gen" => Ok(Role::Generated),
        _ => Err(format!(
            "unknown role `{s}` (expected reference or generated)"
        )),
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Document files; each becomes `<out>/<stem>.panels.json`.
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "generated", value_parser = parse_role)]
    pub role: Role,
    /// Force a source format instead of detecting it.
    #[arg(long = "source-format")]
    pub source_format: Option<SourceFormat>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Also write per-step prompts, outputs and timings as JSONL.
    #[arg(long = "trace-out")]
    pub trace_out: Option<PathBuf>,
    /// Fail when a schema-guided step one returns no usable JSON.
    #[arg(long = "strict-ir")]
    pub strict_ir: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sweep temperatures 0, 0.25, 0.5, 0.75 and 1.
    #[arg(long = "temperature-sweep")]
    pub temperature_sweep: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Preference annotations JSONL.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Precomputed deltas (CSV or JSONL); alternative to --with/--skip.
    #[arg(long, conflicts_with_all = ["with", "skip"])]
    pub deltas: Option<PathBuf>,
    /// Generated views produced with an intermediate representation.
    #[arg(long, requires = "skip")]
    pub with: Option<PathBuf>,
    /// Generated views produced without one.
    #[arg(long, requires = "with")]
    pub skip: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub docs: usize,
    #[arg(long, default_value_t = 3)]
    pub annotators: usize,
}

/// Config file contents. Unknown keys are rejected.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub generated: Option<PathBuf>,
    pub metric: Option<Vec<String>>,
    pub template: Option<String>,
    pub rep_mode: Option<Vec<String>>,
    pub style: Option<bool>,
    pub style_text: Option<String>,
    pub temperature: Option<f64>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub max_input_tokens: Option<usize>,
    pub max_output_tokens: Option<usize>,
    pub embedding_endpoint: Option<String>,
    pub embedding_model: Option<String>,
    pub embedding_cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| invalid(format!("config {} line {}: {e}", path.display(), e.line())))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub corpus: Option<PathBuf>,
    pub generated: Option<PathBuf>,
    pub metrics: Vec<MetricId>,
    pub template: Option<TemplateKind>,
    pub rep_modes: Vec<RepresentationMode>,
    /// `None` means unspecified: generation defaults to on, bench sweeps both.
    pub style: Option<bool>,
    pub style_text: Option<String>,
    pub temperature: f64,
    pub endpoint: Option<String>,
    pub model: String,
    pub max_input_tokens: usize,
    pub max_output_tokens: usize,
    pub embedding_endpoint: Option<String>,
    pub embedding_model: String,
    pub embedding_cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub jobs: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 7;

impl RunConfig {
    pub fn resolve(command: &Command, args: &RunArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let metrics = if !args.metric.is_empty() {
            args.metric.clone()
        } else if let Some(names) = &file.metric {
            names
                .iter()
                .map(|n| {
                    n.parse()
                        .map_err(|e: String| invalid(format!("config field metric: {e}")))
                })
                .collect::<anyhow::Result<_>>()?
        } else {
            vec![MetricId::RougeL]
        };

        let template = match (&args.template, &file.template) {
            (Some(t), _) => Some(t.clone()),
            (None, Some(s)) => Some(
                parse_template(s).map_err(|e| invalid(format!("config field template: {e}")))?,
            ),
            (None, None) => None,
        };

        let rep_modes = if !args.rep_mode.is_empty() {
            args.rep_mode.clone()
        } else if let Some(names) = &file.rep_mode {
            names
                .iter()
                .map(|n| {
                    n.parse()
                        .map_err(|e: String| invalid(format!("config field rep_mode: {e}")))
                })
                .collect::<anyhow::Result<_>>()?
        } else if matches!(command, Command::Bench(_)) {
            RepresentationMode::ALL.to_vec()
        } else {
            vec![RepresentationMode::JsonRep]
        };

        let style = if args.style {
            Some(true)
        } else if args.no_style {
            Some(false)
        } else {
            file.style
        };

        let cfg = Self {
            command: command.name().to_string(),
            corpus: args.corpus.clone().or(file.corpus),
            generated: args.generated.clone().or(file.generated),
            metrics,
            template,
            rep_modes,
            style,
            style_text: file.style_text,
            temperature: args.temperature.or(file.temperature).unwrap_or(0.0),
            endpoint: args.endpoint.clone().or(file.endpoint),
            model: args
                .model
                .clone()
                .or(file.model)
                .unwrap_or_else(|| "default".into()),
            max_input_tokens: args
                .max_input_tokens
                .or(file.max_input_tokens)
                .unwrap_or(12_000),
            max_output_tokens: file.max_output_tokens.unwrap_or(2048),
            embedding_endpoint: args.embedding_endpoint.clone().or(file.embedding_endpoint),
            embedding_model: args
                .embedding_model
                .clone()
                .or(file.embedding_model)
                .unwrap_or_else(|| "default".into()),
            embedding_cache: args.embedding_cache.clone().or(file.embedding_cache),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(ReportFormat::Json),
            jobs: args.jobs.or(file.jobs).unwrap_or_else(default_jobs),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(invalid(format!(
                "temperature must be in [0, 1], got {}",
                self.temperature
            )));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs must be at least 1"));
        }
        if self.max_input_tokens == 0 {
            return Err(invalid("max_input_tokens must be at least 1"));
        }
        if self.max_output_tokens == 0 {
            return Err(invalid("max_output_tokens must be at least 1"));
        }
        if self.metrics.is_empty() {
            return Err(invalid("at least one metric is required"));
        }
        if self.rep_modes.is_empty() {
            return Err(invalid("at least one representation mode is required"));
        }
        Ok(())
    }

    /// The settings that can change this command's output. Paths to the
    /// output and the parallelism bound are left out.
    pub fn effective(&self) -> serde_json::Value {
        use serde_json::json;
        let scoring = json!({
            "metrics": self.metrics,
            "embedding_endpoint": self.embedding_endpoint,
            "embedding_model": self.embedding_model,
        });
        let generation = json!({
            "rep_modes": self.rep_modes,
            "style": self.style,
            "style_text": self.style_text,
            "temperature": self.temperature,
            "endpoint": self.endpoint,
            "model": self.model,
            "max_input_tokens": self.max_input_tokens,
            "max_output_tokens": self.max_output_tokens,
        });
        let mut v = json!({
            "command": self.command,
            "corpus": self.corpus,
            "generated": self.generated,
            "template": self.template,
            "format": self.format,
        });
        let obj = v.as_object_mut().expect("object literal");
        match self.command.as_str() {
            "score" | "correlate" => {
                obj.insert("scoring".into(), scoring);
            }
            "generate" => {
                obj.insert("generation".into(), generation);
            }
            "bench" => {
                obj.insert("scoring".into(), scoring);
                obj.insert("generation".into(), generation);
            }
            "synth" => {
                obj.insert("seed".into(), json!(self.seed));
            }
            _ => {}
        }
        v
    }

    /// Hex SHA-256 of the effective settings.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.effective()).expect("json value serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn require_corpus(&self) -> anyhow::Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| invalid("--corpus is required for this command"))
    }

    pub fn require_generated(&self) -> anyhow::Result<&Path> {
        self.generated
            .as_deref()
            .ok_or_else(|| invalid("--generated is required for this command"))
    }

    pub fn require_endpoint(&self) -> anyhow::Result<&str> {
        self.endpoint
            .as_deref()
            .ok_or_else(|| invalid("--endpoint is required for this command (URL or stub:<dir>)"))
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
