//! Subcommand implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use tae::analysis::{self, AnalysisError, MetricDelta, PreferenceAnnotation};
use tae::extract::corpus::{self, CorpusError, CorpusRecord, GeneratedRecord, PanelFile};
use tae::extract::{extract_panels, SourceFormat};
use tae::generation::{
    generate_view, CompletionClient, CompletionEndpointConfig, GenerationConfig,
    RepresentationMode, StepRecord, TokenWindow, TEMPERATURE_SWEEP,
};
use tae::similarity::{
    CachedProvider, EmbeddingProvider, EmbeddingProviderConfig, HttpEmbeddingProvider, StubProvider,
};
use tae::{make_sequence, PanelSequence, Role, Scorer, TemplateKind, TokenizerConfig};

use crate::args::{
    BenchArgs, CorrelateArgs, ExtractArgs, GenerateArgs, ReportFormat, RunConfig, SynthArgs,
};
use crate::invalid;
use crate::report::{emit, meta_path, write_report, Report, RunMetadata, ScoreRow};
use crate::synth::synth_corpus;

fn corpus_err(e: CorpusError) -> anyhow::Error {
    match e {
        CorpusError::Io { .. } => anyhow::Error::new(e),
        other => invalid(other.to_string()),
    }
}

fn analysis_err(e: AnalysisError) -> anyhow::Error {
    match e {
        AnalysisError::Io { .. } | AnalysisError::Invalid { .. } => invalid(e.to_string()),
        other => anyhow::Error::new(other),
    }
}

fn require_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{what} {} does not exist", path.display())))
    }
}

fn pool(config: &RunConfig) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")
}

fn load_scoring_corpus(path: &Path) -> anyhow::Result<Vec<CorpusRecord>> {
    require_file(path, "corpus")?;
    corpus::load_scoring_corpus(path).map_err(corpus_err)
}

fn load_generated(path: &Path) -> anyhow::Result<Vec<GeneratedRecord>> {
    require_file(path, "generated corpus")?;
    corpus::load_generated(path).map_err(corpus_err)
}

/// Panels of a generated record: its own panel list, else its text split
/// by the template's rule. Returns extraction warnings alongside.
pub fn generated_panels(
    record: &GeneratedRecord,
    template: &TemplateKind,
    format: Option<SourceFormat>,
) -> (Vec<String>, Vec<String>) {
    if let Some(panels) = &record.panels {
        return (panels.clone(), Vec::new());
    }
    let text = record.text.as_deref().unwrap_or("");
    if text.trim().is_empty() {
        return (
            Vec::new(),
            vec![format!("{}: generated view is empty", record.id)],
        );
    }
    let format = format.unwrap_or_else(|| SourceFormat::detect(text));
    let ex = extract_panels(
        text,
        template,
        format,
        Role::Generated,
        &TokenizerConfig::default(),
    );
    let warnings = ex
        .warnings
        .iter()
        .map(|w| format!("{}: {w}", record.id))
        .collect();
    (ex.sequence.texts().map(str::to_string).collect(), warnings)
}

fn embedding_provider(config: &RunConfig) -> anyhow::Result<Arc<dyn EmbeddingProvider>> {
    let endpoint = config.embedding_endpoint.as_deref().ok_or_else(|| {
        invalid("embedding metrics need --embedding-endpoint (URL or stub[:dim])")
    })?;
    let model = config.embedding_model.clone();
    fn cached<P: EmbeddingProvider + 'static>(
        inner: P,
        dir: Option<&Path>,
    ) -> anyhow::Result<Arc<dyn EmbeddingProvider>> {
        let p = CachedProvider::new(inner);
        Ok(match dir {
            Some(dir) => Arc::new(p.with_disk(dir).context("creating embedding cache")?),
            None => Arc::new(p),
        })
    }
    let dir = config.embedding_cache.as_deref();
    if let Some(rest) = endpoint.strip_prefix("stub") {
        let dim = match rest.strip_prefix(':') {
            Some(d) => d
                .parse()
                .map_err(|_| invalid(format!("bad stub embedding dimension {d:?}")))?,
            None if rest.is_empty() => 64,
            None => return Err(invalid(format!("bad embedding endpoint {endpoint:?}"))),
        };
        return cached(StubProvider::new(model, dim), dir);
    }
    let http = HttpEmbeddingProvider::new(EmbeddingProviderConfig {
        endpoint: endpoint.to_string(),
        model,
        ..Default::default()
    })
    .map_err(|e| invalid(e.to_string()))?;
    cached(http, dir)
}

fn scorers(config: &RunConfig) -> anyhow::Result<Vec<Scorer>> {
    let mut provider: Option<Arc<dyn EmbeddingProvider>> = None;
    config
        .metrics
        .iter()
        .map(|&m| {
            if m.needs_provider() {
                if provider.is_none() {
                    provider = Some(embedding_provider(config)?);
                }
                Ok(Scorer::with_provider(
                    m,
                    Arc::clone(provider.as_ref().expect("set above")),
                ))
            } else {
                Scorer::new(m).map_err(|e| invalid(e.to_string()))
            }
        })
        .collect()
}

/// Reference and generated sequences for one document.
pub struct ScoringPair {
    pub id: String,
    pub reference: PanelSequence,
    pub generated: PanelSequence,
}

/// Join generated records to corpus references by id, in corpus order.
pub fn pair_up(
    refs: &[CorpusRecord],
    generated: &[GeneratedRecord],
    template_override: Option<&TemplateKind>,
    warnings: &mut Vec<String>,
) -> anyhow::Result<Vec<ScoringPair>> {
    let by_id: HashMap<&str, &GeneratedRecord> =
        generated.iter().map(|g| (g.id.as_str(), g)).collect();
    for g in generated {
        if !refs.iter().any(|r| r.id == g.id) {
            warnings.push(format!(
                "{}: generated view has no reference; skipped",
                g.id
            ));
        }
    }
    let cfg = TokenizerConfig::default();
    refs.iter()
        .map(|r| {
            let g = by_id
                .get(r.id.as_str())
                .ok_or_else(|| invalid(format!("document {:?} has no generated view", r.id)))?;
            let template = template_override
                .or(g.template.as_ref())
                .unwrap_or(&r.template)
                .clone();
            let (panels, w) = generated_panels(g, &template, None);
            warnings.extend(w);
            Ok(ScoringPair {
                id: r.id.clone(),
                reference: make_sequence(
                    &r.reference_panels,
                    Role::Reference,
                    template.clone(),
                    &cfg,
                ),
                generated: make_sequence(&panels, Role::Generated, template, &cfg),
            })
        })
        .collect()
}

/// Score every pair under every scorer; rows are grouped by metric, then
/// in pair order.
pub fn score_pairs(
    pairs: &[ScoringPair],
    scorers: &[Scorer],
    variant: Option<&str>,
) -> anyhow::Result<Vec<ScoreRow>> {
    let mut rows = Vec::with_capacity(pairs.len() * scorers.len());
    for scorer in scorers {
        let scores = pairs
            .par_iter()
            .map(|p| tae::tae_score(&p.reference, &p.generated, scorer))
            .collect::<Result<Vec<_>, _>>()?;
        for (p, s) in pairs.iter().zip(&scores) {
            rows.push(ScoreRow::new(&p.id, variant, scorer.metric().as_str(), s));
        }
    }
    Ok(rows)
}

pub fn cmd_extract(config: &RunConfig, args: &ExtractArgs) -> anyhow::Result<()> {
    let mut meta = RunMetadata::start(config);
    if let Some(gen_path) = &config.generated {
        // Corpus mode: fill in `panels` for every record.
        let records = load_generated(gen_path)?;
        let fallback = config.template.clone().unwrap_or(TemplateKind::Slides);
        let pl = pool(config)?;
        let out: Vec<(GeneratedRecord, Vec<String>)> = pl.install(|| {
            records
                .par_iter()
                .map(|r| {
                    let template = config
                        .template
                        .as_ref()
                        .or(r.template.as_ref())
                        .unwrap_or(&fallback);
                    let (panels, w) = generated_panels(r, template, args.source_format);
                    let mut r = r.clone();
                    r.template = Some(template.clone());
                    r.panels = Some(panels);
                    (r, w)
                })
                .collect()
        });
        let mut rows = Vec::with_capacity(out.len());
        for (r, w) in out {
            meta.warnings.extend(w);
            rows.push(r);
        }
        for w in &meta.warnings {
            tracing::warn!("{w}");
        }
        emit(config.out.as_deref(), &corpus::to_jsonl(&rows)?)?;
        if let Some(out) = &config.out {
            write_meta(out, meta.finish())?;
        }
        return Ok(());
    }

    if args.inputs.is_empty() {
        return Err(invalid("extract needs input files or --generated"));
    }
    let out_dir = config
        .out
        .as_deref()
        .ok_or_else(|| invalid("extract with input files needs --out <dir>"))?;
    let template = config.template.clone().unwrap_or(TemplateKind::Slides);
    for input in &args.inputs {
        require_file(input, "input")?;
    }
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for input in &args.inputs {
        let text = std::fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))?;
        let format = args
            .source_format
            .unwrap_or_else(|| SourceFormat::detect(&text));
        let ex = extract_panels(
            &text,
            &template,
            format,
            args.role,
            &TokenizerConfig::default(),
        );
        for w in &ex.warnings {
            tracing::warn!(input = %input.display(), "{w}");
            meta.warnings.push(format!("{}: {w}", input.display()));
        }
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "document".into());
        let file = PanelFile::from_sequence(Some(stem.clone()), &ex.sequence);
        let json = serde_json::to_string_pretty(&file)? + "\n";
        corpus::write_atomic(
            &out_dir.join(format!("{stem}.panels.json")),
            json.as_bytes(),
        )?;
    }
    write_meta(&out_dir.join("extract"), meta.finish())
}

fn write_meta(out: &Path, meta: RunMetadata) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(&meta)? + "\n";
    corpus::write_atomic(&meta_path(out), json.as_bytes())?;
    Ok(())
}

pub fn cmd_score(config: &RunConfig) -> anyhow::Result<()> {
    let mut meta = RunMetadata::start(config);
    let refs = load_scoring_corpus(config.require_corpus()?)?;
    let generated = load_generated(config.require_generated()?)?;
    let scorers = scorers(config)?;
    let pairs = pair_up(
        &refs,
        &generated,
        config.template.as_ref(),
        &mut meta.warnings,
    )?;
    let rows = pool(config)?.install(|| score_pairs(&pairs, &scorers, None))?;
    let report = Report::new(meta.finish(), rows)?;
    write_report(&report, config)
}

/// One generation setting within a run.
#[derive(Debug, Clone, Copy)]
struct Setting {
    mode: RepresentationMode,
    style: bool,
    temperature: f64,
    strict_ir: bool,
}

fn generation_config(
    config: &RunConfig,
    template: TemplateKind,
    setting: Setting,
) -> GenerationConfig {
    GenerationConfig {
        endpoint: CompletionEndpointConfig {
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model: config.model.clone(),
            ..Default::default()
        },
        temperature: setting.temperature,
        window: TokenWindow::new(config.max_input_tokens),
        max_output_tokens: config.max_output_tokens,
        mode: setting.mode,
        template,
        style_enabled: setting.style,
        style_text: config.style_text.clone(),
        strict_ir: setting.strict_ir,
    }
}

fn variant_label(mode: RepresentationMode, style: bool, temperature: Option<f64>) -> String {
    let style = if style { "style" } else { "no-style" };
    match temperature {
        Some(t) => format!("{mode}/{style}/t={t}"),
        None => format!("{mode}/{style}"),
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    id: &'a str,
    variant: &'a str,
    #[serde(flatten)]
    step: &'a StepRecord,
}

/// Generate a view of every input document under one setting. Records come
/// back in input order.
fn generate_all(
    records: &[CorpusRecord],
    config: &RunConfig,
    client: &dyn CompletionClient,
    setting: Setting,
    variant: &str,
) -> anyhow::Result<Vec<(GeneratedRecord, Vec<StepRecord>)>> {
    records
        .par_iter()
        .map(|r| {
            let template = config
                .template
                .clone()
                .unwrap_or_else(|| r.template.clone());
            let gc = generation_config(config, template.clone(), setting);
            gc.validate().map_err(|e| invalid(e.to_string()))?;
            let input = r.input_text.as_deref().unwrap_or("");
            let view = generate_view(input, &gc, client)
                .with_context(|| format!("generating document {:?}", r.id))?;
            let intermediate = view.ir.as_ref().map(serde_json::to_value).transpose()?;
            Ok((
                GeneratedRecord {
                    id: r.id.clone(),
                    template: Some(template),
                    variant: Some(variant.to_string()),
                    text: Some(view.latex),
                    panels: None,
                    intermediate,
                },
                view.trace,
            ))
        })
        .collect()
}

fn load_inputs(config: &RunConfig) -> anyhow::Result<Vec<CorpusRecord>> {
    let path = config.require_corpus()?;
    require_file(path, "corpus")?;
    let records = corpus::load_corpus(path).map_err(corpus_err)?;
    if let Some(r) = records
        .iter()
        .find(|r| r.input_text.as_deref().is_none_or(|t| t.trim().is_empty()))
    {
        return Err(invalid(format!(
            "{}: document {:?} has no input_text",
            path.display(),
            r.id
        )));
    }
    Ok(records)
}

fn connect(config: &RunConfig) -> anyhow::Result<Box<dyn CompletionClient>> {
    let endpoint = CompletionEndpointConfig {
        endpoint: config.require_endpoint()?.to_string(),
        model: config.model.clone(),
        ..Default::default()
    };
    endpoint.connect().map_err(|e| invalid(e.to_string()))
}

pub fn cmd_generate(config: &RunConfig, args: &GenerateArgs) -> anyhow::Result<()> {
    let meta = RunMetadata::start(config);
    if config.rep_modes.len() != 1 {
        return Err(invalid(
            "generate takes a single --rep-mode; use bench to sweep",
        ));
    }
    let mode = config.rep_modes[0];
    let style = config.style.unwrap_or(true);
    let records = load_inputs(config)?;
    let client = connect(config)?;
    let variant = variant_label(mode, style, None);
    let out = pool(config)?.install(|| {
        generate_all(
            &records,
            config,
            client.as_ref(),
            Setting {
                mode,
                style,
                temperature: config.temperature,
                strict_ir: args.strict_ir,
            },
            &variant,
        )
    })?;
    let generated: Vec<GeneratedRecord> = out.iter().map(|(g, _)| g.clone()).collect();
    emit(config.out.as_deref(), &corpus::to_jsonl(&generated)?)?;
    if let Some(trace_path) = &args.trace_out {
        let mut body = String::new();
        for (g, steps) in &out {
            for s in steps {
                body.push_str(&serde_json::to_string(&TraceLine {
                    id: &g.id,
                    variant: &variant,
                    step: s,
                })?);
                body.push('\n');
            }
        }
        corpus::write_atomic(trace_path, body.as_bytes())?;
    }
    if let Some(out) = &config.out {
        write_meta(out, meta.finish())?;
    }
    Ok(())
}

pub fn cmd_bench(config: &RunConfig, args: &BenchArgs) -> anyhow::Result<()> {
    let mut meta = RunMetadata::start(config);
    let records = load_inputs(config)?;
    if records.iter().any(|r| r.reference_panels.is_empty()) {
        return Err(invalid("bench needs reference_panels for every document"));
    }
    let client = connect(config)?;
    let scorers = scorers(config)?;
    let styles: Vec<bool> = match config.style {
        Some(s) => vec![s],
        None => vec![true, false],
    };
    let temperatures: Vec<Option<f64>> = if args.temperature_sweep {
        TEMPERATURE_SWEEP.iter().map(|t| Some(*t)).collect()
    } else {
        vec![None]
    };
    let pl = pool(config)?;
    let mut rows = Vec::new();
    for &mode in &config.rep_modes {
        for &style in &styles {
            for &t in &temperatures {
                let variant = variant_label(mode, style, t);
                tracing::info!(%variant, "running variant");
                let temperature = t.unwrap_or(config.temperature);
                let generated = pl.install(|| {
                    let setting = Setting {
                        mode,
                        style,
                        temperature,
                        strict_ir: false,
                    };
                    generate_all(&records, config, client.as_ref(), setting, &variant)
                })?;
                let generated: Vec<GeneratedRecord> =
                    generated.into_iter().map(|(g, _)| g).collect();
                let pairs = pair_up(
                    &records,
                    &generated,
                    config.template.as_ref(),
                    &mut meta.warnings,
                )?;
                rows.extend(pl.install(|| score_pairs(&pairs, &scorers, Some(&variant)))?);
            }
        }
    }
    let report = Report::new(meta.finish(), rows)?;
    write_report(&report, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub metric: String,
    /// `plain` for the metric over whole documents, `tae` for its TAE F1,
    /// `given` for precomputed deltas.
    pub kind: String,
    pub r: f64,
    pub n: usize,
    pub p_value: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CorrelationReport {
    metadata: RunMetadata,
    rows: Vec<CorrelationRow>,
}

/// The metric over each document as a single panel.
fn whole_document_score(scorer: &Scorer, pair: &ScoringPair) -> anyhow::Result<f64> {
    let cfg = TokenizerConfig::default();
    let join = |s: &PanelSequence, role| {
        let text = s.texts().collect::<Vec<_>>().join("\n");
        make_sequence([text], role, s.template().clone(), &cfg)
    };
    let r = join(&pair.reference, Role::Reference);
    let g = join(&pair.generated, Role::Generated);
    Ok(scorer.similarity(&r.panels()[0], &g.panels()[0])?.value())
}

pub fn cmd_correlate(config: &RunConfig, args: &CorrelateArgs) -> anyhow::Result<()> {
    let mut meta = RunMetadata::start(config);
    require_file(&args.annotations, "annotations")?;
    let prefs = analysis::load_annotations(&args.annotations).map_err(analysis_err)?;
    let mut rows = Vec::new();
    let mut push = |metric: &str,
                    kind: &str,
                    deltas: &[MetricDelta],
                    prefs: &[PreferenceAnnotation]|
     -> anyhow::Result<()> {
        let a = analysis::affinity(deltas, prefs).map_err(|e| match e {
            AnalysisError::MissingDelta(_) => invalid(e.to_string()),
            other => anyhow::Error::new(other),
        })?;
        rows.push(CorrelationRow {
            metric: metric.to_string(),
            kind: kind.to_string(),
            r: a.r,
            n: a.n,
            p_value: a.p_value,
        });
        Ok(())
    };

    if let Some(path) = &args.deltas {
        require_file(path, "deltas")?;
        let records = analysis::load_deltas(path).map_err(analysis_err)?;
        let deltas: Vec<MetricDelta> = records.iter().map(|r| r.delta()).collect();
        for (metric, ds) in analysis::group_by_metric(&deltas) {
            push(&metric, "given", &ds, &prefs)?;
        }
    } else {
        let (with, skip) = match (&args.with, &args.skip) {
            (Some(w), Some(s)) => (w, s),
            _ => {
                return Err(invalid(
                    "correlate needs --deltas, or --with and --skip with --corpus",
                ))
            }
        };
        let refs = load_scoring_corpus(config.require_corpus()?)?;
        let with = pair_up(
            &refs,
            &load_generated(with)?,
            config.template.as_ref(),
            &mut meta.warnings,
        )?;
        let skip = pair_up(
            &refs,
            &load_generated(skip)?,
            config.template.as_ref(),
            &mut meta.warnings,
        )?;
        let scorers = scorers(config)?;
        let pl = pool(config)?;
        for scorer in &scorers {
            let metric = scorer.metric().as_str();
            let (plain, tae_deltas) =
                pl.install(|| -> anyhow::Result<(Vec<MetricDelta>, Vec<MetricDelta>)> {
                    let per_doc = with
                        .par_iter()
                        .zip(skip.par_iter())
                        .map(|(w, s)| -> anyhow::Result<(MetricDelta, MetricDelta)> {
                            let plain =
                                whole_document_score(scorer, w)? - whole_document_score(scorer, s)?;
                            let tae = tae::tae_score(&w.reference, &w.generated, scorer)?.f1
                                - tae::tae_score(&s.reference, &s.generated, scorer)?.f1;
                            let d = |s: f64| MetricDelta {
                                doc_id: w.id.clone(),
                                metric: metric.to_string(),
                                s,
                            };
                            Ok((d(plain), d(tae)))
                        })
                        .collect::<anyhow::Result<Vec<_>>>()?;
                    Ok(per_doc.into_iter().unzip())
                })?;
            push(metric, "plain", &plain, &prefs)?;
            push(metric, "tae", &tae_deltas, &prefs)?;
        }
    }

    let report = CorrelationReport {
        metadata: meta.finish(),
        rows,
    };
    match config.format {
        ReportFormat::Json => emit(
            config.out.as_deref(),
            &(serde_json::to_string_pretty(&report)? + "\n"),
        ),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &report.rows {
                w.serialize(r)?;
            }
            emit(config.out.as_deref(), &String::from_utf8(w.into_inner()?)?)?;
            if let Some(out) = &config.out {
                write_meta(out, report.metadata)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct AgreementReport {
    metadata: RunMetadata,
    alpha: f64,
    majority_rate: f64,
    unanimous_rate: f64,
    documents: usize,
    annotations: usize,
    annotators: usize,
}

pub fn cmd_agreement(config: &RunConfig, annotations: &Path) -> anyhow::Result<()> {
    let meta = RunMetadata::start(config);
    require_file(annotations, "annotations")?;
    let prefs = analysis::load_annotations(annotations).map_err(analysis_err)?;
    let alpha = analysis::krippendorff_alpha(&prefs).map_err(|e| invalid(e.to_string()))?;
    let rate = analysis::preference_rate(&prefs).map_err(|e| invalid(e.to_string()))?;
    let annotators = prefs
        .iter()
        .map(|a| a.annotator_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let report = AgreementReport {
        metadata: meta.finish(),
        alpha,
        majority_rate: rate.majority_rate,
        unanimous_rate: rate.unanimous_rate,
        documents: rate.documents,
        annotations: prefs.len(),
        annotators,
    };
    match config.format {
        ReportFormat::Json => emit(
            config.out.as_deref(),
            &(serde_json::to_string_pretty(&report)? + "\n"),
        ),
        ReportFormat::Csv => {
            let body = format!(
                "alpha,majority_rate,unanimous_rate,documents,annotations,annotators\n{},{},{},{},{},{}\n",
                report.alpha, report.majority_rate, report.unanimous_rate, report.documents, report.annotations, report.annotators
            );
            emit(config.out.as_deref(), &body)?;
            if let Some(out) = &config.out {
                write_meta(out, report.metadata)?;
            }
            Ok(())
        }
    }
}

/// Files written by `synth`, relative to its output directory.
pub const SYNTH_FILES: [&str; 5] = [
    "corpus.jsonl",
    "generated.jsonl",
    "generated_with.jsonl",
    "generated_skip.jsonl",
    "annotations.jsonl",
];

pub fn cmd_synth(config: &RunConfig, args: &SynthArgs) -> anyhow::Result<()> {
    if args.docs == 0 {
        return Err(invalid("--docs must be at least 1"));
    }
    let dir: PathBuf = config
        .out
        .clone()
        .ok_or_else(|| invalid("synth needs --out <dir>"))?;
    let meta = RunMetadata::start(config);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let c = synth_corpus(args.docs, args.annotators, config.seed);
    corpus::save_corpus(&c.corpus_records(), dir.join(SYNTH_FILES[0]))?;
    corpus::save_generated(&c.with_rep, dir.join(SYNTH_FILES[1]))?;
    corpus::save_generated(&c.with_rep, dir.join(SYNTH_FILES[2]))?;
    corpus::save_generated(&c.skip_rep, dir.join(SYNTH_FILES[3]))?;
    let mut ann = String::new();
    for a in &c.annotations {
        ann.push_str(&serde_json::to_string(a)?);
        ann.push('\n');
    }
    corpus::write_atomic(&dir.join(SYNTH_FILES[4]), ann.as_bytes())?;
    write_meta(&dir.join("synth"), meta.finish())
}
