//! Embedding-backed similarity: segment cosine and greedy token matching.
//!
//! Vectors come from an [`EmbeddingProvider`]. The HTTP provider speaks
//! `POST {model, inputs: [..]}` → `{vectors: [[..]]}`; [`CachedProvider`]
//! memoizes vectors by `(model id, content hash)` in memory and optionally on
//! disk, and [`StubProvider`] serves fixed or hash-derived vectors offline.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Prf, SimilarityError};
use crate::retry::RetryPolicy;

pub type Vector = Vec<f64>;

pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// One vector per input, in input order.
    fn embed(&self, inputs: &[String]) -> Result<Vec<Vector>, SimilarityError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingProviderConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub batch_size: usize,
    pub timeout_secs: u64,
    pub model: String,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            auth_env: Some("TAE_EMBEDDING_API_KEY".into()),
            batch_size: 32,
            timeout_secs: 60,
            model: String::new(),
            max_concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        if self.batch_size == 0 {
            return Err(SimilarityError::Config(
                "batch_size must be at least 1".into(),
            ));
        }
        if self.max_concurrency == 0 {
            return Err(SimilarityError::Config(
                "max_concurrency must be at least 1".into(),
            ));
        }
        if self.endpoint.is_empty() {
            return Err(SimilarityError::Config(
                "embedding endpoint is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Counting gate bounding in-flight requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn with<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap();
            while *free == 0 {
                free = self.cv.wait(free).unwrap();
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
        out
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    inputs: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vector>,
}

pub struct HttpEmbeddingProvider {
    config: EmbeddingProviderConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
    gate: Gate,
}

impl HttpEmbeddingProvider {
    pub fn new(config: EmbeddingProviderConfig) -> Result<Self, SimilarityError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| SimilarityError::Config(e.to_string()))?;
        let token = config
            .auth_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        let gate = Gate::new(config.max_concurrency);
        Ok(Self {
            config,
            client,
            token,
            gate,
        })
    }

    fn post_batch(&self, batch: &[String]) -> Result<Vec<Vector>, SimilarityError> {
        let mut req = self.client.post(&self.config.endpoint).json(&EmbedRequest {
            model: &self.config.model,
            inputs: batch,
        });
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| SimilarityError::Provider(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let msg = format!("embedding endpoint returned {status}");
            return if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
                Err(SimilarityError::Provider(msg))
            } else {
                Err(SimilarityError::Rejected(msg))
            };
        }
        let body = resp
            .text()
            .map_err(|e| SimilarityError::Provider(e.to_string()))?;
        let parsed: EmbedResponse = serde_json::from_str(&body)
            .map_err(|e| SimilarityError::MalformedResponse(e.to_string()))?;
        if parsed.vectors.len() != batch.len() {
            return Err(SimilarityError::MalformedResponse(format!(
                "expected {} vectors, got {}",
                batch.len(),
                parsed.vectors.len()
            )));
        }
        Ok(parsed.vectors)
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vector>, SimilarityError> {
        let mut out = Vec::with_capacity(inputs.len());
        for batch in inputs.chunks(self.config.batch_size) {
            let (res, _) = self
                .gate
                .with(|| self.config.retry.run(|| self.post_batch(batch)));
            out.extend(res?);
        }
        Ok(out)
    }
}

/// Cache key for a text under a model.
pub fn content_key(model: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Memoizing wrapper. Readers share the map; writes (memory and disk) are
/// serialized.
pub struct CachedProvider<P> {
    inner: P,
    memory: RwLock<HashMap<String, Arc<Vector>>>,
    dir: Option<PathBuf>,
    write_lock: Mutex<()>,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            memory: RwLock::new(HashMap::new()),
            dir: None,
            write_lock: Mutex::new(()),
        }
    }

    /// Also persist vectors as `<dir>/<key>.json`.
    pub fn with_disk(mut self, dir: impl AsRef<Path>) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        self.dir = Some(dir.as_ref().to_path_buf());
        Ok(self)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn lookup(&self, key: &str) -> Option<Arc<Vector>> {
        if let Some(v) = self.memory.read().unwrap().get(key) {
            return Some(Arc::clone(v));
        }
        let path = self.dir.as_ref()?.join(format!("{key}.json"));
        let bytes = std::fs::read(path).ok()?;
        let v: Vector = serde_json::from_slice(&bytes).ok()?;
        let v = Arc::new(v);
        self.memory
            .write()
            .unwrap()
            .insert(key.to_string(), Arc::clone(&v));
        Some(v)
    }

    fn store(&self, key: String, v: &Vector) {
        let _guard = self.write_lock.lock().unwrap();
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.json"));
            let tmp = dir.join(format!("{key}.json.tmp"));
            let written = serde_json::to_vec(v)
                .map_err(std::io::Error::from)
                .and_then(|bytes| std::fs::write(&tmp, bytes))
                .and_then(|_| std::fs::rename(&tmp, &path));
            if let Err(e) = written {
                tracing::warn!(error = %e, "failed to persist embedding");
            }
        }
        self.memory
            .write()
            .unwrap()
            .insert(key, Arc::new(v.clone()));
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vector>, SimilarityError> {
        let model = self.model_id().to_string();
        let keys: Vec<String> = inputs.iter().map(|t| content_key(&model, t)).collect();
        let mut found: Vec<Option<Arc<Vector>>> = keys.iter().map(|k| self.lookup(k)).collect();

        let mut missing: Vec<String> = Vec::new();
        let mut missing_keys: Vec<String> = Vec::new();
        for (i, slot) in found.iter().enumerate() {
            if slot.is_none() && !missing_keys.contains(&keys[i]) {
                missing.push(inputs[i].clone());
                missing_keys.push(keys[i].clone());
            }
        }
        if !missing.is_empty() {
            let fresh = self.inner.embed(&missing)?;
            if fresh.len() != missing.len() {
                return Err(SimilarityError::MalformedResponse(format!(
                    "expected {} vectors, got {}",
                    missing.len(),
                    fresh.len()
                )));
            }
            for (k, v) in missing_keys.into_iter().zip(&fresh) {
                self.store(k, v);
            }
            for (i, slot) in found.iter_mut().enumerate() {
                if slot.is_none() {
                    *slot = self.lookup(&keys[i]);
                }
            }
        }
        Ok(found
            .into_iter()
            .map(|v| v.expect("vector cached above").as_ref().clone())
            .collect())
    }
}

/// Offline provider: fixed vectors for known texts, otherwise a
/// deterministic vector derived from the text's hash.
#[derive(Debug, Default)]
pub struct StubProvider {
    model: String,
    dim: usize,
    fixed: HashMap<String, Vector>,
    calls: AtomicUsize,
}

impl StubProvider {
    pub fn new(model: impl Into<String>, dim: usize) -> Self {
        Self {
            model: model.into(),
            dim: dim.max(1),
            fixed: HashMap::new(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_vector(mut self, text: impl Into<String>, v: Vector) -> Self {
        self.fixed.insert(text.into(), v);
        self
    }

    /// Number of `embed` calls served.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn hashed(&self, text: &str) -> Vector {
        let mut out = Vec::with_capacity(self.dim);
        let mut counter = 0u32;
        while out.len() < self.dim {
            let mut h = Sha256::new();
            h.update(text.as_bytes());
            h.update(counter.to_le_bytes());
            for pair in h.finalize().chunks(2) {
                if out.len() == self.dim {
                    break;
                }
                let raw = u16::from_le_bytes([pair[0], pair[1]]) as f64;
                out.push(raw / 32767.5 - 1.0);
            }
            counter += 1;
        }
        out
    }
}

impl EmbeddingProvider for StubProvider {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vector>, SimilarityError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(inputs
            .iter()
            .map(|t| self.fixed.get(t).cloned().unwrap_or_else(|| self.hashed(t)))
            .collect())
    }
}

/// Cosine of two vectors; 0 when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::MalformedResponse(format!(
            "vector dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a == b && a.iter().any(|x| *x != 0.0) {
        return Ok(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Map a cosine from [−1, 1] onto [0, 1].
pub fn rescale(cos: f64) -> f64 {
    ((cos + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Rescaled cosine between two segment embeddings.
pub fn embedding_cosine(
    a: &str,
    b: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, SimilarityError> {
    let v = provider.embed(&[a.to_string(), b.to_string()])?;
    if v.len() != 2 {
        return Err(SimilarityError::MalformedResponse(format!(
            "expected 2 vectors, got {}",
            v.len()
        )));
    }
    Ok(rescale(cosine(&v[0], &v[1])?))
}

/// Greedy token matching over precomputed token vectors: precision is the
/// mean over candidate tokens of their best rescaled cosine against the
/// reference tokens, recall the converse. No idf weighting.
pub fn greedy_match(candidate: &[Vector], reference: &[Vector]) -> Result<Prf, SimilarityError> {
    if candidate.is_empty() || reference.is_empty() {
        return Ok(Prf::new(0.0, 0.0));
    }
    let mut sims = vec![vec![0.0; reference.len()]; candidate.len()];
    for (i, c) in candidate.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            sims[i][j] = rescale(cosine(c, r)?);
        }
    }
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(f64::MIN, f64::max))
        .sum::<f64>()
        / candidate.len() as f64;
    let recall = (0..reference.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(Prf::new(precision, recall))
}

/// Greedy token matching, embedding every token through `provider`.
pub fn token_greedy_embedding<S: AsRef<str>>(
    candidate: &[S],
    reference: &[S],
    provider: &dyn EmbeddingProvider,
) -> Result<Prf, SimilarityError> {
    let all: Vec<String> = candidate
        .iter()
        .chain(reference)
        .map(|t| t.as_ref().to_string())
        .collect();
    if candidate.is_empty() || reference.is_empty() {
        return Ok(Prf::new(0.0, 0.0));
    }
    let vectors = provider.embed(&all)?;
    if vectors.len() != all.len() {
        return Err(SimilarityError::MalformedResponse(format!(
            "expected {} vectors, got {}",
            all.len(),
            vectors.len()
        )));
    }
    let (c, r) = vectors.split_at(candidate.len());
    greedy_match(c, r)
}
