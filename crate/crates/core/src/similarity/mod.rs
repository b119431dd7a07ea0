//! Panel-to-panel similarity metrics.
//!
//! Every metric is exposed through [`Scorer`], which always returns a
//! symmetric value in `[0, 1]`: PRF metrics contribute their F1, and the
//! directional BLEU and METEOR scores are combined by the geometric mean of
//! both directions.

pub mod bleu;
pub mod embedding;
pub mod meteor;
pub mod rouge;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, symmetric_bleu};
pub use embedding::{
    embedding_cosine, token_greedy_embedding, CachedProvider, EmbeddingProvider,
    EmbeddingProviderConfig, HttpEmbeddingProvider, StubProvider,
};
pub use meteor::{meteor, symmetric_meteor};
pub use rouge::rouge_l;

use crate::retry::Retryable;
use crate::text::{Panel, PanelSequence};

#[derive(Debug, Clone, Error)]
pub enum SimilarityError {
    /// Timeout, connection failure, or a 5xx/429 answer.
    #[error("embedding provider unavailable: {0}")]
    Provider(String),
    #[error("embedding provider rejected the request: {0}")]
    Rejected(String),
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error("metric {0} needs an embedding provider")]
    MissingProvider(MetricId),
    #[error("invalid embedding configuration: {0}")]
    Config(String),
}

impl Retryable for SimilarityError {
    fn is_retryable(&self) -> bool {
        matches!(self, Self::Provider(_))
    }
}

/// A similarity value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ZERO: Self = Self(0.0);

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            Self(0.0)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricId {
    RougeL,
    Bleu,
    Meteor,
    EmbeddingCosine,
    TokenGreedyEmbedding,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        Self::RougeL,
        Self::Bleu,
        Self::Meteor,
        Self::EmbeddingCosine,
        Self::TokenGreedyEmbedding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::RougeL => "rouge-l",
            Self::Bleu => "bleu",
            Self::Meteor => "meteor",
            Self::EmbeddingCosine => "embedding-cosine",
            Self::TokenGreedyEmbedding => "token-greedy-embedding",
        }
    }

    pub fn needs_provider(self) -> bool {
        matches!(self, Self::EmbeddingCosine | Self::TokenGreedyEmbedding)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rouge-l" | "rougel" | "r-l" => Ok(Self::RougeL),
            "bleu" | "b" => Ok(Self::Bleu),
            "meteor" | "m" => Ok(Self::Meteor),
            "embedding-cosine" | "cosine" => Ok(Self::EmbeddingCosine),
            "token-greedy-embedding" | "bertscore" | "berts" => Ok(Self::TokenGreedyEmbedding),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Row-major similarity matrix, `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn transposed(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// A registered metric plus the provider it needs, if any.
#[derive(Clone)]
pub struct Scorer {
    metric: MetricId,
    provider: Option<Arc<dyn EmbeddingProvider>>,
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scorer")
            .field("metric", &self.metric)
            .field(
                "provider",
                &self.provider.as_ref().map(|p| p.model_id().to_string()),
            )
            .finish()
    }
}

impl Scorer {
    /// A scorer for a lexical metric.
    pub fn new(metric: MetricId) -> Result<Self, SimilarityError> {
        if metric.needs_provider() {
            return Err(SimilarityError::MissingProvider(metric));
        }
        Ok(Self {
            metric,
            provider: None,
        })
    }

    pub fn with_provider(metric: MetricId, provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self {
            metric,
            provider: Some(provider),
        }
    }

    pub fn metric(&self) -> MetricId {
        self.metric
    }

    fn provider(&self) -> Result<&dyn EmbeddingProvider, SimilarityError> {
        self.provider
            .as_deref()
            .ok_or(SimilarityError::MissingProvider(self.metric))
    }

    /// Symmetric similarity of two panels. Panels without tokens score 0.
    pub fn similarity(&self, a: &Panel, b: &Panel) -> Result<SimilarityScore, SimilarityError> {
        if a.is_degenerate() || b.is_degenerate() {
            return Ok(SimilarityScore::ZERO);
        }
        let (ta, tb) = (a.tokens(), b.tokens());
        let v = match self.metric {
            MetricId::RougeL => rouge_l(ta, tb).f1,
            MetricId::Bleu => symmetric_bleu(ta, tb, bleu::DEFAULT_MAX_N),
            MetricId::Meteor => symmetric_meteor(ta, tb),
            MetricId::EmbeddingCosine => embedding_cosine(a.text(), b.text(), self.provider()?)?,
            MetricId::TokenGreedyEmbedding => token_greedy_embedding(ta, tb, self.provider()?)?.f1,
        };
        Ok(SimilarityScore::new(v))
    }

    /// `sim(rows[i], cols[j])` for every pair. Embedding metrics embed all
    /// inputs in a single provider call.
    pub fn matrix(
        &self,
        rows: &PanelSequence,
        cols: &PanelSequence,
    ) -> Result<SimilarityMatrix, SimilarityError> {
        let (rp, cp) = (rows.panels(), cols.panels());
        match self.metric {
            MetricId::RougeL | MetricId::Bleu | MetricId::Meteor => {
                let mut err = None;
                let m = SimilarityMatrix::from_fn(rp.len(), cp.len(), |i, j| {
                    match self.similarity(&rp[i], &cp[j]) {
                        Ok(s) => s.value(),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                });
                err.map_or(Ok(m), Err)
            }
            MetricId::EmbeddingCosine => {
                let provider = self.provider()?;
                let texts: Vec<String> =
                    rp.iter().chain(cp).map(|p| p.text().to_string()).collect();
                let vectors = provider.embed(&texts)?;
                check_count(texts.len(), vectors.len())?;
                let (rv, cv) = vectors.split_at(rp.len());
                let mut out = Vec::with_capacity(rp.len() * cp.len());
                for (i, a) in rp.iter().enumerate() {
                    for (j, b) in cp.iter().enumerate() {
                        let s = if a.is_degenerate() || b.is_degenerate() {
                            0.0
                        } else {
                            embedding::rescale(embedding::cosine(&rv[i], &cv[j])?)
                        };
                        out.push(s);
                    }
                }
                Ok(SimilarityMatrix {
                    rows: rp.len(),
                    cols: cp.len(),
                    values: out,
                })
            }
            MetricId::TokenGreedyEmbedding => {
                let provider = self.provider()?;
                let tokens: Vec<String> = rp
                    .iter()
                    .chain(cp)
                    .flat_map(|p| p.tokens().iter().cloned())
                    .collect();
                let vectors = provider.embed(&tokens)?;
                check_count(tokens.len(), vectors.len())?;
                let mut spans = Vec::with_capacity(rp.len() + cp.len());
                let mut at = 0;
                for p in rp.iter().chain(cp) {
                    spans.push(&vectors[at..at + p.tokens().len()]);
                    at += p.tokens().len();
                }
                let (rs, cs) = spans.split_at(rp.len());
                let mut out = Vec::with_capacity(rp.len() * cp.len());
                for a in rs {
                    for b in cs {
                        out.push(embedding::greedy_match(a, b)?.f1);
                    }
                }
                Ok(SimilarityMatrix {
                    rows: rp.len(),
                    cols: cp.len(),
                    values: out,
                })
            }
        }
    }
}

fn check_count(expected: usize, got: usize) -> Result<(), SimilarityError> {
    if expected != got {
        return Err(SimilarityError::MalformedResponse(format!(
            "expected {expected} vectors, got {got}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{make_sequence, Role, TemplateKind, TokenizerConfig};

    fn panel(s: &str) -> Panel {
        Panel::new(0, s, &TokenizerConfig::default())
    }

    #[test]
    fn rouge_self_similarity() {
        let s = Scorer::new(MetricId::RougeL).unwrap();
        let p = panel("the quick brown fox");
        assert_eq!(s.similarity(&p, &p).unwrap().value(), 1.0);
    }

    #[test]
    fn bleu_uses_geometric_mean_of_directions() {
        let s = Scorer::new(MetricId::Bleu).unwrap();
        let (a, b) = (panel("a b c d e"), panel("a b c"));
        let oracle = (bleu(a.tokens(), b.tokens(), 4) * bleu(b.tokens(), a.tokens(), 4)).sqrt();
        assert_eq!(s.similarity(&a, &b).unwrap().value(), oracle);
        assert_eq!(s.similarity(&b, &a).unwrap().value(), oracle);
    }

    #[test]
    fn embedding_metrics_need_a_provider() {
        assert!(matches!(
            Scorer::new(MetricId::EmbeddingCosine),
            Err(SimilarityError::MissingProvider(_))
        ));
    }

    #[test]
    fn degenerate_panels_score_zero() {
        let s = Scorer::new(MetricId::Meteor).unwrap();
        assert_eq!(
            s.similarity(&panel("..."), &panel("...")).unwrap().value(),
            0.0
        );
    }

    #[test]
    fn metric_names_round_trip() {
        for m in MetricId::ALL {
            assert_eq!(m.as_str().parse::<MetricId>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
    }

    #[test]
    fn matrix_agrees_with_pairwise_for_embeddings() {
        let cfg = TokenizerConfig::default();
        let a = make_sequence(
            ["red apple", "green pear", ""],
            Role::Generated,
            TemplateKind::Slides,
            &cfg,
        );
        let b = make_sequence(
            ["red apple", "blue sky"],
            Role::Reference,
            TemplateKind::Slides,
            &cfg,
        );
        for metric in [MetricId::EmbeddingCosine, MetricId::TokenGreedyEmbedding] {
            let s = Scorer::with_provider(metric, Arc::new(StubProvider::new("stub", 8)));
            let m = s.matrix(&a, &b).unwrap();
            for i in 0..3 {
                for j in 0..2 {
                    let pair = s
                        .similarity(&a.panels()[i], &b.panels()[j])
                        .unwrap()
                        .value();
                    approx::assert_abs_diff_eq!(m.get(i, j), pair, epsilon = 1e-12);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sentence() -> impl Strategy<Value = String> {
            proptest::collection::vec(
                prop_oneof!["a", "b", "c", "d", "runs", "running", "e"],
                0..10,
            )
            .prop_map(|v| v.join(" "))
        }

        proptest! {
            #[test]
            fn symmetric_and_bounded(a in sentence(), b in sentence()) {
                let (pa, pb) = (panel(&a), panel(&b));
                let provider: Arc<dyn EmbeddingProvider> = Arc::new(StubProvider::new("stub", 6));
                for m in MetricId::ALL {
                    let s = if m.needs_provider() {
                        Scorer::with_provider(m, Arc::clone(&provider))
                    } else {
                        Scorer::new(m).unwrap()
                    };
                    let ab = s.similarity(&pa, &pb).unwrap().value();
                    let ba = s.similarity(&pb, &pa).unwrap().value();
                    prop_assert_eq!(ab, ba, "metric {}", m);
                    prop_assert!((0.0..=1.0).contains(&ab));
                }
            }

            #[test]
            fn self_similarity(a in sentence()) {
                let p = panel(&a);
                prop_assume!(!p.is_degenerate());
                let m = p.tokens().len() as f64;
                prop_assert_eq!(Scorer::new(MetricId::RougeL).unwrap().similarity(&p, &p).unwrap().value(), 1.0);
                prop_assert_eq!(Scorer::new(MetricId::Bleu).unwrap().similarity(&p, &p).unwrap().value(), 1.0);
                let met = Scorer::new(MetricId::Meteor).unwrap().similarity(&p, &p).unwrap().value();
                prop_assert!((met - (1.0 - 0.5 / (m * m * m))).abs() < 1e-12);
            }
        }
    }
}
