//! Template-adaptable evaluation (TAE) of templatic document views, plus the
//! two-step generation pipeline that produces them.
//!
//! * [`text`]: panels, panel sequences, tokenization.
//! * [`similarity`]: ROUGE-L, BLEU, METEOR and embedding-based panel similarity.
//! * [`score`]: alignment, quality, order and length terms, and their composition.
//! * [`extract`]: splitting LaTeX and plain documents into panels; corpus files.
//! * [`generation`]: prompts, completion clients and the two-step pipeline.
//! * [`analysis`]: agreement and correlation statistics for human judgments.

pub mod analysis;
pub mod extract;
pub mod generation;
pub mod retry;
pub mod score;
pub mod similarity;
pub mod text;

pub use score::{corpus_score, tae_score, CorpusScore, TaeError, TaeScore};
pub use similarity::{MetricId, Scorer, SimilarityScore};
pub use text::{
    make_sequence, tokenize, Panel, PanelSequence, Role, TemplateKind, TokenizerConfig,
};
