//! Template-adaptable precision/recall scoring of a generated view against a
//! reference view.
//!
//! For a reference sequence `S` and a generated sequence `S̃`:
//!
//! ```text
//! precision = Q_P · O_P · L        recall = Q_R · O_R · L
//! ```
//!
//! * `Q_P` is the mean, over generated panels, of the best similarity to any
//!   reference panel; `Q_R` is the converse.
//! * `O_P` maps each generated panel to its best reference panel, replicates
//!   (or drops) reference panels by how many generated panels map to them,
//!   and rescales the Spearman correlation of the resulting rank sequences
//!   to `[0, 1]`. `O_R` does the same in the other direction.
//! * `L = exp(−| |S| − |S̃| | / |S|)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::{Scorer, SimilarityError, SimilarityMatrix};
use crate::text::{PanelSequence, Role};

#[derive(Debug, Clone, Error)]
pub enum TaeError {
    #[error("cannot align an empty panel sequence")]
    EmptySequence,
    #[error("reference sequence has no panels")]
    EmptyReference,
    #[error("corpus has no document pairs")]
    EmptyCorpus,
    #[error("length penalty needs at least one reference panel")]
    ZeroReferenceCount,
    #[error("rank sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("rank correlation undefined: {0}")]
    DegenerateRanking(&'static str),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Generated panels mapped onto reference panels.
    Precision,
    /// Reference panels mapped onto generated panels.
    Recall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub target: usize,
    pub similarity: f64,
}

/// Each source panel mapped to its most similar target panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub direction: Direction,
    /// Indexed by source panel.
    pub pairs: Vec<AlignedPair>,
    /// Indexed by target panel: how many sources map to it.
    pub lambda: Vec<usize>,
}

impl Alignment {
    /// Argmax per row of `sims` (rows are sources, columns targets). Ties,
    /// including all-zero rows, go to the lowest target index.
    pub fn from_matrix(direction: Direction, sims: &SimilarityMatrix) -> Result<Self, TaeError> {
        if sims.rows() == 0 || sims.cols() == 0 {
            return Err(TaeError::EmptySequence);
        }
        let mut lambda = vec![0; sims.cols()];
        let pairs = (0..sims.rows())
            .map(|i| {
                let mut best = AlignedPair {
                    target: 0,
                    similarity: sims.get(i, 0),
                };
                for j in 1..sims.cols() {
                    let s = sims.get(i, j);
                    if s > best.similarity {
                        best = AlignedPair {
                            target: j,
                            similarity: s,
                        };
                    }
                }
                lambda[best.target] += 1;
                best
            })
            .collect();
        Ok(Self {
            direction,
            pairs,
            lambda,
        })
    }

    pub fn source_len(&self) -> usize {
        self.pairs.len()
    }
}

/// Align `source` onto `target`. The direction follows the source role:
/// generated sources give a precision alignment, reference sources recall.
pub fn align(
    source: &PanelSequence,
    target: &PanelSequence,
    scorer: &Scorer,
) -> Result<Alignment, TaeError> {
    if source.is_empty() || target.is_empty() {
        return Err(TaeError::EmptySequence);
    }
    let direction = match source.role() {
        Role::Generated => Direction::Precision,
        Role::Reference => Direction::Recall,
    };
    let sims = scorer.matrix(source, target)?;
    Alignment::from_matrix(direction, &sims)
}

/// Mean recorded similarity: `Q_P` for precision alignments, `Q_R` for recall.
pub fn quality(alignment: &Alignment) -> f64 {
    if alignment.pairs.is_empty() {
        return 0.0;
    }
    alignment.pairs.iter().map(|p| p.similarity).sum::<f64>() / alignment.pairs.len() as f64
}

/// Rank sequences of equal length `N` (the source panel count).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPair {
    /// Target panels replicated `λ` times (dropped when `λ = 0`), in target
    /// order; each copy carries the rank of the source panel it stands for.
    pub aligned: Vec<usize>,
    /// `1..=N`: source panels ranked by appearance.
    pub appearance: Vec<usize>,
}

/// Force a one-to-one mapping by replicating targets, then rank. Copies of
/// one target panel take their inherited ranks in ascending order.
pub fn replicate_and_rank(alignment: &Alignment) -> RankPair {
    let n = alignment.source_len();
    let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); alignment.lambda.len()];
    for (i, pair) in alignment.pairs.iter().enumerate() {
        by_target[pair.target].push(i + 1);
    }
    let aligned = by_target.into_iter().flatten().collect();
    RankPair {
        aligned,
        appearance: (1..=n).collect(),
    }
}

/// Average (fractional) ranks, 1-based, ties sharing their mean rank.
fn fractional_ranks(x: &[usize]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by_key(|&i| x[i]);
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn has_ties(x: &[usize]) -> bool {
    let mut v = x.to_vec();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

/// Spearman's rank correlation.
///
/// Without ties this is the closed form `1 − 6Σd² / (n(n² − 1))` evaluated
/// in integer arithmetic; with ties it is the Pearson correlation of
/// fractional ranks.
pub fn spearman(x: &[usize], y: &[usize]) -> Result<f64, TaeError> {
    if x.len() != y.len() {
        return Err(TaeError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(TaeError::DegenerateRanking("fewer than two observations"));
    }
    let (rx, ry) = (fractional_ranks(x), fractional_ranks(y));
    if !has_ties(x) && !has_ties(y) {
        let d2: u128 = rx
            .iter()
            .zip(&ry)
            .map(|(a, b)| {
                let d = (*a as i128 - *b as i128).unsigned_abs();
                d * d
            })
            .sum();
        let n = n as u128;
        return Ok(1.0 - (6 * d2) as f64 / (n * (n * n - 1)) as f64);
    }
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TaeError::DegenerateRanking("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `(spearman + 1) / 2`; a single ranked panel is vacuously in order.
pub fn order_penalty(ranks: &RankPair) -> f64 {
    if ranks.appearance.len() < 2 {
        return 1.0;
    }
    let rho = spearman(&ranks.aligned, &ranks.appearance)
        .expect("replicated rankings are permutations of 1..=N");
    (rho + 1.0) / 2.0
}

/// `exp(−|n − m| / n)` for `n` reference panels and `m` generated panels.
pub fn length_penalty(ref_count: usize, gen_count: usize) -> Result<f64, TaeError> {
    if ref_count == 0 {
        return Err(TaeError::ZeroReferenceCount);
    }
    let diff = ref_count.abs_diff(gen_count) as f64;
    Ok((-diff / ref_count as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaeScore {
    pub q_p: f64,
    pub q_r: f64,
    pub o_p: f64,
    pub o_r: f64,
    pub l: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub reference_panels: usize,
    pub generated_panels: usize,
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl TaeScore {
    fn zero(reference_panels: usize, generated_panels: usize) -> Self {
        Self {
            q_p: 0.0,
            q_r: 0.0,
            o_p: 0.0,
            o_r: 0.0,
            l: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            reference_panels,
            generated_panels,
        }
    }

    /// Compose the final scores from their components.
    pub fn compose(q_p: f64, q_r: f64, o_p: f64, o_r: f64, l: f64, n: usize, m: usize) -> Self {
        let precision = q_p * o_p * l;
        let recall = q_r * o_r * l;
        Self {
            q_p,
            q_r,
            o_p,
            o_r,
            l,
            precision,
            recall,
            f1: f_measure(precision, recall),
            reference_panels: n,
            generated_panels: m,
        }
    }
}

/// Everything computed along the way, for inspection and testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaeBreakdown {
    pub score: TaeScore,
    pub precision_alignment: Option<Alignment>,
    pub recall_alignment: Option<Alignment>,
    pub precision_ranks: Option<RankPair>,
    pub recall_ranks: Option<RankPair>,
}

/// Score from a precomputed `generated × reference` similarity matrix with
/// `reference_len ≥ 1`.
pub fn tae_from_matrix(
    reference_len: usize,
    generated_len: usize,
    sims: &SimilarityMatrix,
) -> Result<TaeBreakdown, TaeError> {
    if reference_len == 0 {
        return Err(TaeError::EmptyReference);
    }
    if generated_len == 0 {
        return Ok(TaeBreakdown {
            score: TaeScore::zero(reference_len, 0),
            precision_alignment: None,
            recall_alignment: None,
            precision_ranks: None,
            recall_ranks: None,
        });
    }
    debug_assert_eq!((sims.rows(), sims.cols()), (generated_len, reference_len));
    let pa = Alignment::from_matrix(Direction::Precision, sims)?;
    let ra = Alignment::from_matrix(Direction::Recall, &sims.transposed())?;
    let (pr, rr) = (replicate_and_rank(&pa), replicate_and_rank(&ra));
    let score = TaeScore::compose(
        quality(&pa),
        quality(&ra),
        order_penalty(&pr),
        order_penalty(&rr),
        length_penalty(reference_len, generated_len)?,
        reference_len,
        generated_len,
    );
    Ok(TaeBreakdown {
        score,
        precision_alignment: Some(pa),
        recall_alignment: Some(ra),
        precision_ranks: Some(pr),
        recall_ranks: Some(rr),
    })
}

/// Full breakdown for one document pair.
pub fn tae_breakdown(
    reference: &PanelSequence,
    generated: &PanelSequence,
    scorer: &Scorer,
) -> Result<TaeBreakdown, TaeError> {
    if reference.is_empty() {
        return Err(TaeError::EmptyReference);
    }
    if generated.is_empty() {
        return tae_from_matrix(
            reference.len(),
            0,
            &SimilarityMatrix::from_fn(0, 0, |_, _| 0.0),
        );
    }
    let sims = scorer.matrix(generated, reference)?;
    tae_from_matrix(reference.len(), generated.len(), &sims)
}

/// TAE score of `generated` against `reference`. An empty generated view
/// scores 0 everywhere.
pub fn tae_score(
    reference: &PanelSequence,
    generated: &PanelSequence,
    scorer: &Scorer,
) -> Result<TaeScore, TaeError> {
    tae_breakdown(reference, generated, scorer).map(|b| b.score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    /// Unweighted mean over documents of every component; panel counts are
    /// summed.
    pub aggregate: TaeScore,
    pub documents: Vec<TaeScore>,
}

/// Macro-average over documents of per-document scores.
pub fn macro_average(documents: &[TaeScore]) -> Result<TaeScore, TaeError> {
    if documents.is_empty() {
        return Err(TaeError::EmptyCorpus);
    }
    let n = documents.len() as f64;
    let mean = |f: fn(&TaeScore) -> f64| documents.iter().map(f).sum::<f64>() / n;
    Ok(TaeScore {
        q_p: mean(|s| s.q_p),
        q_r: mean(|s| s.q_r),
        o_p: mean(|s| s.o_p),
        o_r: mean(|s| s.o_r),
        l: mean(|s| s.l),
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        reference_panels: documents.iter().map(|s| s.reference_panels).sum(),
        generated_panels: documents.iter().map(|s| s.generated_panels).sum(),
    })
}

/// Score every `(reference, generated)` pair in parallel; results keep input
/// order.
pub fn corpus_score(
    pairs: &[(PanelSequence, PanelSequence)],
    scorer: &Scorer,
) -> Result<CorpusScore, TaeError> {
    if pairs.is_empty() {
        return Err(TaeError::EmptyCorpus);
    }
    let documents = pairs
        .par_iter()
        .map(|(r, g)| tae_score(r, g, scorer))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorpusScore {
        aggregate: macro_average(&documents)?,
        documents,
    })
}
