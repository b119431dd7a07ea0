//! Sentence-level BLEU with add-one smoothing on zero-match orders.

use std::collections::HashMap;

pub const DEFAULT_MAX_N: usize = 4;

fn ngram_counts<T: Eq + std::hash::Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total for one order.
fn modified_precision_counts<T: Eq + std::hash::Hash>(
    candidate: &[T],
    reference: &[T],
    n: usize,
) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let total = candidate.len().saturating_sub(n - 1);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, total)
}

/// Directional BLEU of `candidate` against a single `reference`.
///
/// Orders with zero clipped matches use `(0 + 1) / (total + 1)`; other orders
/// are unsmoothed, so an exact match scores 1. Empty candidate or empty
/// reference scores 0.
pub fn bleu<T: Eq + std::hash::Hash>(candidate: &[T], reference: &[T], max_n: usize) -> f64 {
    if candidate.is_empty() || reference.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matched, total) = modified_precision_counts(candidate, reference, n);
        let p = if matched == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let geo = (log_sum / max_n as f64).exp();
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    (geo * bp).clamp(0.0, 1.0)
}

/// Geometric mean of both directions.
pub fn symmetric_bleu<T: Eq + std::hash::Hash>(a: &[T], b: &[T], max_n: usize) -> f64 {
    (bleu(a, b, max_n) * bleu(b, a, max_n)).sqrt()
}
