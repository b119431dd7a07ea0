//! LCS-based ROUGE-L.

use super::Prf;

/// Length of the longest common subsequence, O(n·m) time, O(m) memory.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L precision (LCS/|candidate|), recall (LCS/|reference|) and F1.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> Prf {
    let lcs = lcs_len(candidate, reference) as f64;
    let precision = if candidate.is_empty() {
        0.0
    } else {
        lcs / candidate.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        lcs / reference.len() as f64
    };
    Prf::new(precision, recall)
}
