//! METEOR with exact and stem matching stages (no synonym stage).

use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};

const ALPHA: f64 = 0.9;
const GAMMA: f64 = 0.5;
const BETA: f64 = 3.0;

/// Unigram alignment between a candidate and a reference: sorted
/// `(candidate position, reference position)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeteorAlignment {
    pub pairs: Vec<(usize, usize)>,
}

impl MeteorAlignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    /// Number of maximal runs of pairs adjacent in both sequences.
    pub fn chunks(&self) -> usize {
        if self.pairs.is_empty() {
            return 0;
        }
        1 + self
            .pairs
            .windows(2)
            .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
            .count()
    }
}

/// Pair up unmatched positions whose keys are equal, i-th occurrence in the
/// candidate with the i-th occurrence in the reference.
fn match_stage(
    cand_keys: &[String],
    ref_keys: &[String],
    cand_used: &mut [bool],
    ref_used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
) {
    let mut ref_slots: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, k) in ref_keys.iter().enumerate() {
        if !ref_used[j] {
            ref_slots.entry(k.as_str()).or_default().push(j);
        }
    }
    let mut cursor: HashMap<&str, usize> = HashMap::new();
    for (i, k) in cand_keys.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        let Some(slots) = ref_slots.get(k.as_str()) else {
            continue;
        };
        let next = cursor.entry(k.as_str()).or_insert(0);
        if let Some(&j) = slots.get(*next) {
            *next += 1;
            cand_used[i] = true;
            ref_used[j] = true;
            pairs.push((i, j));
        }
    }
}

/// Exact stage followed by a Porter-style (Snowball English) stem stage.
pub fn align<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> MeteorAlignment {
    let cand: Vec<String> = candidate.iter().map(|t| t.as_ref().to_string()).collect();
    let refs: Vec<String> = reference.iter().map(|t| t.as_ref().to_string()).collect();
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; refs.len()];
    let mut pairs = Vec::new();

    match_stage(&cand, &refs, &mut cand_used, &mut ref_used, &mut pairs);

    let stemmer = Stemmer::create(Algorithm::English);
    let stem = |v: &[String]| -> Vec<String> {
        v.iter()
            .map(|t| stemmer.stem(&t.to_lowercase()).into_owned())
            .collect()
    };
    let (cand_stems, ref_stems) = (stem(&cand), stem(&refs));
    match_stage(
        &cand_stems,
        &ref_stems,
        &mut cand_used,
        &mut ref_used,
        &mut pairs,
    );

    pairs.sort_unstable();
    MeteorAlignment { pairs }
}

/// Directional METEOR: `F_mean · (1 − 0.5 · (chunks/matches)^3)` with
/// `F_mean = 10PR / (R + 9P)`.
pub fn meteor<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let alignment = align(candidate, reference);
    let m = alignment.matches();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
    let frag = alignment.chunks() as f64 / m as f64;
    let penalty = GAMMA * frag.powf(BETA);
    (f_mean * (1.0 - penalty)).clamp(0.0, 1.0)
}

/// Geometric mean of both directions.
pub fn symmetric_meteor<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    (meteor(a, b) * meteor(b, a)).sqrt()
}
