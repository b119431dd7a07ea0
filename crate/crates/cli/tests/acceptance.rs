//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tae::analysis::{
    affinity, krippendorff_alpha, pearson, preference_rate, MetricDelta, Preference,
    PreferenceAnnotation,
};
use tae::generation::{generate_view, GenerationConfig, RepresentationMode, StubCompletionClient};
use tae::score::{
    length_penalty, order_penalty, spearman, tae_breakdown, Alignment, Direction, RankPair,
};
use tae::similarity::rouge::lcs_len;
use tae::similarity::{bleu, meteor, MetricId};
use tae::{make_sequence, tae_score, PanelSequence, Role, Scorer, TemplateKind, TokenizerConfig};
use tae_cli::report::Report;

const SEED: u64 = 20_240_601;

fn seq(texts: &[String], role: Role) -> PanelSequence {
    make_sequence(
        texts,
        role,
        TemplateKind::Slides,
        &TokenizerConfig::default(),
    )
}

fn rouge() -> Scorer {
    Scorer::new(MetricId::RougeL).unwrap()
}

fn random_panel(rng: &mut ChaCha8Rng, vocab: usize, max_tokens: usize) -> String {
    let n = rng.gen_range(1..=max_tokens);
    (0..n)
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn within(elapsed: Duration, limit: Duration, what: &str) {
    assert!(elapsed < limit, "{what} took {elapsed:?}, limit {limit:?}");
}

// 1. Identity: a sequence scored against itself is perfect. Panels within a
// sequence are kept distinct: with duplicates, ties resolve to the first
// copy and the order term can drop below 1.
fn identity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let mut panels: Vec<String> = Vec::new();
        while panels.len() < n {
            let p = random_panel(&mut rng, 40, 30);
            if !panels.contains(&p) {
                panels.push(p);
            }
        }
        let s = tae_score(
            &seq(&panels, Role::Reference),
            &seq(&panels, Role::Generated),
            &rouge(),
        )
        .unwrap();
        for (name, v) in [
            ("precision", s.precision),
            ("recall", s.recall),
            ("f1", s.f1),
        ] {
            assert!((v - 1.0).abs() <= 1e-9, "{name} = {v} for {panels:?}");
        }
    }
    within(started.elapsed(), Duration::from_secs(5), "identity suite");
}

// 2. Worked example: S = [a b c, d e f], generated = [a b c, d e f, x y z].
// Q_P = (1 + 1 + 0) / 3; precision copies rank [1, 3, 2] against [1, 2, 3]
// (x y z ties to the first panel), Spearman 0.5, so O_P = 0.75;
// L = exp(-1/2); Q_R = O_R = 1.
fn worked_example() {
    let r: Vec<String> = ["a b c", "d e f"].map(String::from).to_vec();
    let g: Vec<String> = ["a b c", "d e f", "x y z"].map(String::from).to_vec();
    let s = tae_score(
        &seq(&r, Role::Reference),
        &seq(&g, Role::Generated),
        &rouge(),
    )
    .unwrap();
    assert!((s.q_p - 2.0 / 3.0).abs() <= 1e-12, "q_p {}", s.q_p);
    assert!((s.o_p - 0.75).abs() <= 1e-12, "o_p {}", s.o_p);
    assert!((s.l - (-0.5f64).exp()).abs() <= 1e-12, "l {}", s.l);
    assert!(
        (s.precision - 0.303265).abs() <= 1e-6,
        "precision {}",
        s.precision
    );
    assert!((s.recall - 0.606531).abs() <= 1e-6, "recall {}", s.recall);
    assert!((s.f1 - 0.404354).abs() <= 1e-6, "f1 {}", s.f1);
}

// Oracle pieces for criterion 3, written without the library's helpers.

fn oracle_align(sims: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<usize>) {
    let cols = sims[0].len();
    let mut targets = Vec::new();
    let mut values = Vec::new();
    let mut lambda = vec![0; cols];
    for row in sims {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = (0..cols).find(|&j| row[j] == max).unwrap();
        targets.push(first);
        values.push(max);
        lambda[first] += 1;
    }
    (targets, values, lambda)
}

fn sum_d2(x: &[usize]) -> u64 {
    x.iter()
        .enumerate()
        .map(|(i, &r)| {
            let d = r as i64 - (i as i64 + 1);
            (d * d) as u64
        })
        .sum()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Every arrangement of copies within each target block; the best one
/// minimizes the squared rank differences against appearance order.
fn oracle_ranks(targets: &[usize], cols: usize) -> Vec<usize> {
    let blocks: Vec<Vec<usize>> = (0..cols)
        .map(|t| {
            (0..targets.len())
                .filter(|&i| targets[i] == t)
                .map(|i| i + 1)
                .collect()
        })
        .collect();
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new()];
    for block in &blocks {
        let perms = permutations(block);
        candidates = candidates
            .iter()
            .flat_map(|prefix| {
                perms.iter().map(move |p| {
                    let mut v = prefix.clone();
                    v.extend(p);
                    v
                })
            })
            .collect();
    }
    let best = candidates.iter().map(|c| sum_d2(c)).min().unwrap();
    let winners: Vec<&Vec<usize>> = candidates.iter().filter(|c| sum_d2(c) == best).collect();
    assert_eq!(winners.len(), 1, "optimal arrangement should be unique");
    winners[0].clone()
}

fn oracle_order(ranks: &[usize]) -> f64 {
    let n = ranks.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let rho = 1.0 - (6 * sum_d2(ranks)) as f64 / (n * (n * n - 1)) as f64;
    (rho + 1.0) / 2.0
}

// 3. Brute-force equivalence on 1000 random small instances.
fn brute_force() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let scorer = rouge();
    for case in 0..1000 {
        let vocab = rng.gen_range(2..=10);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let r: Vec<String> = (0..n).map(|_| random_panel(&mut rng, vocab, 6)).collect();
        let g: Vec<String> = (0..m).map(|_| random_panel(&mut rng, vocab, 6)).collect();
        let (rs, gs) = (seq(&r, Role::Reference), seq(&g, Role::Generated));
        let got = tae_breakdown(&rs, &gs, &scorer).unwrap();

        let sims: Vec<Vec<f64>> = gs
            .panels()
            .iter()
            .map(|gp| {
                rs.panels()
                    .iter()
                    .map(|rp| scorer.similarity(gp, rp).unwrap().value())
                    .collect()
            })
            .collect();
        let sims_t: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..m).map(|i| sims[i][j]).collect())
            .collect();

        let check =
            |dir: Direction, sims: &[Vec<f64>], al: &Alignment, ranks: &RankPair| -> (f64, f64) {
                let (targets, values, lambda) = oracle_align(sims);
                assert_eq!(al.direction, dir);
                assert_eq!(
                    al.pairs.iter().map(|p| p.target).collect::<Vec<_>>(),
                    targets,
                    "case {case}"
                );
                assert_eq!(
                    al.pairs.iter().map(|p| p.similarity).collect::<Vec<_>>(),
                    values,
                    "case {case}"
                );
                assert_eq!(al.lambda, lambda, "case {case}");
                let want = oracle_ranks(&targets, sims[0].len());
                assert_eq!(ranks.aligned, want, "case {case}");
                assert_eq!(ranks.appearance, (1..=targets.len()).collect::<Vec<_>>());
                let q = values.iter().sum::<f64>() / values.len() as f64;
                (q, oracle_order(&want))
            };
        let (q_p, o_p) = check(
            Direction::Precision,
            &sims,
            got.precision_alignment.as_ref().unwrap(),
            got.precision_ranks.as_ref().unwrap(),
        );
        let (q_r, o_r) = check(
            Direction::Recall,
            &sims_t,
            got.recall_alignment.as_ref().unwrap(),
            got.recall_ranks.as_ref().unwrap(),
        );
        let l = (-((n as f64 - m as f64).abs()) / n as f64).exp();
        let p = q_p * o_p * l;
        let rc = q_r * o_r * l;
        let f1 = if p + rc > 0.0 {
            2.0 * p * rc / (p + rc)
        } else {
            0.0
        };
        let s = got.score;
        assert_eq!(
            (s.q_p, s.q_r, s.o_p, s.o_r, s.l, s.precision, s.recall, s.f1),
            (q_p, q_r, o_p, o_r, l, p, rc, f1),
            "case {case}: {r:?} vs {g:?}"
        );
        assert_eq!((s.reference_panels, s.generated_panels), (n, m));
    }
    within(
        started.elapsed(),
        Duration::from_secs(60),
        "brute-force suite",
    );
}

// 4. Reversed order of distinct, perfectly matching panels.
fn order_sensitivity() {
    for n in 2..=6 {
        let panels: Vec<String> = (0..n)
            .map(|i| format!("topic{i} detail{i} point{i}"))
            .collect();
        let reversed: Vec<String> = panels.iter().rev().cloned().collect();
        let s = tae_score(
            &seq(&panels, Role::Reference),
            &seq(&reversed, Role::Generated),
            &rouge(),
        )
        .unwrap();
        assert_eq!(s.o_p, 0.0, "n = {n}");
        assert_eq!(s.q_p, 1.0, "n = {n}");
    }
}

// 5. Length penalty closed forms.
fn length_closed_form() {
    for n in 1..=10 {
        let half = length_penalty(n, 2 * n).unwrap();
        assert!(
            (half - (-1.0f64).exp()).abs() <= 1e-9,
            "L({n}, {}) = {half}",
            2 * n
        );
        assert_eq!(length_penalty(n, n).unwrap(), 1.0);
    }
}

// 6. Spearman closed form against the definition (Pearson correlation of
// ranks) over every permutation up to n = 5, and the [−1, 1] → [0, 1] map.
fn spearman_exhaustive() {
    for n in 2..=5usize {
        let identity: Vec<usize> = (1..=n).collect();
        for p in permutations(&identity) {
            let got = spearman(&p, &identity).unwrap();
            let mean = (n as f64 + 1.0) / 2.0;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (a, b) in p.iter().zip(&identity) {
                let (da, db) = (*a as f64 - mean, *b as f64 - mean);
                sxy += da * db;
                sxx += da * da;
                syy += db * db;
            }
            let definition = sxy / (sxx * syy).sqrt();
            assert!(
                (got - definition).abs() <= 1e-12,
                "{p:?}: {got} vs {definition}"
            );
        }
        let forward = RankPair {
            aligned: identity.clone(),
            appearance: identity.clone(),
        };
        let backward = RankPair {
            aligned: identity.iter().rev().cloned().collect(),
            appearance: identity.clone(),
        };
        assert_eq!(order_penalty(&forward), 1.0);
        assert_eq!(order_penalty(&backward), 0.0);
    }
}

fn is_subsequence(sub: &[u8], of: &[u8]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|c| it.any(|x| x == c))
}

// 7. Metric unit oracles.
fn metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    for _ in 0..300 {
        let a: Vec<u8> = (0..rng.gen_range(0..=8))
            .map(|_| rng.gen_range(0..4))
            .collect();
        let b: Vec<u8> = (0..rng.gen_range(0..=8))
            .map(|_| rng.gen_range(0..4))
            .collect();
        // Longest subsequence of `a` (by exhaustive mask search) that is also one of `b`.
        let mut best = 0;
        for mask in 0u32..(1 << a.len()) {
            let sub: Vec<u8> = (0..a.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| a[i])
                .collect();
            if sub.len() > best && is_subsequence(&sub, &b) {
                best = sub.len();
            }
        }
        assert_eq!(lcs_len(&a, &b), best, "{a:?} vs {b:?}");
    }

    let t = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    assert_eq!(
        bleu::bleu(
            &t("the cat sat on the mat"),
            &t("the cat sat on the mat"),
            4
        ),
        1.0
    );
    // Unigram 2/3, bigram 1/2, trigram 0/1 smoothed to 1/2, no 4-grams: (1/6)^(1/4).
    let smoothed = bleu::bleu(&t("a b c"), &t("a b d"), 4);
    assert!(
        (smoothed - (1.0f64 / 6.0).powf(0.25)).abs() <= 1e-12,
        "{smoothed}"
    );

    for m in [2usize, 5, 10] {
        let s: Vec<String> = (0..m).map(|i| format!("tok{i}")).collect();
        let got = meteor::meteor(&s, &s);
        let want = 1.0 - 0.5 / (m as f64).powi(3);
        assert!((got - want).abs() <= 1e-12, "m = {m}: {got} vs {want}");
    }
}

fn tae_bin() -> &'static str {
    env!("CARGO_BIN_EXE_tae")
}

fn run_tae(args: &[&str], cwd: &Path) -> std::process::Output {
    let out = Command::new(tae_bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "tae {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

// 8. Pipeline determinism and call counts over five fixture documents.
fn pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let stub = dir.path().join("canned");
    std::fs::create_dir_all(&stub).unwrap();
    let endpoint = format!("stub:{}", stub.display());
    let docs = fixture("docs.jsonl");
    for mode in RepresentationMode::ALL {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{mode}-{run}.jsonl"));
            let trace = dir.path().join(format!("{mode}-{run}.trace.jsonl"));
            run_tae(
                &[
                    "generate",
                    "--corpus",
                    &docs,
                    "--endpoint",
                    &endpoint,
                    "--rep-mode",
                    mode.as_str(),
                    "--out",
                    out.to_str().unwrap(),
                    "--trace-out",
                    trace.to_str().unwrap(),
                ],
                dir.path(),
            );
            let steps = std::fs::read_to_string(&trace).unwrap().lines().count();
            assert_eq!(steps, 5 * mode.calls(), "{mode}: trace steps");
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(
            outputs[0], outputs[1],
            "{mode}: outputs differ between runs"
        );

        let records = tae::extract::corpus::load_corpus(&docs).unwrap();
        let client = StubCompletionClient::synthetic();
        let cfg = GenerationConfig {
            mode,
            ..Default::default()
        };
        for r in &records {
            generate_view(r.input_text.as_deref().unwrap(), &cfg, &client).unwrap();
        }
        let expected = if mode == RepresentationMode::NoRep {
            1
        } else {
            2
        };
        assert_eq!(
            client.calls(),
            records.len() * expected,
            "{mode}: call count"
        );
    }
}

fn ann(doc: usize, who: &str, p: Preference, degree: u8) -> PreferenceAnnotation {
    PreferenceAnnotation {
        doc_id: format!("d{doc}"),
        annotator_id: who.into(),
        preferred: p,
        degree,
    }
}

// 9. Analysis statistics against independently computed values (scipy's
// pearsonr and the reference krippendorff package).
fn analysis_oracles() {
    let x = [
        0.12, -0.05, 0.33, 0.08, -0.21, 0.27, 0.02, 0.15, -0.11, 0.40,
    ];
    let y = [2.0, -1.0, 3.0, 1.0, -3.0, 2.0, -1.0, 1.0, -2.0, 3.0];
    let r = pearson(&x, &y).unwrap();
    assert!((r - 0.9588486961771026).abs() <= 1e-9, "pearson {r}");

    use Preference::{SkipRep as S, WithRep as W};
    // Seven documents, three annotators, two missing labels.
    let labels: [[Option<Preference>; 3]; 7] = [
        [Some(W), Some(W), Some(W)],
        [Some(W), Some(S), Some(W)],
        [Some(S), Some(S), Some(S)],
        [Some(W), Some(W), Some(S)],
        [Some(S), Some(W), Some(W)],
        [Some(W), Some(W), None],
        [Some(W), None, Some(W)],
    ];
    let prefs: Vec<PreferenceAnnotation> = labels
        .iter()
        .enumerate()
        .flat_map(|(d, row)| {
            row.iter()
                .zip(["a", "b", "c"])
                .filter_map(move |(p, who)| p.map(|p| ann(d, who, p, 1)))
        })
        .collect();
    let alpha = krippendorff_alpha(&prefs).unwrap();
    assert!((alpha - 0.3076923076923076).abs() <= 1e-9, "alpha {alpha}");

    // Affinity is unchanged by positive affine maps of the deltas.
    let prefs: Vec<PreferenceAnnotation> = (0..10)
        .flat_map(|d| {
            let p = if y[d] > 0.0 { W } else { S };
            [ann(d, "a", p, y[d].abs() as u8), ann(d, "b", W, 1)]
        })
        .collect();
    let deltas = |f: &dyn Fn(f64) -> f64| -> Vec<MetricDelta> {
        x.iter()
            .enumerate()
            .map(|(d, v)| MetricDelta {
                doc_id: format!("d{d}"),
                metric: "m".into(),
                s: f(*v),
            })
            .collect()
    };
    let base = affinity(&deltas(&|v| v), &prefs).unwrap();
    for (a, b) in [(2.0, 0.0), (0.5, 3.0), (10.0, -7.5)] {
        let moved = affinity(&deltas(&|v| a * v + b), &prefs).unwrap();
        assert!(
            (moved.r - base.r).abs() <= 1e-9,
            "{} vs {}",
            moved.r,
            base.r
        );
    }

    // 100 documents: 71 unanimous, 11 two-of-three, 18 against.
    let mut prefs = Vec::new();
    for d in 0..100 {
        let votes = match d {
            0..=70 => [W, W, W],
            71..=81 => [W, W, S],
            82..=90 => [W, S, S],
            _ => [S, S, S],
        };
        for (v, who) in votes.iter().zip(["a", "b", "c"]) {
            prefs.push(ann(d, who, *v, 2));
        }
    }
    prefs.shuffle(&mut ChaCha8Rng::seed_from_u64(SEED + 9));
    let rate = preference_rate(&prefs).unwrap();
    assert_eq!((rate.majority_rate, rate.unanimous_rate), (0.82, 0.71));
}

// 10. Synthetic corpus through extract, score and the report checks.
fn end_to_end() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    run_tae(
        &["synth", "--docs", "10", "--seed", "42", "--out", "syn"],
        cwd,
    );
    run_tae(
        &[
            "extract",
            "--generated",
            "syn/generated.jsonl",
            "--out",
            "panels.jsonl",
        ],
        cwd,
    );
    run_tae(
        &[
            "score",
            "--corpus",
            "syn/corpus.jsonl",
            "--generated",
            "panels.jsonl",
            "--metric",
            "rouge-l,bleu,meteor",
            "--out",
            "report.json",
        ],
        cwd,
    );
    let report = Report::load(&cwd.join("report.json")).unwrap();
    assert_eq!(report.rows.len(), 30);
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &report.rows {
        groups.entry(&r.metric).or_default().push(r.f1);
    }
    for agg in &report.aggregate {
        let f1s = &groups[agg.metric.as_str()];
        assert_eq!(f1s.len(), 10);
        let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
        assert!(
            (agg.f1 - mean).abs() <= 1e-12,
            "{}: {} vs {mean}",
            agg.metric,
            agg.f1
        );
    }
    within(
        started.elapsed(),
        Duration::from_secs(30),
        "end-to-end smoke",
    );
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        ("identity suite", identity),
        ("golden worked example", worked_example),
        ("brute-force oracle equivalence", brute_force),
        ("order sensitivity", order_sensitivity),
        ("length penalty closed form", length_closed_form),
        ("spearman exhaustive check", spearman_exhaustive),
        ("metric unit oracles", metric_oracles),
        ("pipeline determinism", pipeline_determinism),
        ("analysis oracles", analysis_oracles),
        ("end-to-end smoke", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        if outcome.is_err() {
            failed += 1;
        }
        println!(
            "criterion {:>2} {status}  {name} ({:.2?})",
            i + 1,
            started.elapsed()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
