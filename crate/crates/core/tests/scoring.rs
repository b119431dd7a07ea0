use std::sync::Arc;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use tae::similarity::embedding::StubProvider;
use tae::{
    corpus_score, make_sequence, tae_score, MetricId, PanelSequence, Role, Scorer, TaeError,
    TemplateKind, TokenizerConfig,
};

fn seq<S: AsRef<str>>(texts: &[S], role: Role) -> PanelSequence {
    make_sequence(
        texts.iter().map(|s| s.as_ref().to_string()),
        role,
        TemplateKind::Slides,
        &TokenizerConfig::default(),
    )
}

fn scorers() -> Vec<Scorer> {
    let mut out: Vec<Scorer> = [MetricId::RougeL, MetricId::Bleu, MetricId::Meteor]
        .into_iter()
        .map(|m| Scorer::new(m).unwrap())
        .collect();
    for m in [MetricId::EmbeddingCosine, MetricId::TokenGreedyEmbedding] {
        out.push(Scorer::with_provider(
            m,
            Arc::new(StubProvider::new("stub", 16)),
        ));
    }
    out
}

#[test]
fn empty_reference_is_an_error_and_empty_generation_scores_zero() {
    let r = seq(&["a b c"], Role::Reference);
    let empty = seq::<&str>(&[], Role::Generated);
    for scorer in scorers() {
        let s = tae_score(&r, &empty, &scorer).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let err = tae_score(&seq::<&str>(&[], Role::Reference), &r, &scorer).unwrap_err();
        assert!(matches!(err, TaeError::EmptyReference));
    }
}

#[test]
fn identity_is_perfect_up_to_self_similarity() {
    let panels = [
        "introduction to layered evaluation of views",
        "method aligns panels by maximum similarity",
        "results show order matters for readers",
    ];
    for scorer in scorers() {
        let (r, g) = (seq(&panels, Role::Reference), seq(&panels, Role::Generated));
        let s = tae_score(&r, &g, &scorer).unwrap();
        assert_eq!((s.o_p, s.o_r, s.l), (1.0, 1.0, 1.0), "{}", scorer.metric());
        // METEOR's fragmentation penalty keeps self-similarity just below 1.
        let self_sim = r
            .panels()
            .iter()
            .zip(g.panels())
            .map(|(a, b)| scorer.similarity(a, b).unwrap().value())
            .sum::<f64>()
            / panels.len() as f64;
        assert_abs_diff_eq!(s.f1, self_sim, epsilon = 1e-12);
        if scorer.metric() != MetricId::Meteor {
            assert_abs_diff_eq!(s.f1, 1.0, epsilon = 1e-9);
        }
    }
}

#[test]
fn shuffled_view_scores_below_the_ordered_one() {
    let panels: Vec<String> = (0..5)
        .map(|i| format!("alpha{i} beta{i} gamma{i} delta{i}"))
        .collect();
    let mut shuffled = panels.clone();
    shuffled.swap(0, 4);
    shuffled.swap(1, 3);
    let scorer = Scorer::new(MetricId::RougeL).unwrap();
    let r = seq(&panels, Role::Reference);
    let ordered = tae_score(&r, &seq(&panels, Role::Generated), &scorer).unwrap();
    let mixed = tae_score(&r, &seq(&shuffled, Role::Generated), &scorer).unwrap();
    assert_eq!(mixed.q_p, ordered.q_p);
    assert!(mixed.o_p < ordered.o_p);
    assert!(mixed.f1 < ordered.f1);
}

#[test]
fn corpus_aggregate_is_the_mean_of_documents() {
    let scorer = Scorer::new(MetricId::Meteor).unwrap();
    let pairs: Vec<(PanelSequence, PanelSequence)> = (0..6)
        .map(|d| {
            let r: Vec<String> = (0..3)
                .map(|i| format!("doc{d} part{i} words here"))
                .collect();
            let g: Vec<String> = (0..(d % 3 + 1))
                .map(|i| format!("doc{d} part{i} other words"))
                .collect();
            (seq(&r, Role::Reference), seq(&g, Role::Generated))
        })
        .collect();
    let c = corpus_score(&pairs, &scorer).unwrap();
    assert_eq!(c.documents.len(), 6);
    for (doc, (r, g)) in c.documents.iter().zip(&pairs) {
        assert_eq!(*doc, tae_score(r, g, &scorer).unwrap());
    }
    let mean = c.documents.iter().map(|d| d.f1).sum::<f64>() / 6.0;
    assert_abs_diff_eq!(c.aggregate.f1, mean, epsilon = 1e-12);
    assert!(matches!(
        corpus_score(&[], &scorer),
        Err(TaeError::EmptyCorpus)
    ));
}

fn panel_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::collection::vec(0u8..8, 1..6), 1..6).prop_map(|ps| {
        ps.into_iter()
            .map(|p| {
                p.iter()
                    .map(|t| format!("t{t}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn components_stay_in_range(r in panel_strategy(), g in panel_strategy()) {
        for scorer in scorers() {
            let s = tae_score(&seq(&r, Role::Reference), &seq(&g, Role::Generated), &scorer).unwrap();
            for v in [s.q_p, s.q_r, s.o_p, s.o_r, s.l, s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v), "{} out of range: {:?}", scorer.metric(), s);
            }
            prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
            prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-12);
        }
    }

    #[test]
    fn length_penalty_is_shared_and_symmetric_in_counts(r in panel_strategy(), g in panel_strategy()) {
        let scorer = Scorer::new(MetricId::RougeL).unwrap();
        let s = tae_score(&seq(&r, Role::Reference), &seq(&g, Role::Generated), &scorer).unwrap();
        let want = (-((r.len() as f64 - g.len() as f64).abs()) / r.len() as f64).exp();
        prop_assert_eq!(s.l, want);
        prop_assert_eq!((s.reference_panels, s.generated_panels), (r.len(), g.len()));
    }
}
