//! Seeded synthetic corpora.
//!
//! Each document is a plain-text paper with a title and a few sections.
//! Its reference slides hold each section's heading and first sentences.
//! Two generated slide decks are rendered as beamer LaTeX: a close one
//! ("with") and a noisier one ("skip") that drops, shuffles and corrupts
//! more. Simulated annotators mostly prefer the close deck.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tae::analysis::{Preference, PreferenceAnnotation};
use tae::extract::corpus::{CorpusRecord, GeneratedRecord};
use tae::TemplateKind;

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ren", "sa", "tor", "vel", "zu", "dan", "fi", "gro", "hal", "ne", "pra",
    "qui", "sto", "tu", "ver", "wen", "yo",
];

#[derive(Debug, Clone)]
pub struct SynthSection {
    pub heading: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthDocument {
    pub id: String,
    pub title: String,
    pub sections: Vec<SynthSection>,
}

impl SynthDocument {
    pub fn input_text(&self) -> String {
        let mut out = self.title.clone();
        for s in &self.sections {
            out.push_str("\n\n");
            out.push_str(&s.heading);
            out.push('\n');
            out.push_str(&s.sentences.join(" "));
        }
        out
    }

    /// One reference slide per section.
    pub fn reference_panels(&self) -> Vec<String> {
        self.sections
            .iter()
            .map(|s| {
                let body: Vec<&str> = s.sentences.iter().take(2).map(String::as_str).collect();
                format!("{} {}", s.heading, body.join(" "))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub seed: u64,
    pub documents: Vec<SynthDocument>,
    pub with_rep: Vec<GeneratedRecord>,
    pub skip_rep: Vec<GeneratedRecord>,
    pub annotations: Vec<PreferenceAnnotation>,
}

impl SynthCorpus {
    pub fn corpus_records(&self) -> Vec<CorpusRecord> {
        self.documents
            .iter()
            .map(|d| CorpusRecord {
                id: d.id.clone(),
                template: TemplateKind::Slides,
                input_text: Some(d.input_text()),
                reference_panels: d.reference_panels(),
            })
            .collect()
    }
}

struct Noise {
    drop: f64,
    swap: f64,
    corrupt: f64,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(6..=12);
    let words: Vec<String> = (0..n).map(|_| word(rng)).collect();
    let mut s = words.join(" ");
    s.push('.');
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => s,
    }
}

fn document(rng: &mut ChaCha8Rng, id: String) -> SynthDocument {
    let title = (0..4).map(|_| word(rng)).collect::<Vec<_>>().join(" ");
    let sections = (0..rng.gen_range(3..=6))
        .map(|_| SynthSection {
            heading: (0..rng.gen_range(2..=3))
                .map(|_| word(rng))
                .collect::<Vec<_>>()
                .join(" "),
            sentences: (0..rng.gen_range(2..=4)).map(|_| sentence(rng)).collect(),
        })
        .collect();
    SynthDocument {
        id,
        title,
        sections,
    }
}

fn render_deck(rng: &mut ChaCha8Rng, doc: &SynthDocument, noise: &Noise) -> String {
    let mut frames: Vec<(String, Vec<String>)> = Vec::new();
    for (i, s) in doc.sections.iter().enumerate() {
        if i > 0 && rng.gen_bool(noise.drop) {
            continue;
        }
        let bullets = s
            .sentences
            .iter()
            .take(2)
            .map(|line| {
                line.split_whitespace()
                    .map(|w| {
                        if rng.gen_bool(noise.corrupt) {
                            word(rng)
                        } else {
                            w.to_string()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        frames.push((s.heading.clone(), bullets));
    }
    for i in 1..frames.len() {
        if rng.gen_bool(noise.swap) {
            frames.swap(i - 1, i);
        }
    }
    let mut out = format!(
        "\\documentclass{{beamer}}\n\\title{{{}}}\n\\begin{{document}}\n",
        doc.title
    );
    for (heading, bullets) in frames {
        out.push_str(&format!(
            "\\begin{{frame}}{{{heading}}}\n\\begin{{itemize}}\n"
        ));
        for b in bullets {
            out.push_str(&format!("\\item {b}\n"));
        }
        out.push_str("\\end{itemize}\n\\end{frame}\n");
    }
    out.push_str("\\end{document}\n");
    out
}

/// Build `docs` documents with `annotators` simulated judges each.
pub fn synth_corpus(docs: usize, annotators: usize, seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let close = Noise {
        drop: 0.05,
        swap: 0.1,
        corrupt: 0.05,
    };
    let noisy = Noise {
        drop: 0.3,
        swap: 0.4,
        corrupt: 0.3,
    };
    let mut documents = Vec::with_capacity(docs);
    let mut with_rep = Vec::with_capacity(docs);
    let mut skip_rep = Vec::with_capacity(docs);
    let mut annotations = Vec::new();
    for i in 0..docs {
        let doc = document(&mut rng, format!("doc-{i:03}"));
        let record = |variant: &str, text: String| GeneratedRecord {
            id: doc.id.clone(),
            template: Some(TemplateKind::Slides),
            variant: Some(variant.into()),
            text: Some(text),
            panels: None,
            intermediate: None,
        };
        with_rep.push(record("with", render_deck(&mut rng, &doc, &close)));
        skip_rep.push(record("skip", render_deck(&mut rng, &doc, &noisy)));
        for a in 0..annotators {
            let preferred = if rng.gen_bool(0.75) {
                Preference::WithRep
            } else {
                Preference::SkipRep
            };
            annotations.push(PreferenceAnnotation {
                doc_id: doc.id.clone(),
                annotator_id: format!("annotator-{a}"),
                preferred,
                degree: rng.gen_range(1..=3),
            });
        }
        documents.push(doc);
    }
    SynthCorpus {
        seed,
        documents,
        with_rep,
        skip_rep,
        annotations,
    }
}
