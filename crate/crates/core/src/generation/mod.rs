//! Two-step generation of templatic views.
//!
//! Step one asks the model for an intermediate representation of the
//! document (title, authors, key sentences per section); step two turns
//! that, or the document itself, into a LaTeX view in the requested style.
//! The JSON template used in step one is a reconstruction:
//! `{title, authors[], sections: [{heading, sentences[]}]}`.

pub mod client;
pub mod ir;
pub mod pipeline;
pub mod prompts;

use thiserror::Error;

pub use client::{
    CompletionClient, CompletionEndpointConfig, CompletionError, CompletionRequest,
    HttpCompletionClient, StubCompletionClient,
};
pub use ir::{flatten_ir, parse_ir, serialize_ir, IntermediateRepresentation, IrSection, ParsedIr};
pub use pipeline::{
    generate_view, GeneratedView, GenerationConfig, RepresentationMode, Step, StepRecord,
    TEMPERATURE_SWEEP,
};
pub use prompts::{
    build_ir_prompt, build_view_prompt, ensure_latex_document, truncate_to_window, StyleParameter,
    TokenWindow,
};

#[derive(Debug, Clone, Error)]
pub enum GenerationError {
    #[error("{step} step failed: {source}")]
    Completion {
        step: pipeline::Step,
        #[source]
        source: CompletionError,
    },
    #[error("could not read the intermediate representation: {0}")]
    IrParse(String),
    #[error("invalid generation configuration: {0}")]
    Config(String),
    #[error("document is empty")]
    EmptyDocument,
}
