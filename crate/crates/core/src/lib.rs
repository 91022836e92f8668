//! Controllable lyrics generation: corpus processing, an n-gram language
//! model over grapheme tokens, constrained decoding, candidate re-ranking,
//! theme keyword mining and a versioned draft store.

pub mod bundle;
pub mod classify;
pub mod corpus;
pub mod decode;
pub mod error;
pub mod lm;
pub mod lyrics;
pub mod oracle;
pub mod pipeline;
pub mod pmi;
pub mod rank;
pub mod rhyme;
pub mod segment;
pub mod store;
pub mod tokens;

pub use bundle::{ingest, train_bundle, TrainConfig, TrainResources, TrainedBundle};
pub use decode::{ControlSpec, SamplingParams, WordsPerLine};
pub use error::{Error, Result};
pub use lyrics::LyricsText;
pub use pipeline::{Engine, GenerationOptions, RevisionRequest, Span};
