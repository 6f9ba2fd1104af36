//! Capturing a caller's name from say-and-spell speech recognition output.
//!
//! A caller says their name and spells it; the recognizer returns an n-best
//! list of word/confidence hypotheses. This crate provides:
//!
//! - [`baseline`]: a rule-based extractor that reads the spelled letters,
//! - [`seq2seq`]: a transformer transducer from BPE tokens to characters,
//! - [`tokenizer`]: the BPE source tokenizer and character target codec,
//! - [`datagen`]: a synthetic n-best generator with a configurable noise model,
//! - [`evalharness`]: exact-match error, WER and error/rejection curves.

pub mod baseline;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod evalharness;
pub mod hypothesis;
pub mod seq2seq;
pub mod tokenizer;

pub use error::{Error, Result};
pub use hypothesis::{AsrHypothesis, AsrToken, LabeledSample, Prediction, Source};
