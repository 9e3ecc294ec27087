//! Screenplay age-rating analysis.
//!
//! The pipeline decodes a script ([`ingest`]), splits it into scenes
//! ([`segmenter`]), rates each scene against a lexicon and optionally a
//! language model ([`lexicon`], [`analyzer`]), and folds the verdicts into
//! a document report ([`aggregator`]). [`evalkit`] holds the metrics used to
//! score segmentation and ratings against annotations.

pub mod aggregator;
pub mod analyzer;
pub mod error;
pub mod evalkit;
pub mod ingest;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod segmenter;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{Category, Confidence, Rating, Severity, VerdictSource};
