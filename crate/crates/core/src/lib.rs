//! Toolkit for collecting, annotating and classifying dangerous (threatening)
//! speech in Arabic social-media text.
//!
//! The pipeline runs from a multi-dialect threat-verb lexicon, through seed
//! phrase generation and token-level seed matching, to a guideline rule
//! engine, annotator agreement, corpus statistics and a feature-based
//! classifier with its evaluation protocol.

pub mod agreement;
pub mod collector;
pub mod corpus;
pub mod error;
pub mod heuristics;
pub mod label;
pub mod lexicon;
pub mod model;
pub mod resources;
pub mod seedgen;
pub mod synth;
pub mod textproc;

pub use error::{Error, Result};
pub use label::Label;
