use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error("{0}: no entries")]
    Empty(String),

    #[error("duplicate lexicon entry `{0}`")]
    DuplicateEntry(String),

    #[error("unknown dialect code `{0}`")]
    UnknownDialect(String),

    #[error("invalid lexicon entry `{surface}`: {reason}")]
    InvalidEntry { surface: String, reason: String },

    #[error("rule references unknown verb `{0}`")]
    UnknownVerb(String),

    #[error("rule for `{verb}` has no stem for subject {subject}")]
    MissingStem { verb: String, subject: String },

    #[error("invalid inflection rule for `{verb}`: {reason}")]
    InvalidRule { verb: String, reason: String },

    #[error("seed `{0}` must consist of word tokens only")]
    InvalidSeed(String),

    #[error("cannot build a matcher from an empty seed set")]
    EmptySeedSet,

    #[error("tweet has no seed match")]
    NoSeed,

    #[error("corpus line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("{0}")]
    InvalidSplit(String),

    #[error("corpus has no gold labels")]
    Unlabeled,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("kappa is undefined: {0}")]
    UndefinedKappa(String),

    #[error("training set contains a single class")]
    SingleClass,

    #[error("length mismatch: {predictions} predictions vs {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },

    #[error("annotator `{annotator_id}` already labeled tweet `{tweet_id}`")]
    DuplicateLabel { tweet_id: String, annotator_id: String },

    #[error("source error: {0}")]
    Source(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind, used for error JSON at process boundaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Empty(_) => "empty",
            Error::DuplicateEntry(_) => "duplicate_entry",
            Error::UnknownDialect(_) => "unknown_dialect",
            Error::InvalidEntry { .. } => "invalid_entry",
            Error::UnknownVerb(_) => "unknown_verb",
            Error::MissingStem { .. } => "missing_stem",
            Error::InvalidRule { .. } => "invalid_rule",
            Error::InvalidSeed(_) => "invalid_seed",
            Error::EmptySeedSet => "empty_seed_set",
            Error::NoSeed => "no_seed",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::InvalidSplit(_) => "invalid_split",
            Error::Unlabeled => "unlabeled",
            Error::EmptyInput(_) => "empty_input",
            Error::UndefinedKappa(_) => "undefined_kappa",
            Error::SingleClass => "single_class",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::DuplicateLabel { .. } => "duplicate_label",
            Error::Source(_) => "source",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
