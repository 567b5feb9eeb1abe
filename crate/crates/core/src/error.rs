use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by sentigraph.
#[derive(Debug, Error)]
pub enum Error {
    #[error("character range {begin}:{end} does not overlap any token of sentence '{sent_id}'")]
    Alignment { sent_id: String, begin: usize, end: usize },

    #[error("unknown polarity '{0}'")]
    UnknownPolarity(String),

    #[error("invalid span: {0}")]
    InvalidSpan(String),

    #[error("invalid sentence '{sent_id}': {reason}")]
    InvalidSentence { sent_id: String, reason: String },

    #[error("invalid arc {head}->{dep}: {reason}")]
    InvalidArc { head: usize, dep: usize, reason: String },

    #[error("unknown arc label '{0}'")]
    UnknownLabel(String),

    #[error("invalid encoding scheme: {0}")]
    InvalidScheme(String),

    #[error("scheme requires a syntactic tree for sentence '{0}'")]
    MissingSyntax(String),

    #[error("syntactic tree for '{sent_id}' has {tree} tokens, sentence has {sentence}")]
    SyntaxLength {
        sent_id: String,
        tree: usize,
        sentence: usize,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no contextual vectors for sentence '{0}'")]
    MissingContext(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("corpora are misaligned: {0}")]
    MisalignedCorpora(String),

    #[error("graph length mismatch for sentence {index}: gold has {gold} tokens, prediction has {pred}")]
    LengthMismatch { index: usize, gold: usize, pred: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("sentence without a sent_id comment ending at {}:{line}", path.display())]
    MissingSentId { path: PathBuf, line: usize },

    #[error("inconsistent dimensionality: expected {expected}, found {found}")]
    InconsistentDim { expected: usize, found: usize },

    #[error("embedding table is empty")]
    EmptyTable,

    #[error("unknown metric '{0}'")]
    UnknownMetric(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
