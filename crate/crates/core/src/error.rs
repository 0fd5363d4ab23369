use std::path::PathBuf;

use thiserror::Error;

use crate::brat::BratError;
use crate::tagcodec::CodecError;
use crate::textproc::AlignError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("document {0} has not been segmented")]
    Unsegmented(String),

    #[error("duplicate document id {0}")]
    DuplicateDocId(String),

    #[error("document {doc_id}: annotation {id} has surface {expected:?} but the text slice is {found:?}")]
    SurfaceMismatch {
        doc_id: String,
        id: String,
        expected: String,
        found: String,
    },

    #[error("document {doc_id}: annotation {id} span [{start}, {end}) is invalid for text of length {len}")]
    SpanOutOfBounds {
        doc_id: String,
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("document {doc_id}: duplicate annotation id {id}")]
    DuplicateAnnotationId { doc_id: String, id: String },

    #[error("document {doc_id}: {source}")]
    Brat {
        doc_id: String,
        #[source]
        source: BratError,
    },

    #[error(transparent)]
    Align(#[from] AlignError),

    #[error(transparent)]
    Codec(#[from] CodecError),

    #[error("length mismatch: {tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },

    #[error("no model for layer {0}")]
    MissingModel(String),

    #[error("degenerate labels: training data needs at least one positive and one negative example")]
    DegenerateLabels,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsatisfiable synthetic spec: {0}")]
    Unsatisfiable(String),

    #[error("document id sets differ: only in gold {}, only in predicted {}", preview(only_gold), preview(only_pred))]
    DocIdMismatch {
        only_gold: Vec<String>,
        only_pred: Vec<String>,
    },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("tagged TSV line {line}: {message}")]
    Tsv { line: usize, message: String },
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 5;
    let mut out = format!("{:?}", &ids[..ids.len().min(SHOWN)]);
    if ids.len() > SHOWN {
        out.push_str(&format!(" and {} more", ids.len() - SHOWN));
    }
    out
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
