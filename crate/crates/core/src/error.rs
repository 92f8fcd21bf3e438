use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate song_id {0:?}")]
    DuplicateId(String),

    #[error("song {0:?} has empty lyrics")]
    EmptyLyrics(String),

    #[error("unknown lyricist {0:?}")]
    UnknownLyricist(String),

    #[error("unknown song {0:?}")]
    UnknownSong(String),

    #[error("entropy of an empty distribution is undefined")]
    EmptyDistribution,

    #[error("need at least {needed} lyricists with nonzero entropy, found {found}")]
    TooFewLyricists { needed: usize, found: usize },

    #[error("k-means did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        /// Group index (1..=4) of each nonzero-entropy lyricist, in sorted order.
        last_assignment: Vec<usize>,
    },

    #[error("group {group} has {size} eligible lyricists, need {needed}")]
    GroupTooSmall {
        group: usize,
        size: usize,
        needed: usize,
    },

    #[error("no features survive vectorization: empty vocabulary")]
    DegenerateFeatures,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("lyricist {0:?} has no group assignment")]
    MissingGroup(String),

    #[error("correlation undefined: {0}")]
    Correlation(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("plug-in error: {0}")]
    Plugin(#[from] crate::classifier::plugin::PluginError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the external classifier process.
    pub fn is_plugin(&self) -> bool {
        matches!(self, Error::Plugin(_))
    }
}
