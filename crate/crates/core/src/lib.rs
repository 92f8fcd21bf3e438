//! Lyricist-singer entropy and lyric-lyricist classification experiments.
//!
//! The pipeline runs corpus ingestion and filtering, per-lyricist entropy
//! over singers, grouping of lyricists by entropy, dataset sampling,
//! classifier training, scoring, and the correlation between group entropy
//! and classification performance. [`synthesis`] generates corpora with a
//! known amount of singer influence for end-to-end checks.

pub mod classifier;
pub mod corpus;
pub mod entropy;
pub mod error;
pub mod evaluation;
pub mod grouping;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod synthesis;

pub use error::{Error, Result};
