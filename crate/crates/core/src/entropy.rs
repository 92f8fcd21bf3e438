//! Lyricist-singer entropy.
//!
//! For a lyricist `i`, the entropy is the Shannon entropy of the empirical
//! distribution of `i`'s songs over singers (plug-in estimator, no bias
//! correction). Zero means the lyricist wrote for exactly one singer.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn ln_base(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::Ten => std::f64::consts::LN_10,
        }
    }

    pub fn log(self, x: f64) -> f64 {
        x.ln() / self.ln_base()
    }
}

impl FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "ln" | "natural" | "nats" => Ok(LogBase::Natural),
            "2" | "bits" => Ok(LogBase::Two),
            "10" => Ok(LogBase::Ten),
            other => Err(format!("unsupported log base {other:?} (use natural, 2 or 10)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyricistStats {
    pub lyricist_id: String,
    pub song_count: usize,
    pub singer_counts: BTreeMap<String, usize>,
    pub entropy: f64,
}

impl LyricistStats {
    pub fn n_singers(&self) -> usize {
        self.singer_counts.len()
    }
}

/// Songs per singer for one lyricist. Only singers with a song appear.
pub fn singer_distribution(corpus: &Corpus, lyricist_id: &str) -> Result<BTreeMap<String, usize>> {
    let songs = corpus
        .songs_by_lyricist(lyricist_id)
        .ok_or_else(|| Error::UnknownLyricist(lyricist_id.to_string()))?;
    let mut dist = BTreeMap::new();
    for id in songs {
        let song = corpus.song(id).expect("index refers to known songs");
        *dist.entry(song.singer_id.clone()).or_insert(0) += 1;
    }
    Ok(dist)
}

/// Entropy of a singer distribution, summed in ascending singer order.
pub fn lyricist_singer_entropy(distribution: &BTreeMap<String, usize>, base: LogBase) -> Result<f64> {
    entropy_of_counts(distribution.values().copied(), base)
}

/// Plug-in Shannon entropy of a list of positive counts, with Kahan
/// summation so the result does not depend on accumulation drift.
/// Zero counts are skipped.
pub fn entropy_of_counts<I>(counts: I, base: LogBase) -> Result<f64>
where
    I: IntoIterator<Item = usize>,
    I::IntoIter: Clone,
{
    let counts = counts.into_iter();
    let total: usize = counts.clone().sum();
    if total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let total = total as f64;

    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for c in counts.filter(|&c| c > 0) {
        let p = c as f64 / total;
        let term = -p * p.ln() - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }

    // A single singer gives -(1 * ln 1) = -0.0; report a clean zero.
    if sum <= 0.0 {
        return Ok(0.0);
    }
    Ok(sum / base.ln_base())
}

/// Per-lyricist statistics for every lyricist in the corpus, in ascending
/// lyricist id order.
pub fn compute_stats(corpus: &Corpus, base: LogBase) -> Vec<LyricistStats> {
    let ids: Vec<&str> = corpus.lyricists().collect();
    ids.par_iter()
        .map(|&id| {
            let singer_counts = singer_distribution(corpus, id).expect("id comes from the corpus");
            let entropy = lyricist_singer_entropy(&singer_counts, base)
                .expect("a lyricist in the index has at least one song");
            LyricistStats {
                lyricist_id: id.to_string(),
                song_count: corpus.lyricist_song_count(id),
                singer_counts,
                entropy,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

/// Histogram over half-open bins `[k*w, (k+1)*w)` starting at zero. Empty bins
/// between occupied ones are kept.
pub fn entropy_histogram(stats: &[LyricistStats], bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let bin_of = |h: f64| (h / bin_width).floor().max(0.0) as usize;
    let Some(last) = stats.iter().map(|s| bin_of(s.entropy)).max() else {
        return Ok(Vec::new());
    };

    let mut counts = vec![0usize; last + 1];
    for s in stats {
        counts[bin_of(s.entropy)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lower: k as f64 * bin_width,
            count,
        })
        .collect())
}
