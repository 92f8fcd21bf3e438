//! Synthetic corpora with controllable lyricist and singer influence.
//!
//! Every lyricist and every singer owns a sparse "style": a unigram
//! distribution concentrated on a private random subset of the vocabulary.
//! Each token of a song is drawn from the mixture
//! `alpha * lyricist + beta * singer + (1 - alpha - beta) * background`,
//! where the background is a Zipf distribution over the whole vocabulary.
//!
//! Randomness: `ChaCha20Rng::seed_from_u64(seed)`; stream 0 draws the
//! styles, stream `1 + l` draws everything about lyricist `l`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SongRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SingerCount {
    Fixed { count: usize },
    Uniform { min: usize, max: usize },
    /// `P(m) ∝ m^-exponent` for `m` in `1..=max`.
    HeavyTailed { max: usize, exponent: f64 },
    /// Lyricist `l` gets `counts[l % counts.len()]` singers.
    Schedule { counts: Vec<usize> },
}

impl SingerCount {
    fn max(&self) -> usize {
        match self {
            SingerCount::Fixed { count } => *count,
            SingerCount::Uniform { max, .. } | SingerCount::HeavyTailed { max, .. } => *max,
            SingerCount::Schedule { counts } => counts.iter().copied().max().unwrap_or(0),
        }
    }

    fn min(&self) -> usize {
        match self {
            SingerCount::Fixed { count } => *count,
            SingerCount::Uniform { min, .. } => *min,
            SingerCount::HeavyTailed { .. } => 1,
            SingerCount::Schedule { counts } => counts.iter().copied().min().unwrap_or(0),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, lyricist: usize) -> usize {
        match self {
            SingerCount::Fixed { count } => *count,
            SingerCount::Uniform { min, max } => rng.gen_range(*min..=*max),
            SingerCount::HeavyTailed { max, exponent } => {
                let weights: Vec<f64> = (1..=*max).map(|m| (m as f64).powf(-exponent)).collect();
                1 + WeightedIndex::new(&weights).expect("positive weights").sample(rng)
            }
            SingerCount::Schedule { counts } => counts[lyricist % counts.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SingerPool {
    /// Lyricists draw their singers from `size` shared singers.
    Shared { size: usize },
    /// Every lyricist has singers of their own.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_lyricists: usize,
    /// Inclusive range.
    pub songs_per_lyricist: (usize, usize),
    pub singers_per_lyricist: SingerCount,
    pub singer_pool: SingerPool,
    pub vocab_size: usize,
    /// Inclusive range.
    pub tokens_per_song: (usize, usize),
    /// Number of vocabulary entries each style concentrates on.
    pub style_support: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return fail("alpha and beta must lie in [0, 1]");
        }
        if self.alpha + self.beta > 1.0 + 1e-12 {
            return fail("alpha + beta must not exceed 1");
        }
        if self.n_lyricists == 0 || self.vocab_size == 0 || self.style_support == 0 {
            return fail("n_lyricists, vocab_size and style_support must be positive");
        }
        if self.style_support > self.vocab_size {
            return fail("style_support cannot exceed vocab_size");
        }
        let (smin, smax) = self.songs_per_lyricist;
        let (tmin, tmax) = self.tokens_per_song;
        if smin == 0 || smin > smax || tmin == 0 || tmin > tmax {
            return fail("song and token ranges must be positive with min <= max");
        }
        if self.singers_per_lyricist.min() == 0 {
            return fail("every lyricist needs at least one singer");
        }
        if let SingerCount::HeavyTailed { exponent, .. } = self.singers_per_lyricist {
            if !exponent.is_finite() {
                return fail("heavy-tail exponent must be finite");
            }
        }
        if let SingerPool::Shared { size } = self.singer_pool {
            if size < self.singers_per_lyricist.max() {
                return fail("shared singer pool is smaller than the largest singer count");
            }
        }
        Ok(())
    }
}

struct Style {
    tokens: Vec<usize>,
    sampler: WeightedIndex<f64>,
}

impl Style {
    fn random<R: Rng>(rng: &mut R, vocab_size: usize, support: usize) -> Style {
        let tokens = rand::seq::index::sample(rng, vocab_size, support).into_vec();
        // Exponential(1) weights: a flat Dirichlet over the support.
        let weights: Vec<f64> = (0..support).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-9).collect();
        Style {
            tokens,
            sampler: WeightedIndex::new(&weights).expect("positive weights"),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        self.tokens[self.sampler.sample(rng)]
    }
}

fn token_name(t: usize) -> String {
    format!("w{t:04}")
}

/// Draws a corpus. Identical params give an identical corpus.
pub fn generate_corpus(params: &SynthParams) -> Result<Corpus> {
    params.validate()?;
    let p = params;

    let mut rng = ChaCha20Rng::seed_from_u64(p.seed);
    rng.set_stream(0);

    let lyricist_styles: Vec<Style> = (0..p.n_lyricists)
        .map(|_| Style::random(&mut rng, p.vocab_size, p.style_support))
        .collect();
    let n_singers = match p.singer_pool {
        SingerPool::Shared { size } => size,
        // Upper bound; styles of unused ids are never read.
        SingerPool::Disjoint => p.n_lyricists * p.singers_per_lyricist.max(),
    };
    let singer_styles: Vec<Style> = (0..n_singers)
        .map(|_| Style::random(&mut rng, p.vocab_size, p.style_support))
        .collect();
    let zipf: Vec<f64> = (1..=p.vocab_size).map(|r| 1.0 / r as f64).collect();
    let background = WeightedIndex::new(&zipf).expect("positive weights");

    let per_lyricist: Vec<Vec<SongRecord>> = (0..p.n_lyricists)
        .into_par_iter()
        .map(|l| {
            let mut rng = ChaCha20Rng::seed_from_u64(p.seed);
            rng.set_stream(1 + l as u64);

            let m = p.singers_per_lyricist.draw(&mut rng, l);
            let singers: Vec<usize> = match p.singer_pool {
                SingerPool::Shared { size } => rand::seq::index::sample(&mut rng, size, m).into_vec(),
                SingerPool::Disjoint => (0..m).map(|k| l * p.singers_per_lyricist.max() + k).collect(),
            };
            let n_songs = rng.gen_range(p.songs_per_lyricist.0..=p.songs_per_lyricist.1);
            let lyricist_id = format!("L{l:04}");

            (0..n_songs)
                .map(|k| {
                    // Cover every singer once before drawing uniformly.
                    let singer = if k < m { singers[k] } else { singers[rng.gen_range(0..m)] };
                    let n_tokens = rng.gen_range(p.tokens_per_song.0..=p.tokens_per_song.1);
                    let tokens: Vec<String> = (0..n_tokens)
                        .map(|_| {
                            let u: f64 = rng.gen();
                            let t = if u < p.alpha {
                                lyricist_styles[l].draw(&mut rng)
                            } else if u < p.alpha + p.beta {
                                singer_styles[singer].draw(&mut rng)
                            } else {
                                background.sample(&mut rng)
                            };
                            token_name(t)
                        })
                        .collect();
                    SongRecord {
                        song_id: format!("{lyricist_id}-{k:03}"),
                        lyricist_id: lyricist_id.clone(),
                        singer_id: format!("S{singer:04}"),
                        lyricist_name: Some(format!("Lyricist {l:04}")),
                        singer_name: None,
                        lyrics: tokens.join(" "),
                    }
                })
                .collect()
        })
        .collect();

    Corpus::from_songs(per_lyricist.into_iter().flatten().collect())
}

/// Fixed recipe: 100 lyricists, 20 of them with a single singer and the rest
/// spread from 2 to 16 singers, so entropies run from 0 to about ln 16.
pub fn hypothesis_params(seed: u64, alpha: f64, beta: f64) -> SynthParams {
    let mut counts = vec![1; 20];
    counts.extend((0..80).map(|i| 2 + i * 14 / 79));
    SynthParams {
        n_lyricists: 100,
        songs_per_lyricist: (40, 40),
        singers_per_lyricist: SingerCount::Schedule { counts },
        singer_pool: SingerPool::Shared { size: 600 },
        vocab_size: 4000,
        tokens_per_song: (40, 60),
        style_support: 60,
        alpha,
        beta,
        seed,
    }
}

pub const HYPOTHESIS_ALPHA: f64 = 0.3;
pub const HYPOTHESIS_BETA: f64 = 0.6;

/// Corpus in the regime where singer style dominates lyricist style.
pub fn generate_hypothesis_corpus(seed: u64) -> Corpus {
    generate_corpus(&hypothesis_params(seed, HYPOTHESIS_ALPHA, HYPOTHESIS_BETA))
        .expect("fixed recipe is valid")
}
