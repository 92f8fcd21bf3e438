//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use lyricist_entropy::corpus::{Corpus, SongRecord};
use lyricist_entropy::grouping::GroupingMethod;
use lyricist_entropy::sampling::{CandidateSplit, ExperimentDataset, Provenance, SamplingMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn song(id: &str, lyricist: &str, singer: &str, lyrics: &str) -> SongRecord {
    SongRecord {
        song_id: id.into(),
        lyricist_id: lyricist.into(),
        singer_id: singer.into(),
        lyricist_name: None,
        singer_name: None,
        lyrics: lyrics.into(),
    }
}

/// Ten lyricists with ten songs each, split 6/2/2 in song order. Each song
/// is `words` tokens drawn uniformly from a shared `vocab`-word background;
/// with `markers`, every song of lyricist `l` also carries `mark{l}`.
pub fn toy_dataset(seed: u64, markers: bool, words: usize, vocab: usize) -> (Corpus, ExperimentDataset) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut songs = Vec::new();
    let mut candidates = Vec::new();
    for l in 0..10 {
        let lyricist = format!("L{l:02}");
        let mut ids = Vec::new();
        for k in 0..10 {
            let id = format!("{lyricist}-{k:02}");
            let mut words: Vec<String> = (0..words).map(|_| format!("bg{}", rng.gen_range(0..vocab))).collect();
            if markers {
                words.push(format!("mark{l}"));
                words.shuffle(&mut rng);
            }
            songs.push(song(&id, &lyricist, &format!("S{l:02}"), &words.join(" ")));
            ids.push(id);
        }
        candidates.push(CandidateSplit {
            lyricist_id: lyricist,
            group: 0,
            train: ids[..6].to_vec(),
            validation: ids[6..8].to_vec(),
            test: ids[8..].to_vec(),
        });
    }
    let dataset = ExperimentDataset {
        dataset_id: format!("toy-{seed}"),
        candidates,
        provenance: Provenance {
            grouping_method: GroupingMethod::Quantile,
            sampling_mode: SamplingMode::Homogenous,
            source_groups: vec![0],
            seed,
        },
    };
    (Corpus::from_songs(songs).unwrap(), dataset)
}

/// Marker plus 20 filler words from a 10-word shared vocabulary.
pub fn marker_dataset(seed: u64) -> (Corpus, ExperimentDataset) {
    toy_dataset(seed, true, 20, 10)
}

/// 20 words from a 150-word vocabulary, independent of the lyricist.
pub fn noise_dataset(seed: u64) -> (Corpus, ExperimentDataset) {
    toy_dataset(seed, false, 20, 150)
}

/// `n_zero` single-singer lyricists plus `n_nonzero` lyricists whose songs
/// spread over two or more singers.
pub fn entropy_spread_corpus(n_zero: usize, n_nonzero: usize) -> Corpus {
    let mut songs = Vec::new();
    for l in 0..n_zero {
        let lyricist = format!("Z{l:04}");
        for k in 0..10 {
            songs.push(song(&format!("{lyricist}-{k}"), &lyricist, "S-solo", "la"));
        }
    }
    for l in 0..n_nonzero {
        let lyricist = format!("N{l:04}");
        let singers = 2 + l % 9;
        let n_songs = 10 + l % 7;
        for k in 0..n_songs {
            let singer = format!("S{}", k % singers);
            songs.push(song(&format!("{lyricist}-{k}"), &lyricist, &singer, "la"));
        }
    }
    Corpus::from_songs(songs).unwrap()
}

/// Minimum within-cluster sum of squares over all partitions of the sorted
/// points into `k` non-empty contiguous runs.
pub fn exhaustive_contiguous(xs: &[f64], k: usize) -> f64 {
    fn ss(run: &[f64]) -> f64 {
        let m = run.iter().sum::<f64>() / run.len() as f64;
        run.iter().map(|x| (x - m) * (x - m)).sum()
    }
    fn go(xs: &[f64], k: usize) -> f64 {
        if k == 1 {
            return ss(xs);
        }
        (1..=xs.len() - (k - 1))
            .map(|cut| ss(&xs[..cut]) + go(&xs[cut..], k - 1))
            .fold(f64::INFINITY, f64::min)
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    go(&sorted, k)
}
