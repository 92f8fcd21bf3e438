//! Experiment dataset construction.
//!
//! Every dataset holds 10 candidate lyricists with 10 songs each, split
//! 6 train / 2 validation / 2 test per lyricist. Draws use ChaCha20
//! (`rand_chacha::ChaCha20Rng::seed_from_u64`) and a partial Fisher-Yates
//! shuffle driven by `Rng::gen_range`, so a dataset is a pure function of
//! the corpus, the grouping and its seed. Repetition `r` of a plan uses
//! seed `base_seed + r`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouping::{Grouping, GroupingMethod, N_GROUPS};

pub const N_CANDIDATES: usize = 10;
pub const SONGS_PER_LYRICIST: usize = 10;
pub const N_TRAIN: usize = 6;
pub const N_VALIDATION: usize = 2;
pub const N_TEST: usize = 2;
pub const PER_GROUP_HETEROGENOUS: usize = 2;
pub const DEFAULT_HOMOGENOUS_REPETITIONS: usize = 10;
pub const DEFAULT_HETEROGENOUS_REPETITIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Homogenous,
    Heterogenous,
}

impl SamplingMode {
    pub fn default_repetitions(self) -> usize {
        match self {
            SamplingMode::Homogenous => DEFAULT_HOMOGENOUS_REPETITIONS,
            SamplingMode::Heterogenous => DEFAULT_HETEROGENOUS_REPETITIONS,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            SamplingMode::Homogenous => "hom",
            SamplingMode::Heterogenous => "het",
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Homogenous => "homogenous",
            SamplingMode::Heterogenous => "heterogenous",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "homogenous" | "homogeneous" | "hom" => Ok(SamplingMode::Homogenous),
            "heterogenous" | "heterogeneous" | "het" => Ok(SamplingMode::Heterogenous),
            other => Err(format!("unknown sampling mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSplit {
    pub lyricist_id: String,
    /// Entropy group the lyricist was drawn from.
    pub group: usize,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub grouping_method: GroupingMethod,
    pub sampling_mode: SamplingMode,
    pub source_groups: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentDataset {
    pub dataset_id: String,
    /// Position in this list is the class index of the lyricist.
    pub candidates: Vec<CandidateSplit>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl ExperimentDataset {
    pub fn candidate_ids(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.lyricist_id.as_str()).collect()
    }

    /// `(song_id, class index)` pairs of one split, in candidate order.
    pub fn labelled(&self, split: Split) -> Vec<(&str, usize)> {
        self.candidates
            .iter()
            .enumerate()
            .flat_map(|(label, c)| {
                let ids = match split {
                    Split::Train => &c.train,
                    Split::Validation => &c.validation,
                    Split::Test => &c.test,
                };
                ids.iter().map(move |id| (id.as_str(), label))
            })
            .collect()
    }

    /// Checks sizes, disjointness and song ownership against `corpus`.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDataset(format!("{}: {msg}", self.dataset_id)));
        if self.candidates.len() != N_CANDIDATES {
            return bad(format!("{} candidates, expected {N_CANDIDATES}", self.candidates.len()));
        }
        let mut seen_lyricists = std::collections::HashSet::new();
        let mut seen_songs = std::collections::HashSet::new();
        for c in &self.candidates {
            if !seen_lyricists.insert(&c.lyricist_id) {
                return bad(format!("lyricist {:?} appears twice", c.lyricist_id));
            }
            if (c.train.len(), c.validation.len(), c.test.len()) != (N_TRAIN, N_VALIDATION, N_TEST) {
                return bad(format!("lyricist {:?} does not have a 6/2/2 split", c.lyricist_id));
            }
            for id in c.train.iter().chain(&c.validation).chain(&c.test) {
                if !seen_songs.insert(id) {
                    return bad(format!("song {id:?} appears twice"));
                }
                let song = corpus.song(id).ok_or_else(|| Error::UnknownSong(id.clone()))?;
                if song.lyricist_id != c.lyricist_id {
                    return bad(format!("song {id:?} is not by {:?}", c.lyricist_id));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset serializes");
        s.push('\n');
        s
    }
}

/// First `k` entries of a uniformly random permutation of `0..n`.
fn draw_indices<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Lyricists of `group` with enough songs to fill a split.
fn eligible<'a>(corpus: &Corpus, grouping: &'a Grouping, group: usize) -> Vec<&'a str> {
    grouping.groups[group]
        .iter()
        .map(String::as_str)
        .filter(|id| corpus.lyricist_song_count(id) >= SONGS_PER_LYRICIST)
        .collect()
}

fn draw_lyricists<R: Rng>(
    rng: &mut R,
    corpus: &Corpus,
    grouping: &Grouping,
    group: usize,
    count: usize,
) -> Result<Vec<String>> {
    let pool = eligible(corpus, grouping, group);
    if pool.len() < count {
        return Err(Error::GroupTooSmall {
            group,
            size: pool.len(),
            needed: count,
        });
    }
    Ok(draw_indices(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].to_string())
        .collect())
}

fn draw_split<R: Rng>(rng: &mut R, corpus: &Corpus, lyricist_id: &str, group: usize) -> CandidateSplit {
    let songs: Vec<&String> = corpus
        .songs_by_lyricist(lyricist_id)
        .expect("eligible lyricist is in the corpus")
        .iter()
        .collect();
    let picked: Vec<String> = draw_indices(rng, songs.len(), SONGS_PER_LYRICIST)
        .into_iter()
        .map(|i| songs[i].clone())
        .collect();
    let sorted = |ids: &[String]| {
        let mut v = ids.to_vec();
        v.sort();
        v
    };
    CandidateSplit {
        lyricist_id: lyricist_id.to_string(),
        group,
        train: sorted(&picked[..N_TRAIN]),
        validation: sorted(&picked[N_TRAIN..N_TRAIN + N_VALIDATION]),
        test: sorted(&picked[N_TRAIN + N_VALIDATION..]),
    }
}

fn assemble<R: Rng>(
    rng: &mut R,
    corpus: &Corpus,
    lyricists: Vec<(String, usize)>,
    dataset_id: String,
    provenance: Provenance,
) -> ExperimentDataset {
    let candidates = lyricists
        .iter()
        .map(|(id, group)| draw_split(rng, corpus, id, *group))
        .collect();
    ExperimentDataset {
        dataset_id,
        candidates,
        provenance,
    }
}

/// Ten lyricists drawn from a single group.
pub fn sample_homogenous(corpus: &Corpus, grouping: &Grouping, group_index: usize, seed: u64) -> Result<ExperimentDataset> {
    if group_index >= N_GROUPS {
        return Err(Error::InvalidParams(format!("group index {group_index} out of range")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let lyricists = draw_lyricists(&mut rng, corpus, grouping, group_index, N_CANDIDATES)?
        .into_iter()
        .map(|id| (id, group_index))
        .collect();
    let provenance = Provenance {
        grouping_method: grouping.method,
        sampling_mode: SamplingMode::Homogenous,
        source_groups: vec![group_index],
        seed,
    };
    let id = format!("{}-{}-g{group_index}-s{seed}", grouping.method.letter(), SamplingMode::Homogenous.tag());
    Ok(assemble(&mut rng, corpus, lyricists, id, provenance))
}

/// Two lyricists from each of the five groups, in group order.
pub fn sample_heterogenous(corpus: &Corpus, grouping: &Grouping, seed: u64) -> Result<ExperimentDataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut lyricists = Vec::with_capacity(N_CANDIDATES);
    for group in 0..N_GROUPS {
        for id in draw_lyricists(&mut rng, corpus, grouping, group, PER_GROUP_HETEROGENOUS)? {
            lyricists.push((id, group));
        }
    }
    let provenance = Provenance {
        grouping_method: grouping.method,
        sampling_mode: SamplingMode::Heterogenous,
        source_groups: (0..N_GROUPS).collect(),
        seed,
    };
    let id = format!("{}-{}-s{seed}", grouping.method.letter(), SamplingMode::Heterogenous.tag());
    Ok(assemble(&mut rng, corpus, lyricists, id, provenance))
}

/// All datasets of one (grouping, mode) experiment.
///
/// Homogenous plans hold `repetitions` datasets per group, group-major.
pub fn plan_experiment(
    corpus: &Corpus,
    grouping: &Grouping,
    mode: SamplingMode,
    repetitions: Option<usize>,
    base_seed: u64,
) -> Result<Vec<ExperimentDataset>> {
    let reps = repetitions.unwrap_or_else(|| mode.default_repetitions());
    let seed = |r: usize| base_seed.wrapping_add(r as u64);
    match mode {
        SamplingMode::Homogenous => (0..N_GROUPS)
            .flat_map(|g| (0..reps).map(move |r| (g, r)))
            .map(|(g, r)| sample_homogenous(corpus, grouping, g, seed(r)))
            .collect(),
        SamplingMode::Heterogenous => (0..reps)
            .map(|r| sample_heterogenous(corpus, grouping, seed(r)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::song;
    use crate::grouping::GroupStats;

    /// `sizes[g]` lyricists in group g, each with `songs` songs.
    fn fixture(sizes: [usize; 5], songs: usize) -> (Corpus, Grouping) {
        let mut records = Vec::new();
        let mut groups = vec![Vec::new(); 5];
        for (g, &n) in sizes.iter().enumerate() {
            for l in 0..n {
                let lyricist = format!("g{g}l{l}");
                for s in 0..songs {
                    records.push(song(&format!("{lyricist}s{s:02}"), &lyricist, "x"));
                }
                groups[g].push(lyricist);
            }
        }
        let stats = (0..5)
            .map(|g| GroupStats {
                group: g,
                n_lyricists: sizes[g],
                avg_songs: 0.0,
                total_songs: 0,
                avg_entropy: 0.0,
                min_entropy: 0.0,
                max_entropy: 0.0,
            })
            .collect();
        let grouping = Grouping {
            method: GroupingMethod::Quantile,
            groups,
            stats,
        };
        (Corpus::from_songs(records).unwrap(), grouping)
    }

    #[test]
    fn forced_selection_takes_whole_group() {
        let (corpus, grouping) = fixture([10, 12, 12, 12, 12], 10);
        for seed in 0..5 {
            let d = sample_homogenous(&corpus, &grouping, 0, seed).unwrap();
            d.validate(&corpus).unwrap();
            let mut ids = d.candidate_ids();
            ids.sort();
            let mut group: Vec<&str> = grouping.groups[0].iter().map(String::as_str).collect();
            group.sort();
            assert_eq!(ids, group);
        }
    }

    #[test]
    fn small_group_is_rejected() {
        let (corpus, grouping) = fixture([9, 12, 12, 12, 12], 10);
        match sample_homogenous(&corpus, &grouping, 0, 1) {
            Err(Error::GroupTooSmall { group: 0, size: 9, needed: 10 }) => {}
            other => panic!("{other:?}"),
        }
        // Lyricists with too few songs are not eligible.
        let (corpus, grouping) = fixture([10, 12, 12, 12, 12], 9);
        assert!(matches!(
            sample_homogenous(&corpus, &grouping, 1, 1),
            Err(Error::GroupTooSmall { size: 0, .. })
        ));
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let (corpus, grouping) = fixture([15, 15, 15, 15, 15], 14);
        let a = sample_homogenous(&corpus, &grouping, 2, 42).unwrap();
        let b = sample_homogenous(&corpus, &grouping, 2, 42).unwrap();
        let c = sample_homogenous(&corpus, &grouping, 2, 43).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.candidates, c.candidates);
    }

    #[test]
    fn heterogenous_takes_two_per_group() {
        let (corpus, grouping) = fixture([2, 2, 2, 2, 2], 10);
        let d = sample_heterogenous(&corpus, &grouping, 7).unwrap();
        assert_eq!(d.candidates.len(), 10);

        let (corpus, grouping) = fixture([3, 20, 20, 20, 20], 12);
        let plan = plan_experiment(&corpus, &grouping, SamplingMode::Heterogenous, None, 100).unwrap();
        assert_eq!(plan.len(), 50);
        for d in &plan {
            d.validate(&corpus).unwrap();
            let mut per_group = [0; 5];
            for c in &d.candidates {
                per_group[c.group] += 1;
                assert_eq!(grouping.group_of(&c.lyricist_id), Some(c.group));
            }
            assert_eq!(per_group, [2; 5]);
        }
    }

    #[test]
    fn plan_sizes() {
        let (corpus, grouping) = fixture([10, 11, 12, 13, 14], 10);
        let hom = plan_experiment(&corpus, &grouping, SamplingMode::Homogenous, None, 0).unwrap();
        assert_eq!(hom.len(), 50);
        for (i, d) in hom.iter().enumerate() {
            assert_eq!(d.provenance.source_groups, vec![i / 10]);
            assert_eq!(d.provenance.seed, (i % 10) as u64);
        }
        let one = plan_experiment(&corpus, &grouping, SamplingMode::Homogenous, Some(1), 0).unwrap();
        assert_eq!(one.len(), 5);
        let one = plan_experiment(&corpus, &grouping, SamplingMode::Heterogenous, Some(1), 0).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn manifest_round_trip_is_byte_identical() {
        let (corpus, grouping) = fixture([12, 12, 12, 12, 12], 11);
        let d = sample_heterogenous(&corpus, &grouping, 3).unwrap();
        let json = d.to_json();
        let back: ExperimentDataset = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn labels_follow_candidate_order() {
        let (corpus, grouping) = fixture([12, 12, 12, 12, 12], 11);
        let d = sample_homogenous(&corpus, &grouping, 4, 9).unwrap();
        for (song_id, label) in d.labelled(Split::Test) {
            assert_eq!(corpus.song(song_id).unwrap().lyricist_id, d.candidates[label].lyricist_id);
        }
        assert_eq!(d.labelled(Split::Train).len(), 60);
        assert_eq!(d.labelled(Split::Validation).len(), 20);
    }
}
