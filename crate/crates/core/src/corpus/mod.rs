//! Song records, the corpus index and data preparation.
//!
//! A corpus is immutable once built. Loading validates every record and
//! builds the per-lyricist and per-singer song indices up front, so later
//! stages can assume the indices are consistent with the song list.

mod io;
mod levenshtein;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use io::{load_corpus, load_remap, read_corpus, write_csv, write_jsonl, CorpusFormat};
pub use levenshtein::levenshtein;

pub const DEFAULT_MIN_SONGS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongRecord {
    pub song_id: String,
    pub lyricist_id: String,
    pub singer_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyricist_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singer_name: Option<String>,
    pub lyrics: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    songs: Vec<SongRecord>,
    position: HashMap<String, usize>,
    by_lyricist: BTreeMap<String, BTreeSet<String>>,
    by_singer: BTreeMap<String, BTreeSet<String>>,
}

impl Corpus {
    /// Validates the records and builds the indices. Song order is kept.
    pub fn from_songs(songs: Vec<SongRecord>) -> Result<Self> {
        let mut position = HashMap::with_capacity(songs.len());
        let mut by_lyricist: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut by_singer: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

        for (idx, song) in songs.iter().enumerate() {
            if song.lyrics.trim().is_empty() {
                return Err(Error::EmptyLyrics(song.song_id.clone()));
            }
            if position.insert(song.song_id.clone(), idx).is_some() {
                return Err(Error::DuplicateId(song.song_id.clone()));
            }
            by_lyricist
                .entry(song.lyricist_id.clone())
                .or_default()
                .insert(song.song_id.clone());
            by_singer
                .entry(song.singer_id.clone())
                .or_default()
                .insert(song.song_id.clone());
        }

        Ok(Corpus {
            songs,
            position,
            by_lyricist,
            by_singer,
        })
    }

    pub fn songs(&self) -> &[SongRecord] {
        &self.songs
    }

    pub fn len(&self) -> usize {
        self.songs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    pub fn song(&self, song_id: &str) -> Option<&SongRecord> {
        self.position.get(song_id).map(|&i| &self.songs[i])
    }

    /// Lyricist ids in ascending order.
    pub fn lyricists(&self) -> impl Iterator<Item = &str> {
        self.by_lyricist.keys().map(String::as_str)
    }

    pub fn singers(&self) -> impl Iterator<Item = &str> {
        self.by_singer.keys().map(String::as_str)
    }

    pub fn n_lyricists(&self) -> usize {
        self.by_lyricist.len()
    }

    pub fn n_singers(&self) -> usize {
        self.by_singer.len()
    }

    /// Song ids written by `lyricist_id`, ascending.
    pub fn songs_by_lyricist(&self, lyricist_id: &str) -> Option<&BTreeSet<String>> {
        self.by_lyricist.get(lyricist_id)
    }

    pub fn songs_by_singer(&self, singer_id: &str) -> Option<&BTreeSet<String>> {
        self.by_singer.get(singer_id)
    }

    pub fn lyricist_song_count(&self, lyricist_id: &str) -> usize {
        self.by_lyricist.get(lyricist_id).map_or(0, BTreeSet::len)
    }

    /// Rewrites lyricist ids through a reviewed `from -> to` table.
    ///
    /// Remaps are not chained: each id is looked up once.
    pub fn remap_lyricists(&self, remap: &BTreeMap<String, String>) -> Result<Corpus> {
        let songs = self
            .songs
            .iter()
            .map(|song| {
                let mut song = song.clone();
                if let Some(to) = remap.get(&song.lyricist_id) {
                    song.lyricist_id = to.clone();
                }
                song
            })
            .collect();
        Corpus::from_songs(songs)
    }
}

/// Keeps the songs whose lyricist has at least `min_songs` songs in `corpus`.
///
/// Counts come from the input corpus only; removing a lyricist never
/// triggers a second pass.
pub fn filter_min_songs(corpus: &Corpus, min_songs: usize) -> Corpus {
    let min_songs = min_songs.max(1);
    let songs: Vec<SongRecord> = corpus
        .songs
        .iter()
        .filter(|s| corpus.lyricist_song_count(&s.lyricist_id) >= min_songs)
        .cloned()
        .collect();
    Corpus::from_songs(songs).expect("subset of a valid corpus is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameVariant {
    pub first: String,
    pub second: String,
    pub distance: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NameVariantReport {
    pub pairs: Vec<NameVariant>,
    /// Lyricists without a display name; these were not compared.
    pub skipped_unnamed: usize,
}

/// Candidate pairs of lyricists whose display names are within `max_dist`
/// edits of each other (after NFC normalization). Output is for manual
/// review; nothing is merged.
pub fn find_name_variants(corpus: &Corpus, max_dist: usize) -> NameVariantReport {
    let mut named: Vec<(&str, String)> = Vec::new();
    let mut skipped_unnamed = 0;

    for lyricist in corpus.lyricists() {
        let name = corpus.by_lyricist[lyricist]
            .iter()
            .filter_map(|id| corpus.song(id)?.lyricist_name.as_deref())
            .find(|n| !n.trim().is_empty());
        match name {
            Some(n) => named.push((lyricist, n.trim().nfc().collect())),
            None => skipped_unnamed += 1,
        }
    }

    let mut pairs = Vec::new();
    for (i, (id_a, name_a)) in named.iter().enumerate() {
        for (id_b, name_b) in &named[i + 1..] {
            // Cheap lower bound before running the full DP.
            let (la, lb) = (name_a.chars().count(), name_b.chars().count());
            if la.abs_diff(lb) > max_dist {
                continue;
            }
            let distance = levenshtein(name_a, name_b);
            if distance <= max_dist {
                let (first, second) = if id_a <= id_b { (id_a, id_b) } else { (id_b, id_a) };
                pairs.push(NameVariant {
                    first: first.to_string(),
                    second: second.to_string(),
                    distance,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        (a.distance, &a.first, &a.second).cmp(&(b.distance, &b.first, &b.second))
    });

    NameVariantReport {
        pairs,
        skipped_unnamed,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn song(id: &str, lyricist: &str, singer: &str) -> SongRecord {
        SongRecord {
            song_id: id.into(),
            lyricist_id: lyricist.into(),
            singer_id: singer.into(),
            lyricist_name: None,
            singer_name: None,
            lyrics: format!("lyrics of {id}"),
        }
    }

    fn named(id: &str, lyricist: &str, name: &str) -> SongRecord {
        SongRecord {
            lyricist_name: Some(name.into()),
            ..song(id, lyricist, "j")
        }
    }

    fn counts(spec: &[(&str, usize)]) -> Corpus {
        let mut songs = Vec::new();
        for (lyricist, n) in spec {
            for k in 0..*n {
                songs.push(song(&format!("{lyricist}-{k}"), lyricist, "j"));
            }
        }
        Corpus::from_songs(songs).unwrap()
    }

    #[test]
    fn indices_cover_all_songs() {
        let c = Corpus::from_songs(vec![
            song("1", "a", "x"),
            song("2", "a", "y"),
            song("3", "b", "x"),
        ])
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.n_lyricists(), 2);
        assert_eq!(c.n_singers(), 2);
        let total: usize = c.lyricists().map(|l| c.lyricist_song_count(l)).sum();
        assert_eq!(total, c.len());
        assert_eq!(c.songs_by_singer("x").unwrap().len(), 2);
    }

    #[test]
    fn rejects_duplicates_and_blank_lyrics() {
        let err = Corpus::from_songs(vec![song("1", "a", "x"), song("1", "b", "y")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "1"));

        let mut blank = song("2", "a", "x");
        blank.lyrics = " \n\t".into();
        assert!(matches!(
            Corpus::from_songs(vec![blank]),
            Err(Error::EmptyLyrics(_))
        ));
    }

    #[test]
    fn filter_is_single_pass_and_inclusive() {
        let c = counts(&[("a", 12), ("b", 9), ("c", 10)]);
        let f = filter_min_songs(&c, 10);
        assert_eq!(f.lyricist_song_count("a"), 12);
        assert_eq!(f.lyricist_song_count("b"), 0);
        assert_eq!(f.lyricist_song_count("c"), 10);
        assert_eq!(filter_min_songs(&f, 10), f);
        assert_eq!(filter_min_songs(&c, 1), c);
    }

    #[test]
    fn filter_may_empty_the_corpus() {
        let c = counts(&[("a", 3)]);
        assert!(filter_min_songs(&c, 10).is_empty());
    }

    #[test]
    fn name_variants() {
        let c = Corpus::from_songs(vec![
            named("1", "l1", "abc"),
            named("2", "l2", "abd"),
            named("3", "l3", "xyz"),
            song("4", "l4", "j"),
        ])
        .unwrap();
        let report = find_name_variants(&c, 1);
        assert_eq!(
            report.pairs,
            vec![NameVariant {
                first: "l1".into(),
                second: "l2".into(),
                distance: 1
            }]
        );
        assert_eq!(report.skipped_unnamed, 1);
        assert!(find_name_variants(&c, 0).pairs.is_empty());

        let c = Corpus::from_songs(vec![named("1", "p", "ab"), named("2", "q", "ba")]).unwrap();
        let report = find_name_variants(&c, 2);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].distance, 2);
    }

    #[test]
    fn name_variants_normalize_to_nfc() {
        // Composed vs decomposed "é" are identical after NFC.
        let c = Corpus::from_songs(vec![
            named("1", "a", "Ren\u{e9}"),
            named("2", "b", "Rene\u{301}"),
        ])
        .unwrap();
        let report = find_name_variants(&c, 0);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].distance, 0);
    }

    #[test]
    fn remap_merges_identities() {
        let c = counts(&[("a", 6), ("a2", 5)]);
        let remap = BTreeMap::from([("a2".to_string(), "a".to_string())]);
        let merged = c.remap_lyricists(&remap).unwrap();
        assert_eq!(merged.n_lyricists(), 1);
        assert_eq!(filter_min_songs(&merged, 10).len(), 11);
    }
}
