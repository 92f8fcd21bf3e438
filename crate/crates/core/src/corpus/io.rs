use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{Corpus, SongRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess from the file extension; anything other than `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format)
}

pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Corpus> {
    let songs = match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(reader))?,
        CorpusFormat::Csv => read_csv(reader)?,
    };
    Corpus::from_songs(songs)
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<SongRecord>> {
    let mut songs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let song: SongRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        songs.push(song);
    }
    Ok(songs)
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<SongRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut songs = Vec::new();
    for record in rdr.deserialize::<SongRecord>() {
        let song = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        songs.push(song);
    }
    Ok(songs)
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for song in corpus.songs() {
        serde_json::to_writer(&mut writer, song)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_csv<W: Write>(corpus: &Corpus, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "song_id",
        "lyricist_id",
        "singer_id",
        "lyricist_name",
        "singer_name",
        "lyrics",
    ])?;
    for s in corpus.songs() {
        wtr.write_record([
            s.song_id.as_str(),
            &s.lyricist_id,
            &s.singer_id,
            s.lyricist_name.as_deref().unwrap_or(""),
            s.singer_name.as_deref().unwrap_or(""),
            &s.lyrics,
        ])?;
    }
    wtr.flush()
}

#[derive(Deserialize)]
struct RemapRow {
    from_id: String,
    to_id: String,
}

/// Reads a reviewed `from_id,to_id` CSV of lyricist identity merges.
pub fn load_remap(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut remap = BTreeMap::new();
    for row in rdr.deserialize::<RemapRow>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        remap.insert(row.from_id, row.to_id);
    }
    Ok(remap)
}
