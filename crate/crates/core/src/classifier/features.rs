//! TF-IDF features: lowercased word unigrams plus character 2- and 3-grams
//! of the space-joined token sequence.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};

/// Sparse row, sorted by feature index.
pub type SparseRow = Vec<(u32, f64)>;

const CHAR_NGRAMS: [usize; 2] = [2, 3];

fn raw_features(text: &str, max_tokens: usize) -> HashMap<String, f64> {
    let tokens: Vec<String> = tokenize(text, max_tokens)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect();
    let mut counts: HashMap<String, f64> = HashMap::new();
    for t in &tokens {
        *counts.entry(format!("w:{t}")).or_default() += 1.0;
    }

    let joined: Vec<char> = tokens.join(" ").chars().collect();
    for n in CHAR_NGRAMS {
        for gram in joined.windows(n) {
            if gram.iter().all(|c| *c == ' ') {
                continue;
            }
            let gram: String = gram.iter().collect();
            *counts.entry(format!("c:{gram}")).or_default() += 1.0;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    pub max_tokens: usize,
    /// Feature name -> column, columns assigned in name order.
    pub vocabulary: BTreeMap<String, u32>,
    pub idf: Vec<f64>,
}

impl TfidfVectorizer {
    /// Fits the vocabulary and smoothed IDF, `ln((1 + n) / (1 + df)) + 1`,
    /// on `texts`.
    pub fn fit<S: AsRef<str>>(texts: &[S], max_tokens: usize) -> Result<Self> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for key in raw_features(text.as_ref(), max_tokens).into_keys() {
                *df.entry(key).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::DegenerateFeatures);
        }

        let n = texts.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (col, (key, count)) in df.into_iter().enumerate() {
            vocabulary.insert(key, col as u32);
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        Ok(TfidfVectorizer {
            max_tokens,
            vocabulary,
            idf,
        })
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    /// L2-normalized TF-IDF row with sublinear term frequency, `1 + ln tf`.
    /// Unseen features are dropped; a text with no known feature maps to the
    /// empty row.
    pub fn transform(&self, text: &str) -> SparseRow {
        let mut row: SparseRow = raw_features(text, self.max_tokens)
            .into_iter()
            .filter_map(|(key, tf)| {
                let col = *self.vocabulary.get(&key)?;
                Some((col, (1.0 + tf.ln()) * self.idf[col as usize]))
            })
            .collect();
        row.sort_unstable_by_key(|&(c, _)| c);
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }
}
