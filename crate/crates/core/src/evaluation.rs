//! Scoring of trained models, per-group aggregation and the
//! entropy-performance correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::LyricistModel;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouping::{Grouping, N_GROUPS};
use crate::sampling::{ExperimentDataset, Split};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F1 with every 0/0 taken as 0.
pub fn metrics(tp: usize, fp: usize, fn_: usize) -> Metrics {
    let (tp, fp, fn_) = (tp as f64, fp as f64, fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Metrics {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate().skip(1) {
        if x > p[best] {
            best = i;
        }
    }
    best
}

/// Per-class confusion counts from true and predicted labels.
pub fn confusion_counts(truth: &[usize], predicted: &[usize], n_classes: usize) -> Vec<Confusion> {
    let mut counts = vec![Confusion::default(); n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            counts[t].tp += 1;
        } else {
            counts[p].fp += 1;
            counts[t].fn_ += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyricistScore {
    pub lyricist_id: String,
    pub group: usize,
    #[serde(flatten)]
    pub counts: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub dataset_id: String,
    pub lyricists: Vec<LyricistScore>,
    pub correct: usize,
    pub total: usize,
}

impl RunScore {
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct as f64, self.total as f64)
    }

    /// Builds the per-candidate scores of one run from predicted labels for
    /// the test split, in `dataset.labelled(Split::Test)` order.
    pub fn from_predictions(dataset: &ExperimentDataset, predicted: &[usize]) -> RunScore {
        let truth: Vec<usize> = dataset.labelled(Split::Test).iter().map(|&(_, l)| l).collect();
        let counts = confusion_counts(&truth, predicted, dataset.candidates.len());
        let lyricists = dataset
            .candidates
            .iter()
            .zip(&counts)
            .map(|(c, &k)| LyricistScore {
                lyricist_id: c.lyricist_id.clone(),
                group: c.group,
                counts: k,
                metrics: metrics(k.tp, k.fp, k.fn_),
            })
            .collect();
        RunScore {
            dataset_id: dataset.dataset_id.clone(),
            lyricists,
            correct: counts.iter().map(|c| c.tp).sum(),
            total: truth.len(),
        }
    }
}

/// Predicts every test song of `dataset` and tallies the confusion counts.
pub fn score_run(model: &mut dyn LyricistModel, dataset: &ExperimentDataset, corpus: &Corpus) -> Result<RunScore> {
    let test = dataset.labelled(Split::Test);
    let texts = test
        .iter()
        .map(|&(id, _)| {
            corpus
                .song(id)
                .map(|s| s.lyrics.as_str())
                .ok_or_else(|| Error::UnknownSong(id.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let probs = model.predict_batch(&texts)?;
    let predicted: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    Ok(RunScore::from_predictions(dataset, &predicted))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Mean of the per-(run, lyricist) metric values.
    #[default]
    Macro,
    /// Metrics of the summed confusion counts.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: usize,
    /// Number of (run, lyricist) pairs averaged; zero leaves the metrics NaN.
    pub n_pairs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Averages the scores of every (run, lyricist) pair within each group.
///
/// Runs are folded in dataset id order so the result does not depend on
/// the order of `runs`.
pub fn aggregate(runs: &[RunScore], grouping: &Grouping, averaging: Averaging) -> Result<Vec<GroupMetrics>> {
    let assignment = grouping.assignment();
    let mut ordered: Vec<&RunScore> = runs.iter().collect();
    ordered.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));

    let mut sums = vec![[0.0f64; 3]; N_GROUPS];
    let mut pooled = vec![Confusion::default(); N_GROUPS];
    let mut pairs = vec![0usize; N_GROUPS];
    for run in ordered {
        for s in &run.lyricists {
            let g = *assignment
                .get(&s.lyricist_id)
                .ok_or_else(|| Error::MissingGroup(s.lyricist_id.clone()))?;
            sums[g][0] += s.metrics.precision;
            sums[g][1] += s.metrics.recall;
            sums[g][2] += s.metrics.f1;
            pooled[g].tp += s.counts.tp;
            pooled[g].fp += s.counts.fp;
            pooled[g].fn_ += s.counts.fn_;
            pairs[g] += 1;
        }
    }

    Ok((0..N_GROUPS)
        .map(|g| {
            let n = pairs[g];
            let (precision, recall, f1) = if n == 0 {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                match averaging {
                    Averaging::Macro => {
                        let n = n as f64;
                        (sums[g][0] / n, sums[g][1] / n, sums[g][2] / n)
                    }
                    Averaging::Pooled => {
                        let m = metrics(pooled[g].tp, pooled[g].fp, pooled[g].fn_);
                        (m.precision, m.recall, m.f1)
                    }
                }
            };
            GroupMetrics {
                group: g,
                n_pairs: n,
                precision,
                recall,
                f1,
            }
        })
        .collect())
}

/// Mean accuracy over runs.
pub fn mean_accuracy(runs: &[RunScore]) -> f64 {
    ratio(runs.iter().map(RunScore::accuracy).sum(), runs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson_r: f64,
    pub spearman_rho: f64,
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Correlation("inputs differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::Correlation("need at least 3 points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Correlation("non-finite input"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Correlation("constant input vector"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, tied values sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Correlation("inputs differ in length"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn correlation(group_entropies: &[f64], group_f1: &[f64]) -> Result<Correlation> {
    Ok(Correlation {
        pearson_r: pearson(group_entropies, group_f1)?,
        spearman_rho: spearman(group_entropies, group_f1)?,
    })
}

/// Per-group distribution of per-(run, lyricist) F1 values, for reporting
/// raw spreads next to the averages.
pub fn f1_by_group(runs: &[RunScore]) -> BTreeMap<usize, Vec<f64>> {
    let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for s in &run.lyricists {
            out.entry(s.group).or_default().push(s.metrics.f1);
        }
    }
    out
}
