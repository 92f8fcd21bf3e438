//! End-to-end experiment runs.
//!
//! A run reads a corpus, prepares it (identity remap, then the minimum-song
//! filter), computes entropies, groups lyricists, plans datasets for every
//! requested (grouping, sampling) pair, trains and scores one model per
//! dataset, and writes the group tables and correlation summary.
//!
//! Everything lands in the output directory:
//!
//! ```text
//! manifest.json                  run config + per-dataset status
//! lyricist_entropy.csv           per-lyricist entropy
//! entropy_histogram.csv
//! groups_{quantile,kmeans}.csv   group statistics (+ .txt)
//! assignment_{quantile,kmeans}.csv
//! datasets/<id>.json             dataset manifests
//! scores/<id>.json               per-dataset confusion counts and metrics
//! tables/<A|B>_<mode>.{csv,txt,svg}
//! correlation.json
//! ```
//!
//! Seeds: the sampling plan of experiment `k` (A/homogenous = 0,
//! A/heterogenous = 1, B/homogenous = 2, B/heterogenous = 3) uses base seed
//! `splitmix64(seed + k)`, and repetition `r` within it uses that base plus
//! `r`. Each dataset's seed is also handed to its classifier.
//!
//! Re-running into the same directory with the same config skips datasets
//! that are already scored.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, external_classifier, ClassifierConfig, LyricistModel};
use crate::corpus::{self, filter_min_songs, load_corpus, Corpus, CorpusFormat};
use crate::entropy::{compute_stats, entropy_histogram, LogBase};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, correlation, score_run, Averaging, GroupMetrics, RunScore};
use crate::grouping::{group_kmeans, group_quantile, Grouping, GroupingMethod};
use crate::report::{self, CorrelationSummary, ExperimentKey};
use crate::sampling::{plan_experiment, ExperimentDataset, SamplingMode};

/// Which classifier trains each dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Backend {
    #[default]
    Builtin,
    Plugin { command: String },
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "builtin" => Ok(Backend::Builtin),
            Some(("plugin", cmd)) if !cmd.trim().is_empty() => Ok(Backend::Plugin {
                command: cmd.to_string(),
            }),
            _ => Err(format!("expected `builtin` or `plugin:<command>`, got {s:?}")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Builtin => f.write_str("builtin"),
            Backend::Plugin { command } => write!(f, "plugin:{command}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub log_base: LogBase,
    pub min_songs: usize,
    /// Reviewed `from_id,to_id` lyricist merges, applied before filtering.
    pub remap: Option<PathBuf>,
    pub groupings: Vec<GroupingMethod>,
    pub modes: Vec<SamplingMode>,
    pub homogenous_repetitions: usize,
    pub heterogenous_repetitions: usize,
    pub kmeans_max_iters: usize,
    pub histogram_bin_width: f64,
    pub classifier: ClassifierConfig,
    pub backend: Backend,
    pub plugin_timeout_secs: u64,
    pub averaging: Averaging,
    /// Stop at the first failing dataset instead of recording it.
    pub fail_fast: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            log_base: LogBase::Natural,
            min_songs: corpus::DEFAULT_MIN_SONGS,
            remap: None,
            groupings: vec![GroupingMethod::Quantile, GroupingMethod::Kmeans],
            modes: vec![SamplingMode::Homogenous, SamplingMode::Heterogenous],
            homogenous_repetitions: SamplingMode::Homogenous.default_repetitions(),
            heterogenous_repetitions: SamplingMode::Heterogenous.default_repetitions(),
            kmeans_max_iters: crate::grouping::DEFAULT_MAX_ITERS,
            histogram_bin_width: 0.1,
            classifier: ClassifierConfig::default(),
            backend: Backend::Builtin,
            plugin_timeout_secs: classifier::plugin::DEFAULT_TIMEOUT.as_secs(),
            averaging: Averaging::Macro,
            fail_fast: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        if self.groupings.is_empty() || self.modes.is_empty() {
            return Err(Error::InvalidParams("at least one grouping and one sampling mode".into()));
        }
        if self.homogenous_repetitions == 0 || self.heterogenous_repetitions == 0 {
            return Err(Error::InvalidParams("repetitions must be positive".into()));
        }
        if self.min_songs == 0 {
            return Err(Error::InvalidParams("min_songs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn experiments(&self) -> Vec<ExperimentKey> {
        let mut keys = Vec::new();
        for method in [GroupingMethod::Quantile, GroupingMethod::Kmeans] {
            for mode in [SamplingMode::Homogenous, SamplingMode::Heterogenous] {
                if self.groupings.contains(&method) && self.modes.contains(&mode) {
                    keys.push(ExperimentKey { method, mode });
                }
            }
        }
        keys
    }

    fn repetitions(&self, mode: SamplingMode) -> usize {
        match mode {
            SamplingMode::Homogenous => self.homogenous_repetitions,
            SamplingMode::Heterogenous => self.heterogenous_repetitions,
        }
    }
}

/// SplitMix64 finalizer; spreads consecutive inputs over the seed space.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn experiment_seed(base_seed: u64, key: ExperimentKey) -> u64 {
    let index = match (key.method, key.mode) {
        (GroupingMethod::Quantile, SamplingMode::Homogenous) => 0,
        (GroupingMethod::Quantile, SamplingMode::Heterogenous) => 1,
        (GroupingMethod::Kmeans, SamplingMode::Homogenous) => 2,
        (GroupingMethod::Kmeans, SamplingMode::Heterogenous) => 3,
    };
    splitmix64(base_seed.wrapping_add(index))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "state")]
pub enum DatasetStatus {
    Pending,
    Trained,
    Scored,
    Failed { reason: String },
}

impl DatasetStatus {
    fn rank(&self) -> u8 {
        match self {
            DatasetStatus::Pending => 0,
            DatasetStatus::Trained => 1,
            DatasetStatus::Scored | DatasetStatus::Failed { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub dataset_id: String,
    pub experiment: String,
    pub manifest: String,
    pub score: String,
    pub status: DatasetStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub source: String,
    pub songs: usize,
    pub lyricists: usize,
    pub singers: usize,
    pub songs_after_filter: usize,
    pub lyricists_after_filter: usize,
    pub singers_after_filter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub corpus: CorpusSummary,
    pub datasets: Vec<DatasetEntry>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Moves a dataset forward; backward moves are ignored.
    pub fn advance(&mut self, dataset_id: &str, status: DatasetStatus) {
        if let Some(entry) = self.datasets.iter_mut().find(|d| d.dataset_id == dataset_id) {
            if status.rank() > entry.status.rank() {
                entry.status = status;
            }
        }
    }

    pub fn count(&self, pred: impl Fn(&DatasetStatus) -> bool) -> usize {
        self.datasets.iter().filter(|d| pred(&d.status)).count()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub tables: BTreeMap<ExperimentKey, Vec<GroupMetrics>>,
    pub correlations: Vec<CorrelationSummary>,
    /// Datasets trained during this invocation.
    pub trained_now: usize,
}

fn write(out_dir: &Path, rel: &str, contents: &str) -> Result<String> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(rel.to_string())
}

/// Corpus after identity remapping and the minimum-song filter.
pub fn prepare_corpus(raw: &Corpus, config: &ExperimentConfig) -> Result<Corpus> {
    let remapped = match &config.remap {
        Some(path) => raw.remap_lyricists(&corpus::load_remap(path)?)?,
        None => raw.clone(),
    };
    Ok(filter_min_songs(&remapped, config.min_songs))
}

fn train_and_score(
    dataset: &ExperimentDataset,
    corpus: &Corpus,
    config: &ExperimentConfig,
) -> Result<RunScore> {
    let mut classifier_config = config.classifier.clone();
    classifier_config.seed = dataset.provenance.seed;
    match &config.backend {
        Backend::Builtin => {
            let mut model = classifier::train(dataset, corpus, &classifier_config)?;
            score_run(&mut model, dataset, corpus)
        }
        Backend::Plugin { command } => {
            let timeout = Duration::from_secs(config.plugin_timeout_secs);
            let mut model = external_classifier(command, dataset, corpus, &classifier_config, timeout)?;
            let score = score_run(&mut model as &mut dyn LyricistModel, dataset, corpus)?;
            model.shutdown()?;
            Ok(score)
        }
    }
}

/// Loads the corpus at `corpus_path` (format from its extension) and runs.
pub fn run_experiment(
    corpus_path: impl AsRef<Path>,
    config: &ExperimentConfig,
    out_dir: impl AsRef<Path>,
    jobs: Option<usize>,
) -> Result<RunOutcome> {
    let corpus_path = corpus_path.as_ref();
    let raw = load_corpus(corpus_path, CorpusFormat::from_path(corpus_path))?;
    run_on_corpus(&raw, &corpus_path.display().to_string(), config, out_dir, jobs)
}

pub fn run_on_corpus(
    raw: &Corpus,
    source: &str,
    config: &ExperimentConfig,
    out_dir: impl AsRef<Path>,
    jobs: Option<usize>,
) -> Result<RunOutcome> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let corpus = prepare_corpus(raw, config)?;
    let mut artifacts = Vec::new();

    let stats = compute_stats(&corpus, config.log_base);
    artifacts.push(write(out_dir, "lyricist_entropy.csv", &report::lyricist_entropy_csv(&stats))?);
    let bins = entropy_histogram(&stats, config.histogram_bin_width)?;
    artifacts.push(write(
        out_dir,
        "entropy_histogram.csv",
        &report::histogram_csv(&bins, config.histogram_bin_width),
    )?);

    let quantile = group_quantile(&stats)?;
    let mut groupings: BTreeMap<GroupingMethod, Grouping> = BTreeMap::new();
    if config.groupings.contains(&GroupingMethod::Kmeans) {
        groupings.insert(
            GroupingMethod::Kmeans,
            group_kmeans(&stats, &quantile, config.kmeans_max_iters)?,
        );
    }
    groupings.insert(GroupingMethod::Quantile, quantile);
    for (method, grouping) in &groupings {
        if !config.groupings.contains(method) {
            continue;
        }
        artifacts.push(write(out_dir, &format!("groups_{method}.csv"), &report::group_stats_csv(grouping))?);
        artifacts.push(write(out_dir, &format!("groups_{method}.txt"), &report::group_stats_text(grouping))?);
        artifacts.push(write(out_dir, &format!("assignment_{method}.csv"), &report::assignment_csv(grouping))?);
    }

    // Plan every dataset up front; the plan is a pure function of the config.
    let mut planned: Vec<(ExperimentKey, ExperimentDataset)> = Vec::new();
    for key in config.experiments() {
        let grouping = &groupings[&key.method];
        let datasets = plan_experiment(
            &corpus,
            grouping,
            key.mode,
            Some(config.repetitions(key.mode)),
            experiment_seed(config.seed, key),
        )?;
        planned.extend(datasets.into_iter().map(|d| (key, d)));
    }

    let summary = CorpusSummary {
        source: source.to_string(),
        songs: raw.len(),
        lyricists: raw.n_lyricists(),
        singers: raw.n_singers(),
        songs_after_filter: corpus.len(),
        lyricists_after_filter: corpus.n_lyricists(),
        singers_after_filter: corpus.n_singers(),
    };
    let fresh = RunManifest {
        run_id: format!("run-{:016x}", splitmix64(config.seed)),
        config: config.clone(),
        corpus: summary,
        datasets: planned
            .iter()
            .map(|(key, d)| DatasetEntry {
                dataset_id: d.dataset_id.clone(),
                experiment: key.name(),
                manifest: format!("datasets/{}.json", d.dataset_id),
                score: format!("scores/{}.json", d.dataset_id),
                status: DatasetStatus::Pending,
            })
            .collect(),
        artifacts: Vec::new(),
    };

    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = if manifest_path.exists() {
        let existing = RunManifest::load(&manifest_path)?;
        if existing.config != fresh.config || existing.corpus != fresh.corpus || {
            let ids = |m: &RunManifest| m.datasets.iter().map(|d| d.dataset_id.clone()).collect::<Vec<_>>();
            ids(&existing) != ids(&fresh)
        } {
            return Err(Error::InvalidParams(format!(
                "{} holds a different run; use a fresh output directory",
                out_dir.display()
            )));
        }
        existing
    } else {
        fresh
    };

    for (_, d) in &planned {
        write(out_dir, &format!("datasets/{}.json", d.dataset_id), &d.to_json())?;
    }

    // A dataset counts as done only if its score file is still there.
    let todo: Vec<&(ExperimentKey, ExperimentDataset)> = planned
        .iter()
        .filter(|(_, d)| {
            let entry = manifest.datasets.iter().find(|e| e.dataset_id == d.dataset_id).expect("planned");
            match entry.status {
                DatasetStatus::Scored => !out_dir.join(&entry.score).exists(),
                DatasetStatus::Failed { .. } => false,
                _ => true,
            }
        })
        .collect();
    for (_, d) in &todo {
        if let Some(e) = manifest.datasets.iter_mut().find(|e| e.dataset_id == d.dataset_id) {
            e.status = DatasetStatus::Pending;
        }
    }
    fs::write(&manifest_path, manifest.to_json()).map_err(|e| Error::io(&manifest_path, e))?;

    let shared = Mutex::new(manifest);
    let record = |id: &str, status: DatasetStatus| -> Result<()> {
        let mut m = shared.lock().expect("manifest lock");
        m.advance(id, status);
        fs::write(&manifest_path, m.to_json()).map_err(|e| Error::io(&manifest_path, e))
    };

    let work = |(_, dataset): &&(ExperimentKey, ExperimentDataset)| -> Result<()> {
        match train_and_score(dataset, &corpus, config) {
            Ok(score) => {
                record(&dataset.dataset_id, DatasetStatus::Trained)?;
                let json = serde_json::to_string_pretty(&score)? + "\n";
                write(out_dir, &format!("scores/{}.json", dataset.dataset_id), &json)?;
                record(&dataset.dataset_id, DatasetStatus::Scored)
            }
            Err(e) if config.fail_fast => Err(e),
            Err(e) => record(
                &dataset.dataset_id,
                DatasetStatus::Failed {
                    reason: e.to_string(),
                },
            ),
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    pool.install(|| todo.par_iter().try_for_each(work))?;

    let mut manifest = shared.into_inner().expect("manifest lock");
    let trained_now = todo.len();

    let (tables, correlations, report_artifacts) = build_report(out_dir, &manifest, &groupings)?;
    artifacts.extend(report_artifacts);
    artifacts.push("manifest.json".into());
    manifest.artifacts = artifacts;
    fs::write(&manifest_path, manifest.to_json()).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(RunOutcome {
        manifest,
        tables,
        correlations,
        trained_now,
    })
}

type Report = (
    BTreeMap<ExperimentKey, Vec<GroupMetrics>>,
    Vec<CorrelationSummary>,
    Vec<String>,
);

fn load_scores(out_dir: &Path, manifest: &RunManifest, experiment: &str) -> Result<Vec<RunScore>> {
    manifest
        .datasets
        .iter()
        .filter(|d| d.experiment == experiment && d.status == DatasetStatus::Scored)
        .map(|d| {
            let path = out_dir.join(&d.score);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

/// Aggregates the scored datasets of a run into group tables, charts and
/// the correlation summary.
pub fn build_report(
    out_dir: &Path,
    manifest: &RunManifest,
    groupings: &BTreeMap<GroupingMethod, Grouping>,
) -> Result<Report> {
    let mut tables = BTreeMap::new();
    let mut correlations = Vec::new();
    let mut artifacts = Vec::new();

    for key in manifest.config.experiments() {
        let grouping = &groupings[&key.method];
        let scores = load_scores(out_dir, manifest, &key.name())?;
        let rows = aggregate(&scores, grouping, manifest.config.averaging)?;

        let stem = format!("tables/{}", key.name());
        artifacts.push(write(out_dir, &format!("{stem}.csv"), &report::metric_table_csv(key, &rows))?);
        artifacts.push(write(out_dir, &format!("{stem}.txt"), &report::metric_table_text(key, &rows))?);
        artifacts.push(write(out_dir, &format!("{stem}.svg"), &report::metric_chart_svg(key, &rows))?);

        let group_avg_entropy = grouping.avg_entropies();
        let group_f1: Vec<f64> = rows.iter().map(|r| r.f1).collect();
        let (corr, error) = match correlation(&group_avg_entropy, &group_f1) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        correlations.push(CorrelationSummary {
            experiment: key.name(),
            group_avg_entropy,
            group_f1,
            correlation: corr,
            error,
        });
        tables.insert(key, rows);
    }

    let json = serde_json::to_string_pretty(&correlations)? + "\n";
    artifacts.push(write(out_dir, "correlation.json", &json)?);
    Ok((tables, correlations, artifacts))
}

/// Regenerates tables from a finished (or partial) run directory.
pub fn report_from_dir(out_dir: impl AsRef<Path>) -> Result<Report> {
    let out_dir = out_dir.as_ref();
    let manifest = RunManifest::load(out_dir.join("manifest.json"))?;
    let raw = load_corpus(&manifest.corpus.source, CorpusFormat::from_path(Path::new(&manifest.corpus.source)))?;
    let corpus = prepare_corpus(&raw, &manifest.config)?;
    let stats = compute_stats(&corpus, manifest.config.log_base);
    let quantile = group_quantile(&stats)?;
    let mut groupings = BTreeMap::new();
    if manifest.config.groupings.contains(&GroupingMethod::Kmeans) {
        groupings.insert(
            GroupingMethod::Kmeans,
            group_kmeans(&stats, &quantile, manifest.config.kmeans_max_iters)?,
        );
    }
    groupings.insert(GroupingMethod::Quantile, quantile);
    build_report(out_dir, &manifest, &groupings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_parsing() {
        assert_eq!("builtin".parse::<Backend>().unwrap(), Backend::Builtin);
        assert_eq!(
            "plugin:python3 serve.py".parse::<Backend>().unwrap(),
            Backend::Plugin {
                command: "python3 serve.py".into()
            }
        );
        assert!("plugin:".parse::<Backend>().is_err());
        assert!("bert".parse::<Backend>().is_err());
    }

    #[test]
    fn experiment_seeds_differ() {
        let cfg = ExperimentConfig::default();
        let seeds: std::collections::BTreeSet<u64> =
            cfg.experiments().into_iter().map(|k| experiment_seed(7, k)).collect();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn status_only_moves_forward() {
        let mut m = RunManifest {
            run_id: "r".into(),
            config: ExperimentConfig::default(),
            corpus: CorpusSummary {
                source: String::new(),
                songs: 0,
                lyricists: 0,
                singers: 0,
                songs_after_filter: 0,
                lyricists_after_filter: 0,
                singers_after_filter: 0,
            },
            datasets: vec![DatasetEntry {
                dataset_id: "d".into(),
                experiment: "A_homogenous".into(),
                manifest: String::new(),
                score: String::new(),
                status: DatasetStatus::Pending,
            }],
            artifacts: vec![],
        };
        m.advance("d", DatasetStatus::Scored);
        m.advance("d", DatasetStatus::Trained);
        assert_eq!(m.datasets[0].status, DatasetStatus::Scored);

        let json = m.to_json();
        let back: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn config_defaults_from_empty_json() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.experiments().len(), 4);
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"groupings":["quantile"],"modes":["homogenous"],"classifier":{"max_epochs":5}}"#).unwrap();
        assert_eq!(cfg.experiments().len(), 1);
        assert_eq!(cfg.classifier.max_epochs, 5);
        assert_eq!(cfg.classifier.max_tokens, 512);
    }
}
