use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use lyricist_entropy::classifier::{self, ClassifierConfig, PatienceMode, TrainedModel};
use lyricist_entropy::corpus::{self, find_name_variants, load_corpus, Corpus, CorpusFormat};
use lyricist_entropy::entropy::{compute_stats, entropy_histogram, LogBase};
use lyricist_entropy::evaluation::{score_run, Averaging, RunScore};
use lyricist_entropy::grouping::{group_kmeans, group_quantile, GroupingMethod, DEFAULT_MAX_ITERS};
use lyricist_entropy::pipeline::{self, report_from_dir, Backend, DatasetStatus, ExperimentConfig};
use lyricist_entropy::report::{self, ExperimentKey};
use lyricist_entropy::sampling::{plan_experiment, ExperimentDataset, SamplingMode};
use lyricist_entropy::synthesis::{generate_corpus, generate_hypothesis_corpus, SynthParams};
use lyricist_entropy::Error;

mod exit;

use exit::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "lyricist-entropy", version, about = "Lyricist-singer entropy experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed for sampling and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Logarithm base for entropies: natural, 2 or 10.
    #[arg(long, global = true)]
    log_base: Option<LogBase>,
    /// `builtin` or `plugin:<command>`.
    #[arg(long, global = true)]
    classifier: Option<Backend>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Datasets trained concurrently (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// How validation-loss increases are counted for early stopping.
    #[arg(long, global = true)]
    patience_mode: Option<PatienceMode>,
    /// Pool confusion counts per group instead of macro-averaging.
    #[arg(long, global = true)]
    pooled: bool,
    /// Drop lyricists with fewer songs.
    #[arg(long, global = true)]
    min_songs: Option<usize>,
    /// Reviewed identity merges, CSV with from_id,to_id.
    #[arg(long, global = true)]
    remap: Option<PathBuf>,
    /// Seconds to wait for each plug-in reply.
    #[arg(long, global = true)]
    plugin_timeout: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus, apply remap and filter, list likely name variants.
    Ingest {
        corpus: PathBuf,
        /// Maximum edit distance between names reported as variants.
        #[arg(long, default_value_t = 2)]
        max_name_distance: usize,
    },
    /// Per-lyricist entropies and histogram.
    Entropy {
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        bin_width: f64,
    },
    /// Group lyricists by entropy.
    Group {
        corpus: PathBuf,
        /// quantile, kmeans, or both when omitted.
        #[arg(long)]
        method: Option<GroupingMethod>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
    },
    /// Plan experiment datasets.
    Sample {
        corpus: PathBuf,
        #[arg(long, default_value = "quantile")]
        method: GroupingMethod,
        #[arg(long, default_value = "homogenous")]
        mode: SamplingMode,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Train the built-in classifier on one dataset and save it.
    Train {
        corpus: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score a dataset's test split, with a saved model or a fresh one.
    Evaluate {
        corpus: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the full experiment; resumes an interrupted run in --out.
    Experiment {
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        fail_fast: bool,
    },
    /// Generate a synthetic corpus.
    Synth {
        /// Parameter file; without it the fixed hypothesis recipe is used.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Rebuild tables, charts and correlations of a run directory.
    Report { run_dir: PathBuf },
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json(e).into())
}

impl Global {
    fn experiment_config(&self, base: ExperimentConfig) -> ExperimentConfig {
        let mut c = base;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(base) = self.log_base {
            c.log_base = base;
        }
        if let Some(backend) = &self.classifier {
            c.backend = backend.clone();
        }
        if let Some(mode) = self.patience_mode {
            c.classifier.patience_mode = mode;
        }
        if self.pooled {
            c.averaging = Averaging::Pooled;
        }
        if let Some(n) = self.min_songs {
            c.min_songs = n;
        }
        if let Some(path) = &self.remap {
            c.remap = Some(path.clone());
        }
        if let Some(secs) = self.plugin_timeout {
            c.plugin_timeout_secs = secs;
        }
        c
    }

    fn load_config(&self, path: Option<&Path>) -> CliResult<ExperimentConfig> {
        let base = match path {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let config = self.experiment_config(base);
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn prepared_corpus(&self, path: &Path, config: &ExperimentConfig) -> CliResult<Corpus> {
        let raw = load_corpus(path, CorpusFormat::from_path(path))?;
        Ok(pipeline::prepare_corpus(&raw, config)?)
    }
}

fn classifier_config(global: &Global, path: Option<&Path>) -> CliResult<ClassifierConfig> {
    let mut config = match path {
        Some(p) => read_json(p)?,
        None => ClassifierConfig::default(),
    };
    if let Some(mode) = global.patience_mode {
        config.patience_mode = mode;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn ingest(g: &Global, corpus_path: &Path, max_name_distance: usize) -> CliResult<()> {
    let config = g.load_config(None)?;
    let raw = load_corpus(corpus_path, CorpusFormat::from_path(corpus_path))?;
    let prepared = pipeline::prepare_corpus(&raw, &config)?;

    let out = g.out.join("corpus.jsonl");
    fs::create_dir_all(&g.out).map_err(|e| Error::Io {
        path: g.out.clone(),
        source: e,
    })?;
    let file = fs::File::create(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    corpus::write_jsonl(&prepared, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;

    let variants = find_name_variants(&raw, max_name_distance);
    let mut csv = String::from("first,second,distance\n");
    for v in &variants.pairs {
        csv.push_str(&format!("{},{},{}\n", v.first, v.second, v.distance));
    }
    write_file(&g.out.join("name_variants.csv"), &csv)?;

    println!(
        "{} songs, {} lyricists, {} singers; after filtering (>= {} songs): {} songs, {} lyricists",
        raw.len(),
        raw.n_lyricists(),
        raw.n_singers(),
        config.min_songs,
        prepared.len(),
        prepared.n_lyricists()
    );
    println!(
        "{} possible name variants ({} lyricists without a name) in {}",
        variants.pairs.len(),
        variants.skipped_unnamed,
        g.out.join("name_variants.csv").display()
    );
    Ok(())
}

fn entropy(g: &Global, corpus_path: &Path, bin_width: f64) -> CliResult<()> {
    let config = g.load_config(None)?;
    let corpus = g.prepared_corpus(corpus_path, &config)?;
    let stats = compute_stats(&corpus, config.log_base);
    let bins = entropy_histogram(&stats, bin_width).map_err(|e| CliError::Usage(e.to_string()))?;
    write_file(&g.out.join("lyricist_entropy.csv"), &report::lyricist_entropy_csv(&stats))?;
    write_file(&g.out.join("entropy_histogram.csv"), &report::histogram_csv(&bins, bin_width))?;
    let zero = stats.iter().filter(|s| s.entropy == 0.0).count();
    let max = stats.iter().map(|s| s.entropy).fold(0.0, f64::max);
    println!("{} lyricists, {zero} with entropy 0, max entropy {max:.3}", stats.len());
    Ok(())
}

fn group(g: &Global, corpus_path: &Path, method: Option<GroupingMethod>, max_iters: usize) -> CliResult<()> {
    let config = g.load_config(None)?;
    let corpus = g.prepared_corpus(corpus_path, &config)?;
    let stats = compute_stats(&corpus, config.log_base);
    let quantile = group_quantile(&stats)?;
    let mut groupings = Vec::new();
    if method != Some(GroupingMethod::Kmeans) {
        groupings.push(quantile.clone());
    }
    if method != Some(GroupingMethod::Quantile) {
        groupings.push(group_kmeans(&stats, &quantile, max_iters)?);
    }
    for grouping in &groupings {
        let m = grouping.method;
        write_file(&g.out.join(format!("groups_{m}.csv")), &report::group_stats_csv(grouping))?;
        write_file(&g.out.join(format!("groups_{m}.txt")), &report::group_stats_text(grouping))?;
        write_file(&g.out.join(format!("assignment_{m}.csv")), &report::assignment_csv(grouping))?;
        print!("{}", report::group_stats_text(grouping));
    }
    Ok(())
}

fn sample(
    g: &Global,
    corpus_path: &Path,
    method: GroupingMethod,
    mode: SamplingMode,
    repetitions: Option<usize>,
) -> CliResult<()> {
    let config = g.load_config(None)?;
    let corpus = g.prepared_corpus(corpus_path, &config)?;
    let stats = compute_stats(&corpus, config.log_base);
    let quantile = group_quantile(&stats)?;
    let grouping = match method {
        GroupingMethod::Quantile => quantile,
        GroupingMethod::Kmeans => group_kmeans(&stats, &quantile, config.kmeans_max_iters)?,
    };
    let key = ExperimentKey { method, mode };
    let datasets = plan_experiment(
        &corpus,
        &grouping,
        mode,
        repetitions,
        pipeline::experiment_seed(config.seed, key),
    )?;
    for d in &datasets {
        write_file(&g.out.join(format!("datasets/{}.json", d.dataset_id)), &d.to_json())?;
    }
    println!("{} datasets written to {}", datasets.len(), g.out.join("datasets").display());
    Ok(())
}

fn print_score(score: &RunScore) {
    println!("{:<24} {:>6} {:>10} {:>10} {:>10}", "lyricist", "group", "precision", "recall", "f1");
    for l in &score.lyricists {
        println!(
            "{:<24} {:>6} {:>10.3} {:>10.3} {:>10.3}",
            l.lyricist_id, l.group, l.metrics.precision, l.metrics.recall, l.metrics.f1
        );
    }
    println!("accuracy {:.3} ({}/{})", score.accuracy(), score.correct, score.total);
}

fn train(g: &Global, corpus_path: &Path, dataset_path: &Path, config_path: Option<&Path>) -> CliResult<()> {
    if let Some(Backend::Plugin { .. }) = g.classifier {
        return Err(CliError::Usage(
            "plug-in models live inside the plug-in process; use `evaluate --classifier plugin:...`".into(),
        ));
    }
    let config = g.load_config(None)?;
    let corpus = g.prepared_corpus(corpus_path, &config)?;
    let dataset: ExperimentDataset = read_json(dataset_path)?;
    let mut cc = classifier_config(g, config_path)?;
    cc.seed = g.seed.unwrap_or(dataset.provenance.seed);
    let model = classifier::train(&dataset, &corpus, &cc)?;
    let path = g.out.join(format!("models/{}.json", dataset.dataset_id));
    write_file(&path, &serde_json::to_string(&model).map_err(Error::Json)?)?;
    println!(
        "stopped after epoch {}, best epoch {} (val loss {:.4}); model saved to {}",
        model.trace.stopped_epoch,
        model.trace.best_epoch,
        model.trace.val_loss.get(model.trace.best_epoch.saturating_sub(1)).copied().unwrap_or(f64::NAN),
        path.display()
    );
    Ok(())
}

fn evaluate(
    g: &Global,
    corpus_path: &Path,
    dataset_path: &Path,
    model_path: Option<&Path>,
    config_path: Option<&Path>,
) -> CliResult<()> {
    let config = g.load_config(None)?;
    let corpus = g.prepared_corpus(corpus_path, &config)?;
    let dataset: ExperimentDataset = read_json(dataset_path)?;
    let score = match (model_path, &config.backend) {
        (Some(path), _) => {
            let mut model: TrainedModel = read_json(path)?;
            if model.candidates != dataset.candidate_ids() {
                return Err(Error::InvalidDataset("model was trained on different candidates".into()).into());
            }
            score_run(&mut model, &dataset, &corpus)?
        }
        (None, Backend::Builtin) => {
            let mut cc = classifier_config(g, config_path)?;
            cc.seed = g.seed.unwrap_or(dataset.provenance.seed);
            let mut model = classifier::train(&dataset, &corpus, &cc)?;
            score_run(&mut model, &dataset, &corpus)?
        }
        (None, Backend::Plugin { command }) => {
            let mut cc = classifier_config(g, config_path)?;
            cc.seed = g.seed.unwrap_or(dataset.provenance.seed);
            let timeout = Duration::from_secs(config.plugin_timeout_secs);
            let mut model = classifier::external_classifier(command, &dataset, &corpus, &cc, timeout)?;
            let score = score_run(&mut model, &dataset, &corpus)?;
            model.shutdown().map_err(Error::from)?;
            score
        }
    };
    let path = g.out.join(format!("scores/{}.json", dataset.dataset_id));
    write_file(&path, &(serde_json::to_string_pretty(&score).map_err(Error::Json)? + "\n"))?;
    print_score(&score);
    Ok(())
}

fn experiment(g: &Global, corpus_path: &Path, config_path: Option<&Path>, fail_fast: bool) -> CliResult<()> {
    let mut config = g.load_config(config_path)?;
    config.fail_fast |= fail_fast;
    let outcome = pipeline::run_experiment(corpus_path, &config, &g.out, g.jobs)?;

    for (key, rows) in &outcome.tables {
        println!("{}", report::metric_table_text(*key, rows));
    }
    for c in &outcome.correlations {
        match (&c.correlation, &c.error) {
            (Some(r), _) => println!(
                "{}: pearson r = {:.3}, spearman rho = {:.3}",
                c.experiment, r.pearson_r, r.spearman_rho
            ),
            (None, Some(e)) => println!("{}: correlation undefined ({e})", c.experiment),
            (None, None) => {}
        }
    }
    let m = &outcome.manifest;
    let failed: Vec<_> = m
        .datasets
        .iter()
        .filter_map(|d| match &d.status {
            DatasetStatus::Failed { reason } => Some((d.dataset_id.as_str(), reason.as_str())),
            _ => None,
        })
        .collect();
    println!(
        "{} datasets ({} trained now, {} failed); results in {}",
        m.datasets.len(),
        outcome.trained_now,
        failed.len(),
        g.out.display()
    );
    if let Some((id, reason)) = failed.first() {
        let message = format!("{} datasets failed, first {id}: {reason}", failed.len());
        return Err(match config.backend {
            Backend::Plugin { .. } => CliError::Plugin(message),
            Backend::Builtin => CliError::Data(message),
        });
    }
    Ok(())
}

fn synth(g: &Global, params_path: Option<&Path>) -> CliResult<()> {
    let corpus = match params_path {
        Some(path) => {
            let mut params: SynthParams = read_json(path)?;
            if let Some(seed) = g.seed {
                params.seed = seed;
            }
            generate_corpus(&params).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => generate_hypothesis_corpus(g.seed.unwrap_or(0)),
    };
    let out = g.out.join("corpus.jsonl");
    fs::create_dir_all(&g.out).map_err(|e| Error::Io {
        path: g.out.clone(),
        source: e,
    })?;
    let file = fs::File::create(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    corpus::write_jsonl(&corpus, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
    println!(
        "{} songs by {} lyricists and {} singers written to {}",
        corpus.len(),
        corpus.n_lyricists(),
        corpus.n_singers(),
        out.display()
    );
    Ok(())
}

fn report_cmd(run_dir: &Path) -> CliResult<()> {
    let (tables, correlations, artifacts) = report_from_dir(run_dir)?;
    for (key, rows) in &tables {
        println!("{}", report::metric_table_text(*key, rows));
    }
    for c in &correlations {
        if let Some(r) = &c.correlation {
            println!("{}: pearson r = {:.3}, spearman rho = {:.3}", c.experiment, r.pearson_r, r.spearman_rho);
        }
    }
    println!("{} report files written under {}", artifacts.len(), run_dir.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest {
            corpus,
            max_name_distance,
        } => ingest(g, corpus, *max_name_distance),
        Command::Entropy { corpus, bin_width } => entropy(g, corpus, *bin_width),
        Command::Group {
            corpus,
            method,
            max_iters,
        } => group(g, corpus, *method, *max_iters),
        Command::Sample {
            corpus,
            method,
            mode,
            repetitions,
        } => sample(g, corpus, *method, *mode, *repetitions),
        Command::Train {
            corpus,
            dataset,
            config,
        } => train(g, corpus, dataset, config.as_deref()),
        Command::Evaluate {
            corpus,
            dataset,
            model,
            config,
        } => evaluate(g, corpus, dataset, model.as_deref(), config.as_deref()),
        Command::Experiment {
            corpus,
            config,
            fail_fast,
        } => experiment(g, corpus, config.as_deref(), *fail_fast),
        Command::Synth { params } => synth(g, params.as_deref()),
        Command::Report { run_dir } => report_cmd(run_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
