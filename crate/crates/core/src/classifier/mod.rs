//! Lyric -> lyricist classification over the candidates of one dataset.
//!
//! The built-in model is TF-IDF + multinomial logistic regression trained by
//! full-batch gradient descent. Other models (e.g. a fine-tuned transformer)
//! run out of process behind the [`plugin`] protocol; both expose
//! [`LyricistModel`].

pub mod features;
pub mod logreg;
pub mod plugin;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::sampling::{ExperimentDataset, Split};

pub use features::{SparseRow, TfidfVectorizer};
pub use logreg::SoftmaxRegression;
pub use plugin::{external_classifier, PluginModel};
pub use tokenize::tokenize;

pub const DEFAULT_MAX_TOKENS: usize = 512;

/// How validation-loss increases are counted toward stopping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatienceMode {
    /// Every increase counts, whether or not increases are adjacent.
    #[default]
    Cumulative,
    /// The count resets whenever the loss does not increase.
    Consecutive,
}

impl FromStr for PatienceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cumulative" => Ok(PatienceMode::Cumulative),
            "consecutive" => Ok(PatienceMode::Consecutive),
            other => Err(format!("unknown patience mode {other:?}")),
        }
    }
}

impl fmt::Display for PatienceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatienceMode::Cumulative => "cumulative",
            PatienceMode::Consecutive => "consecutive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub max_tokens: usize,
    pub max_epochs: usize,
    pub patience_events: usize,
    pub patience_mode: PatienceMode,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    /// Retry an epoch at half the learning rate when its step would raise
    /// the training objective.
    pub halve_lr_on_increase: bool,
    /// Passed through to plug-ins; built-in training starts from zero weights
    /// and has no randomness.
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            max_tokens: DEFAULT_MAX_TOKENS,
            max_epochs: 200,
            patience_events: 3,
            patience_mode: PatienceMode::Cumulative,
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            halve_lr_on_increase: false,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(Error::InvalidParams("max_tokens must be at least 1".into()));
        }
        if self.patience_events == 0 {
            return Err(Error::InvalidParams("patience_events must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParams("max_epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2_penalty >= 0.0) {
            return Err(Error::InvalidParams(
                "learning_rate must be positive and l2_penalty non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Validation-loss stopping rule. An event is an epoch whose loss strictly
/// exceeds the previous epoch's; training stops once `patience` events
/// have been counted.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    mode: PatienceMode,
    events: usize,
    previous: Option<f64>,
    best: Option<(usize, f64)>,
}

impl EarlyStopping {
    pub fn new(patience: usize, mode: PatienceMode) -> Self {
        EarlyStopping {
            patience,
            mode,
            events: 0,
            previous: None,
            best: None,
        }
    }

    /// Records the validation loss of 1-based `epoch`. Returns true when
    /// training should stop after this epoch.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if self.best.map_or(true, |(_, b)| loss < b) {
            self.best = Some((epoch, loss));
        }
        match self.previous {
            Some(prev) if loss > prev => self.events += 1,
            Some(_) if self.mode == PatienceMode::Consecutive => self.events = 0,
            _ => {}
        }
        self.previous = Some(loss);
        self.events >= self.patience
    }

    pub fn is_best(&self, epoch: usize) -> bool {
        self.best.map_or(false, |(e, _)| e == epoch)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }

    pub fn events(&self) -> usize {
        self.events
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

/// Anything that maps lyrics to a probability vector over the candidates.
pub trait LyricistModel {
    fn n_candidates(&self) -> usize;

    fn predict_batch(&mut self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub candidates: Vec<String>,
    pub vectorizer: TfidfVectorizer,
    pub model: SoftmaxRegression,
    pub trace: TrainingTrace,
}

impl TrainedModel {
    pub fn predict(&self, lyrics: &str) -> Vec<f64> {
        self.model.predict_proba(&self.vectorizer.transform(lyrics))
    }
}

impl LyricistModel for TrainedModel {
    fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    fn predict_batch(&mut self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.predict(t)).collect())
    }
}

/// Full-batch gradient descent with validation-loss early stopping.
/// Returns the weights of the epoch with the lowest validation loss.
pub fn fit_softmax(
    train: (&[SparseRow], &[usize]),
    val: (&[SparseRow], &[usize]),
    n_classes: usize,
    n_features: usize,
    config: &ClassifierConfig,
) -> (SoftmaxRegression, TrainingTrace) {
    let (train_rows, train_labels) = train;
    let (val_rows, val_labels) = val;
    let mut model = SoftmaxRegression::zeros(n_classes, n_features);
    let mut best = model.clone();
    let mut stopper = EarlyStopping::new(config.patience_events, config.patience_mode);
    let mut trace = TrainingTrace::default();
    let mut lr = config.learning_rate;

    for epoch in 1..=config.max_epochs {
        let (current, grad) = model.objective_and_gradient(train_rows, train_labels, config.l2_penalty);
        let mut next = model.clone();
        next.step(&grad, lr);
        if config.halve_lr_on_increase {
            let mut attempts = 0;
            while next.objective(train_rows, train_labels, config.l2_penalty) > current && attempts < 60 {
                lr *= 0.5;
                next = model.clone();
                next.step(&grad, lr);
                attempts += 1;
            }
        }
        model = next;

        trace
            .train_loss
            .push(model.objective(train_rows, train_labels, config.l2_penalty));
        let val_loss = model.cross_entropy(val_rows, val_labels);
        trace.val_loss.push(val_loss);

        let stop = stopper.observe(epoch, val_loss);
        if stopper.is_best(epoch) {
            best = model.clone();
        }
        trace.stopped_epoch = epoch;
        if stop {
            break;
        }
    }
    trace.best_epoch = stopper.best_epoch().unwrap_or(0);
    (best, trace)
}

fn texts<'a>(corpus: &'a Corpus, pairs: &[(&str, usize)]) -> Result<(Vec<&'a str>, Vec<usize>)> {
    pairs
        .iter()
        .map(|&(id, label)| {
            corpus
                .song(id)
                .map(|s| (s.lyrics.as_str(), label))
                .ok_or_else(|| Error::UnknownSong(id.to_string()))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Trains the built-in classifier on a dataset's train split. TF-IDF is
/// fitted on the train split only.
pub fn train(dataset: &ExperimentDataset, corpus: &Corpus, config: &ClassifierConfig) -> Result<TrainedModel> {
    config.validate()?;
    dataset.validate(corpus)?;

    let (train_texts, train_labels) = texts(corpus, &dataset.labelled(Split::Train))?;
    let (val_texts, val_labels) = texts(corpus, &dataset.labelled(Split::Validation))?;

    let vectorizer = TfidfVectorizer::fit(&train_texts, config.max_tokens)?;
    let train_rows: Vec<SparseRow> = train_texts.iter().map(|t| vectorizer.transform(t)).collect();
    let val_rows: Vec<SparseRow> = val_texts.iter().map(|t| vectorizer.transform(t)).collect();

    let n_classes = dataset.candidates.len();
    let (model, trace) = fit_softmax(
        (&train_rows, &train_labels),
        (&val_rows, &val_labels),
        n_classes,
        vectorizer.n_features(),
        config,
    );
    Ok(TrainedModel {
        candidates: dataset.candidate_ids().into_iter().map(String::from).collect(),
        vectorizer,
        model,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(losses: &[f64], patience: usize, mode: PatienceMode) -> (usize, usize) {
        let mut s = EarlyStopping::new(patience, mode);
        let mut stopped = losses.len();
        for (i, &l) in losses.iter().enumerate() {
            if s.observe(i + 1, l) {
                stopped = i + 1;
                break;
            }
        }
        (stopped, s.best_epoch().unwrap())
    }

    #[test]
    fn cumulative_events() {
        // Increases at epochs 3, 5 and 7; the lowest loss is at epoch 4.
        let trace = [5.0, 4.0, 4.5, 3.0, 3.2, 3.1, 3.3];
        assert_eq!(run(&trace, 3, PatienceMode::Cumulative), (7, 4));
        // No two increases are adjacent.
        assert_eq!(run(&trace, 2, PatienceMode::Consecutive), (7, 4));
    }

    #[test]
    fn monotone_sequences() {
        let down: Vec<f64> = (0..50).map(|i| 10.0 - i as f64 * 0.1).collect();
        assert_eq!(run(&down, 3, PatienceMode::Cumulative), (50, 50));
        let up: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        assert_eq!(run(&up, 3, PatienceMode::Cumulative), (4, 1));
        assert_eq!(run(&up, 3, PatienceMode::Consecutive), (4, 1));
    }

    #[test]
    fn consecutive_resets() {
        let trace = [1.0, 2.0, 3.0, 2.5, 3.0, 4.0, 5.0];
        assert_eq!(run(&trace, 3, PatienceMode::Consecutive).0, 7);
        assert_eq!(run(&trace, 3, PatienceMode::Cumulative).0, 5);
    }

    #[test]
    fn equal_loss_is_not_an_event() {
        let mut s = EarlyStopping::new(1, PatienceMode::Cumulative);
        assert!(!s.observe(1, 2.0));
        assert!(!s.observe(2, 2.0));
        assert_eq!(s.events(), 0);
        assert_eq!(s.best_epoch(), Some(1));
    }

    #[test]
    fn config_validation() {
        assert!(ClassifierConfig::default().validate().is_ok());
        let bad = ClassifierConfig {
            patience_events: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ClassifierConfig {
            max_tokens: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
