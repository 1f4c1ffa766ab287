//! Mini-batch optimization minimizing validation loss, with per-epoch learning
//! rate decay, reduce-on-plateau, early stopping and resumable checkpoints.
//!
//! The epoch loop ([`run_schedule`]) only sees a [`Learner`], so its stopping
//! and learning-rate rules can be exercised without a network. [`Trainer`] is
//! the learner for real models.
//!
//! Shuffling and dropout in epoch `e` draw from streams keyed by
//! `(seed, "shuffle", e)` and `(seed, "dropout", e)`, so a run resumed from a
//! checkpoint after epoch `e - 1` continues exactly as the uninterrupted run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassLabel, NUM_CLASSES};
use crate::embeddings::{EncodedSequence, Vocabulary};
use crate::model::checkpoint::{Checkpoint, CheckpointError};
use crate::model::{loss, Mode, Model, ModelError, ParamStore};
use crate::rng;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Examples per forward call when computing validation loss.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid training schedule: `{field}` {message}")]
    Config { field: &'static str, message: String },
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("{sequences} sequences but {labels} labels")]
    LengthMismatch { sequences: usize, labels: usize },
    #[error("non-finite {quantity} in epoch {epoch}")]
    NonFinite { epoch: usize, quantity: &'static str },
    #[error("gradient shapes do not match the parameters")]
    GradientShape,
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// `w ← w − η g`
    Sgd,
    /// Adam with bias correction.
    #[default]
    Adam,
}

/// Optimizer state. Moments share the parameter layout; SGD keeps none.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    steps: u64,
    first: ParamStore,
    second: ParamStore,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, params: &ParamStore) -> Self {
        let (first, second) = match kind {
            OptimizerKind::Sgd => (ParamStore::new(), ParamStore::new()),
            OptimizerKind::Adam => (params.zeros_like(), params.zeros_like()),
        };
        Optimizer {
            kind,
            steps: 0,
            first,
            second,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One update of every tensor for which `trainable(index)` holds. Rejects
    /// non-finite gradients before touching anything.
    pub fn apply(
        &mut self,
        params: &mut ParamStore,
        grads: &ParamStore,
        learning_rate: f64,
        trainable: impl Fn(usize) -> bool,
    ) -> Result<(), TrainingError> {
        if !params.same_layout(grads) {
            return Err(TrainingError::GradientShape);
        }
        if !grads.is_finite() {
            return Err(TrainingError::NonFinite {
                epoch: 0,
                quantity: "gradient",
            });
        }
        self.steps += 1;
        let t = self.steps as i32;
        let correction1 = 1.0 - ADAM_BETA1.powi(t);
        let correction2 = 1.0 - ADAM_BETA2.powi(t);
        for i in (0..params.len()).filter(|&i| trainable(i)) {
            let g = grads.get(i).data();
            let w = params.get_mut(i).data_mut();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, g) in w.iter_mut().zip(g) {
                        *w -= learning_rate * g;
                    }
                }
                OptimizerKind::Adam => {
                    let m = self.first.get_mut(i).data_mut();
                    let v = self.second.get_mut(i).data_mut();
                    for k in 0..w.len() {
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g[k];
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
                        let m_hat = m[k] / correction1;
                        let v_hat = v[k] / correction2;
                        w[k] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                    }
                }
            }
        }
        Ok(())
    }

    /// Updates the model's trainable parameters; frozen embeddings stay put.
    pub fn step(&mut self, model: &mut Model, grads: &ParamStore, learning_rate: f64) -> Result<(), TrainingError> {
        let trainable: Vec<bool> = (0..model.params().len()).map(|i| model.is_trainable(i)).collect();
        self.apply(model.params_mut(), grads, learning_rate, |i| trainable[i])
    }

    fn save_moments(&self, into: &mut ParamStore) {
        for (prefix, store) in [("adam.m.", &self.first), ("adam.v.", &self.second)] {
            for (name, tensor) in store.iter() {
                into.push(format!("{prefix}{name}"), tensor.clone());
            }
        }
    }

    fn restore(
        kind: OptimizerKind,
        steps: u64,
        params: &ParamStore,
        saved: &ParamStore,
    ) -> Result<Self, TrainingError> {
        let mut optimizer = Optimizer::new(kind, params);
        optimizer.steps = steps;
        for (prefix, store) in [("adam.m.", &mut optimizer.first), ("adam.v.", &mut optimizer.second)] {
            for i in 0..store.len() {
                let name = format!("{prefix}{}", store.name(i));
                let found = saved
                    .find(&name)
                    .ok_or_else(|| TrainingError::Resume(format!("missing optimizer tensor `{name}`")))?;
                if saved.get(found).shape() != store.get(i).shape() {
                    return Err(TrainingError::Resume(format!(
                        "optimizer tensor `{name}` has the wrong shape"
                    )));
                }
                *store.get_mut(i) = saved.get(found).clone();
            }
        }
        Ok(optimizer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSchedule {
    pub initial_learning_rate: f64,
    /// Maximum number of epochs.
    pub epochs: usize,
    pub batch_size: usize,
    /// Multiplies the learning rate after every epoch; 1.0 disables decay.
    pub lr_decay: f64,
    pub reduce_on_plateau: bool,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stopping: bool,
    pub early_stop_patience: usize,
    /// Validation loss must drop below `best - min_delta` to count.
    pub min_delta: f64,
    pub optimizer: OptimizerKind,
    /// Resumable checkpoint written after every epoch when set.
    pub checkpoint_path: Option<PathBuf>,
    pub seed: u64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            initial_learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            lr_decay: 1.0,
            reduce_on_plateau: true,
            plateau_patience: 3,
            plateau_factor: 0.5,
            early_stopping: true,
            early_stop_patience: 10,
            min_delta: 1e-4,
            optimizer: OptimizerKind::Adam,
            checkpoint_path: None,
            seed: 0,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let fail = |field, message: &str| {
            Err(TrainingError::Config {
                field,
                message: message.to_string(),
            })
        };
        if !(self.initial_learning_rate.is_finite() && self.initial_learning_rate > 0.0) {
            return fail("initial_learning_rate", "must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs", "must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be at least 1");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail("lr_decay", "must lie in (0, 1]");
        }
        if self.plateau_patience == 0 {
            return fail("plateau_patience", "must be at least 1");
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return fail("plateau_factor", "must lie in (0, 1)");
        }
        if self.early_stop_patience == 0 {
            return fail("early_stop_patience", "must be at least 1");
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            return fail("min_delta", "must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    /// Rate used during this epoch.
    pub learning_rate: f64,
    pub improved: bool,
    /// Plateau reduction applied after this epoch.
    pub lr_reduced: bool,
    /// Best-model snapshot written to disk after this epoch.
    pub checkpointed: bool,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().rev().find(|r| r.improved)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(TrainingHistory { records })
    }
}

/// Loop bookkeeping; everything needed to continue after a given epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub epochs_completed: usize,
    pub learning_rate: f64,
    pub best_validation_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub epochs_without_improvement: usize,
    pub plateau_wait: usize,
    pub stopped_early: bool,
    pub history: TrainingHistory,
}

impl LoopState {
    pub fn new(schedule: &TrainingSchedule) -> Self {
        LoopState {
            epochs_completed: 0,
            learning_rate: schedule.initial_learning_rate,
            best_validation_loss: None,
            best_epoch: None,
            epochs_without_improvement: 0,
            plateau_wait: 0,
            stopped_early: false,
            history: TrainingHistory::default(),
        }
    }

    pub fn finished(&self, schedule: &TrainingSchedule) -> bool {
        self.stopped_early || self.epochs_completed >= schedule.epochs
    }
}

/// What the epoch loop drives.
pub trait Learner {
    /// Runs one pass over the training data at `learning_rate` and returns the
    /// mean training loss.
    fn train_epoch(&mut self, epoch: usize, learning_rate: f64) -> Result<f64, TrainingError>;

    fn validation_loss(&mut self) -> Result<f64, TrainingError>;

    /// The current parameters are the best so far.
    fn record_best(&mut self, _epoch: usize) -> Result<(), TrainingError> {
        Ok(())
    }

    /// Whether [`Learner::end_epoch`] writes checkpoints.
    fn persists(&self) -> bool {
        false
    }

    fn end_epoch(&mut self, _state: &LoopState) -> Result<(), TrainingError> {
        Ok(())
    }
}

/// Runs epochs until the budget is spent or early stopping fires.
pub fn run_schedule<L: Learner + ?Sized>(
    learner: &mut L,
    schedule: &TrainingSchedule,
    state: &mut LoopState,
) -> Result<(), TrainingError> {
    schedule.validate()?;
    while !state.finished(schedule) {
        let epoch = state.epochs_completed + 1;
        let learning_rate = state.learning_rate;
        let train_loss = learner.train_epoch(epoch, learning_rate)?;
        if !train_loss.is_finite() {
            return Err(TrainingError::NonFinite {
                epoch,
                quantity: "training loss",
            });
        }
        let validation_loss = learner.validation_loss()?;
        if !validation_loss.is_finite() {
            return Err(TrainingError::NonFinite {
                epoch,
                quantity: "validation loss",
            });
        }

        let improved = state
            .best_validation_loss
            .is_none_or(|best| validation_loss < best - schedule.min_delta);
        if improved {
            state.best_validation_loss = Some(validation_loss);
            state.best_epoch = Some(epoch);
            state.epochs_without_improvement = 0;
            state.plateau_wait = 0;
            learner.record_best(epoch)?;
        } else {
            state.epochs_without_improvement += 1;
            state.plateau_wait += 1;
        }

        let mut next_rate = learning_rate;
        let lr_reduced = !improved && schedule.reduce_on_plateau && state.plateau_wait >= schedule.plateau_patience;
        if lr_reduced {
            next_rate *= schedule.plateau_factor;
            state.plateau_wait = 0;
        }
        next_rate *= schedule.lr_decay;
        let stopped_early = schedule.early_stopping && state.epochs_without_improvement >= schedule.early_stop_patience;

        log::info!(
            "epoch {epoch}: train {train_loss:.5} validation {validation_loss:.5} lr {learning_rate:e}{}{}",
            if improved { " *" } else { "" },
            if stopped_early { " (early stop)" } else { "" }
        );
        state.history.records.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
            learning_rate,
            improved,
            lr_reduced,
            checkpointed: improved && learner.persists(),
            stopped_early,
        });
        state.epochs_completed = epoch;
        state.learning_rate = next_rate;
        state.stopped_early = stopped_early;
        learner.end_epoch(state)?;
    }
    Ok(())
}

/// Encoded sequences with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<EncodedSequence>,
    pub labels: Vec<ClassLabel>,
}

impl Dataset {
    pub fn new(sequences: Vec<EncodedSequence>, labels: Vec<ClassLabel>) -> Result<Self, TrainingError> {
        if sequences.len() != labels.len() {
            return Err(TrainingError::LengthMismatch {
                sequences: sequences.len(),
                labels: labels.len(),
            });
        }
        Ok(Dataset { sequences, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Mean loss of the model on a dataset, eval mode.
pub fn dataset_loss(model: &Model, data: &Dataset) -> Result<f64, TrainingError> {
    if data.is_empty() {
        return Err(TrainingError::EmptySet("evaluation"));
    }
    let mut total = 0.0;
    for (seqs, labels) in data.sequences.chunks(EVAL_CHUNK).zip(data.labels.chunks(EVAL_CHUNK)) {
        let probs = model.forward_eval(seqs)?;
        total += loss(&probs, labels)?.value * labels.len() as f64;
    }
    Ok(total / data.len() as f64)
}

/// Eval-mode probabilities for every sequence.
pub fn predict_all(model: &Model, sequences: &[EncodedSequence]) -> Result<Vec<[f64; NUM_CLASSES]>, ModelError> {
    let mut out = Vec::with_capacity(sequences.len());
    for chunk in sequences.chunks(EVAL_CHUNK) {
        out.extend(model.forward_eval(chunk)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ResumeState {
    loop_state: LoopState,
    optimizer: OptimizerKind,
    optimizer_steps: u64,
    schedule: TrainingSchedule,
}

struct ModelLearner {
    model: Model,
    optimizer: Optimizer,
    best: ParamStore,
    train: Dataset,
    validation: Dataset,
    batch_size: usize,
    seed: u64,
    checkpoint: Option<(PathBuf, Vocabulary)>,
    metadata: BTreeMap<String, String>,
    schedule: TrainingSchedule,
}

impl Learner for ModelLearner {
    fn train_epoch(&mut self, epoch: usize, learning_rate: f64) -> Result<f64, TrainingError> {
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut rng::stream(self.seed, "shuffle", epoch as u64));
        let mut dropout = rng::stream(self.seed, "dropout", epoch as u64);
        let mut total = 0.0;
        for chunk in order.chunks(self.batch_size) {
            let batch: Vec<EncodedSequence> = chunk.iter().map(|&i| self.train.sequences[i].clone()).collect();
            let labels: Vec<ClassLabel> = chunk.iter().map(|&i| self.train.labels[i]).collect();
            let (probs, cache) = self.model.forward(&batch, Mode::Train(&mut dropout))?;
            let batch_loss = loss(&probs, &labels)?.value;
            if !batch_loss.is_finite() {
                return Err(TrainingError::NonFinite {
                    epoch,
                    quantity: "training loss",
                });
            }
            total += batch_loss * chunk.len() as f64;
            let grads = self.model.backward(&cache, &labels)?;
            self.optimizer
                .step(&mut self.model, &grads, learning_rate)
                .map_err(|e| match e {
                    TrainingError::NonFinite { quantity, .. } => TrainingError::NonFinite { epoch, quantity },
                    other => other,
                })?;
        }
        Ok(total / self.train.len() as f64)
    }

    fn validation_loss(&mut self) -> Result<f64, TrainingError> {
        dataset_loss(&self.model, &self.validation)
    }

    fn record_best(&mut self, _epoch: usize) -> Result<(), TrainingError> {
        self.best = self.model.params().clone();
        Ok(())
    }

    fn persists(&self) -> bool {
        self.checkpoint.is_some()
    }

    fn end_epoch(&mut self, state: &LoopState) -> Result<(), TrainingError> {
        let Some((path, vocabulary)) = &self.checkpoint else {
            return Ok(());
        };
        let mut auxiliary = ParamStore::new();
        self.optimizer.save_moments(&mut auxiliary);
        for (name, tensor) in self.best.iter() {
            auxiliary.push(format!("best.{name}"), tensor.clone());
        }
        let resume = ResumeState {
            loop_state: state.clone(),
            optimizer: self.optimizer.kind(),
            optimizer_steps: self.optimizer.steps(),
            // Where the checkpoint lives is not part of its content.
            schedule: TrainingSchedule {
                checkpoint_path: None,
                ..self.schedule.clone()
            },
        };
        let checkpoint = Checkpoint {
            model: self.model.clone(),
            vocabulary: vocabulary.clone(),
            auxiliary,
            metadata: self.metadata.clone(),
            state: Some(serde_json::to_value(&resume).expect("state serializes")),
        };
        checkpoint.save(path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub descriptor: String,
    pub seed: u64,
    pub epochs_completed: usize,
    pub best_epoch: Option<usize>,
    pub best_validation_loss: Option<f64>,
    pub final_learning_rate: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model,
    pub history: TrainingHistory,
    pub summary: TrainingSummary,
}

/// Owns a model and its data for the duration of training.
pub struct Trainer {
    learner: ModelLearner,
    state: LoopState,
}

impl Trainer {
    pub fn new(
        model: Model,
        train: Dataset,
        validation: Dataset,
        schedule: TrainingSchedule,
    ) -> Result<Self, TrainingError> {
        schedule.validate()?;
        if train.is_empty() {
            return Err(TrainingError::EmptySet("training"));
        }
        if validation.is_empty() {
            return Err(TrainingError::EmptySet("validation"));
        }
        let state = LoopState::new(&schedule);
        let optimizer = Optimizer::new(schedule.optimizer, model.params());
        let best = model.params().clone();
        Ok(Trainer {
            learner: ModelLearner {
                model,
                optimizer,
                best,
                train,
                validation,
                batch_size: schedule.batch_size,
                seed: schedule.seed,
                checkpoint: None,
                metadata: BTreeMap::new(),
                schedule,
            },
            state,
        })
    }

    /// Writes a resumable checkpoint to `schedule.checkpoint_path` after every
    /// epoch. Without a vocabulary no checkpoint can be written.
    pub fn with_vocabulary(mut self, vocabulary: Vocabulary) -> Self {
        if let Some(path) = self.learner.schedule.checkpoint_path.clone() {
            self.learner.checkpoint = Some((path, vocabulary));
        }
        self
    }

    /// String metadata stored in every checkpoint this trainer writes.
    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.learner.metadata = metadata;
        self
    }

    /// Continues from a checkpoint written by a previous run. `schedule` may
    /// raise the epoch budget; the learning rate and counters come from the
    /// checkpoint.
    pub fn resume(
        checkpoint: Checkpoint,
        train: Dataset,
        validation: Dataset,
        schedule: TrainingSchedule,
    ) -> Result<Self, TrainingError> {
        let value = checkpoint
            .state
            .clone()
            .ok_or_else(|| TrainingError::Resume("checkpoint holds no training state".into()))?;
        let saved: ResumeState =
            serde_json::from_value(value).map_err(|e| TrainingError::Resume(format!("training state: {e}")))?;
        if saved.optimizer != schedule.optimizer {
            return Err(TrainingError::Resume(format!(
                "checkpoint used {:?}, schedule asks for {:?}",
                saved.optimizer, schedule.optimizer
            )));
        }
        if saved.schedule.seed != schedule.seed || saved.schedule.batch_size != schedule.batch_size {
            return Err(TrainingError::Resume(
                "seed and batch size must match the original run".into(),
            ));
        }
        let mut trainer = Trainer::new(checkpoint.model, train, validation, schedule)?;
        let learner = &mut trainer.learner;
        learner.optimizer = Optimizer::restore(
            saved.optimizer,
            saved.optimizer_steps,
            learner.model.params(),
            &checkpoint.auxiliary,
        )?;
        for i in 0..learner.best.len() {
            let name = format!("best.{}", learner.best.name(i));
            let found = checkpoint
                .auxiliary
                .find(&name)
                .ok_or_else(|| TrainingError::Resume(format!("missing tensor `{name}`")))?;
            *learner.best.get_mut(i) = checkpoint.auxiliary.get(found).clone();
        }
        trainer.learner.metadata = checkpoint.metadata;
        trainer.learner.checkpoint = trainer
            .learner
            .schedule
            .checkpoint_path
            .clone()
            .map(|p| (p, checkpoint.vocabulary));
        trainer.state = saved.loop_state;
        Ok(trainer)
    }

    pub fn state(&self) -> &LoopState {
        &self.state
    }

    /// Trains to completion and returns the best model.
    pub fn run(self) -> Result<TrainingOutcome, TrainingError> {
        let Trainer { mut learner, mut state } = self;
        let schedule = learner.schedule.clone();
        run_schedule(&mut learner, &schedule, &mut state)?;
        let mut model = learner.model;
        *model.params_mut() = learner.best;
        let summary = TrainingSummary {
            descriptor: model.config().descriptor(),
            seed: schedule.seed,
            epochs_completed: state.epochs_completed,
            best_epoch: state.best_epoch,
            best_validation_loss: state.best_validation_loss,
            final_learning_rate: state.learning_rate,
            stopped_early: state.stopped_early,
        };
        Ok(TrainingOutcome {
            model,
            history: state.history,
            summary,
        })
    }
}

/// Trains `model` from scratch under `schedule`.
pub fn train(
    model: Model,
    train_set: Dataset,
    validation_set: Dataset,
    schedule: TrainingSchedule,
) -> Result<TrainingOutcome, TrainingError> {
    Trainer::new(model, train_set, validation_set, schedule)?.run()
}

/// Writes the history as JSON lines and the summary as pretty JSON.
pub fn write_history(outcome: &TrainingOutcome, history_path: &Path, summary_path: &Path) -> Result<(), TrainingError> {
    let write = |path: &Path, text: &str| {
        fs::File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|source| TrainingError::Io {
                path: path.to_path_buf(),
                source,
            })
    };
    write(history_path, &outcome.history.to_jsonl())?;
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes") + "\n";
    write(summary_path, &summary)
}
