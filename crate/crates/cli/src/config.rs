//! Run configuration: a TOML file, overridden by `--set section.key=value`
//! pairs and then by dedicated flags. Every field has a default, so an empty
//! file (or none) is a valid configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use codemix_core::augment::{AugmentConfig, AugmentStage, EditCount};
use codemix_core::model::{CellKind, ModelConfig};
use codemix_core::pipeline::ExperimentConfig;
use codemix_core::rng;
use codemix_core::training::{OptimizerKind, TrainingSchedule};
use codemix_core::ClassLabel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives every random stream: split, augmentation, initialization,
    /// shuffling and dropout.
    pub seed: u64,
    pub preprocess: PreprocessSection,
    pub split: SplitSection,
    pub augment: AugmentSection,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub grid: GridSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    /// One stopword per line; the shipped list when unset.
    pub stopwords: Option<PathBuf>,
    /// `source<TAB>target` lines; the shipped dictionary when unset.
    pub dictionary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            test_fraction: 0.22,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Multipliers {
    pub non_offensive: usize,
    pub offensive: usize,
    pub hate_inducing: usize,
}

impl Default for Multipliers {
    fn default() -> Self {
        Multipliers {
            non_offensive: 4,
            offensive: 7,
            hate_inducing: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    /// Whether `grid` augments the training split.
    pub enabled: bool,
    pub multipliers: Multipliers,
    /// Edits per operation as a fraction of message length, at least one.
    pub edit_rate: f64,
    /// Fixed edit count; overrides `edit_rate` when set.
    pub edits: Option<usize>,
    pub deletion_probability: f64,
    /// `after` (augment preprocessed tokens) or `before` (augment raw text).
    pub stage: String,
    /// Extra synonym lexicon merged into the shipped one.
    pub synonyms: Option<PathBuf>,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            enabled: true,
            multipliers: Multipliers::default(),
            edit_rate: 0.1,
            edits: None,
            deletion_probability: 0.1,
            stage: "after".into(),
            synonyms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub cell: CellKind,
    pub hidden_units: usize,
    pub embedding_dimension: usize,
    pub max_length: usize,
    pub dense_layers: Vec<usize>,
    pub recurrent_dropout: f64,
    pub embeddings_trainable: bool,
    /// Pretrained vectors, `token v1 … vd` per line.
    pub embeddings: Option<PathBuf>,
    pub min_frequency: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            cell: m.cell,
            hidden_units: m.hidden_units,
            embedding_dimension: m.embedding_dimension,
            max_length: m.max_length,
            dense_layers: m.dense_layers,
            recurrent_dropout: m.recurrent_dropout,
            embeddings_trainable: m.embeddings_trainable,
            embeddings: None,
            min_frequency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_decay: f64,
    pub reduce_on_plateau: bool,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stopping: bool,
    pub early_stop_patience: usize,
    pub min_delta: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let s = TrainingSchedule::default();
        TrainingSection {
            learning_rate: s.initial_learning_rate,
            epochs: s.epochs,
            batch_size: s.batch_size,
            lr_decay: s.lr_decay,
            reduce_on_plateau: s.reduce_on_plateau,
            plateau_patience: s.plateau_patience,
            plateau_factor: s.plateau_factor,
            early_stopping: s.early_stopping,
            early_stop_patience: s.early_stop_patience,
            min_delta: s.min_delta,
            optimizer: s.optimizer,
        }
    }
}

/// Lists of values to sweep; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub cell: Vec<CellKind>,
    pub hidden_units: Vec<usize>,
    pub embedding_dimension: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub recurrent_dropout: Vec<f64>,
    pub augment: Vec<bool>,
}

/// Parses `key=value`; the value is read as a TOML value and falls back to a
/// bare string.
fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{raw}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Usage(format!("bad override key `{key}`")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((path, parsed))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty key");
    let mut node = table;
    for part in parents {
        let entry = node
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` is not a section")))?;
    }
    node.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// File (when given) < `overrides` in order. The result is validated.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for raw in overrides {
            let (key, value) = parse_override(raw)?;
            apply_override(&mut table, &key, value)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        rng::fingerprint(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("config_hash".to_string(), self.hash()),
            ("seed".to_string(), self.seed.to_string()),
        ]
    }

    pub fn metadata(&self) -> BTreeMap<String, String> {
        self.provenance().into_iter().collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, message: &str| Err(CliError::Config(format!("`{field}` {message}")));
        let fraction_ok = |f: f64| f > 0.0 && f < 1.0;
        if !fraction_ok(self.split.test_fraction) {
            return fail("split.test_fraction", "must lie in (0, 1)");
        }
        if !fraction_ok(self.split.validation_fraction) {
            return fail("split.validation_fraction", "must lie in (0, 1)");
        }
        if self.augment.stage != "after" && self.augment.stage != "before" {
            return fail("augment.stage", "must be `after` or `before`");
        }
        let m = &self.augment.multipliers;
        for (name, value) in [
            ("augment.multipliers.non_offensive", m.non_offensive),
            ("augment.multipliers.offensive", m.offensive),
            ("augment.multipliers.hate_inducing", m.hate_inducing),
        ] {
            if value == 0 {
                return fail(name, "must be at least 1");
            }
        }
        if !(self.augment.edit_rate.is_finite() && self.augment.edit_rate >= 0.0) {
            return fail("augment.edit_rate", "must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.augment.deletion_probability) {
            return fail("augment.deletion_probability", "must lie in [0, 1]");
        }
        let model = &self.model;
        if model.hidden_units == 0 {
            return fail("model.hidden_units", "must be positive");
        }
        if model.embedding_dimension == 0 {
            return fail("model.embedding_dimension", "must be positive");
        }
        if model.max_length == 0 {
            return fail("model.max_length", "must be positive");
        }
        if model.dense_layers.last() != Some(&3) || model.dense_layers.contains(&0) {
            return fail("model.dense_layers", "must be positive widths ending in 3");
        }
        if !(0.0..1.0).contains(&model.recurrent_dropout) {
            return fail("model.recurrent_dropout", "must lie in [0, 1)");
        }
        if model.min_frequency == 0 {
            return fail("model.min_frequency", "must be at least 1");
        }
        self.schedule(None).validate().map_err(|e| match e {
            codemix_core::training::TrainingError::Config { field, message } => {
                let field = if field == "initial_learning_rate" {
                    "learning_rate"
                } else {
                    field
                };
                CliError::Config(format!("`training.{field}` {message}"))
            }
            other => CliError::Config(other.to_string()),
        })?;
        for &lr in &self.grid.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return fail("grid.learning_rate", "values must be positive");
            }
        }
        if self.grid.hidden_units.contains(&0) {
            return fail("grid.hidden_units", "values must be positive");
        }
        if self.grid.embedding_dimension.contains(&0) {
            return fail("grid.embedding_dimension", "values must be positive");
        }
        if self.grid.recurrent_dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return fail("grid.recurrent_dropout", "values must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            cell: m.cell,
            hidden_units: m.hidden_units,
            embedding_dimension: m.embedding_dimension,
            max_length: m.max_length,
            dense_layers: m.dense_layers.clone(),
            recurrent_dropout: m.recurrent_dropout,
            embeddings_trainable: m.embeddings_trainable,
            seed: self.seed,
        }
    }

    pub fn schedule(&self, checkpoint_path: Option<PathBuf>) -> TrainingSchedule {
        let t = &self.training;
        TrainingSchedule {
            initial_learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr_decay: t.lr_decay,
            reduce_on_plateau: t.reduce_on_plateau,
            plateau_patience: t.plateau_patience,
            plateau_factor: t.plateau_factor,
            early_stopping: t.early_stopping,
            early_stop_patience: t.early_stop_patience,
            min_delta: t.min_delta,
            optimizer: t.optimizer,
            checkpoint_path,
            seed: self.seed,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        let a = &self.augment;
        AugmentConfig {
            edits: a.edits.map_or(EditCount::Rate(a.edit_rate), EditCount::Fixed),
            deletion_probability: a.deletion_probability,
            multipliers: BTreeMap::from([
                (ClassLabel::NonOffensive, a.multipliers.non_offensive),
                (ClassLabel::Offensive, a.multipliers.offensive),
                (ClassLabel::HateInducing, a.multipliers.hate_inducing),
            ]),
            seed: self.seed,
            stage: if a.stage == "before" {
                AugmentStage::BeforePreprocess
            } else {
                AugmentStage::AfterPreprocess
            },
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model_config(),
            schedule: self.schedule(None),
            augment: self.augment.enabled.then(|| self.augment_config()),
            validation_fraction: self.split.validation_fraction,
            min_frequency: self.model.min_frequency,
        }
    }

    /// One configuration per point of the grid, in row-major order with the
    /// last-listed dimension varying fastest.
    pub fn grid_cells(&self) -> Vec<RunConfig> {
        fn expand<T: Clone>(cells: Vec<RunConfig>, values: &[T], set: impl Fn(&mut RunConfig, T)) -> Vec<RunConfig> {
            if values.is_empty() {
                return cells;
            }
            cells
                .into_iter()
                .flat_map(|cell| {
                    values
                        .iter()
                        .map(|v| {
                            let mut next = cell.clone();
                            set(&mut next, v.clone());
                            next
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        let mut base = self.clone();
        base.grid = GridSection::default();
        let g = &self.grid;
        let mut cells = vec![base];
        cells = expand(cells, &g.cell, |c, v| c.model.cell = v);
        cells = expand(cells, &g.hidden_units, |c, v| c.model.hidden_units = v);
        cells = expand(cells, &g.embedding_dimension, |c, v| c.model.embedding_dimension = v);
        cells = expand(cells, &g.learning_rate, |c, v| c.training.learning_rate = v);
        cells = expand(cells, &g.recurrent_dropout, |c, v| c.model.recurrent_dropout = v);
        cells = expand(cells, &g.augment, |c, v| c.augment.enabled = v);
        cells
    }

    /// Short, file-name-safe tag for a grid cell.
    pub fn cell_tag(&self) -> String {
        format!(
            "{}-u{}-d{}-lr{}-do{}-{}",
            self.model.cell,
            self.model.hidden_units,
            self.model.embedding_dimension,
            self.training.learning_rate,
            self.model.recurrent_dropout,
            if self.augment.enabled { "aug" } else { "noaug" }
        )
    }
}
