//! Recurrent message classifier: embedding lookup → recurrent encoder
//! (SimpleRNN, LSTM, GRU or bidirectional LSTM) → ReLU dense layers → softmax
//! over the three classes, with exact forward, loss and backward passes.
//!
//! The encoder reads only the first `true_length` positions of each encoded
//! sequence, so trailing padding never affects the output. A bidirectional
//! encoder concatenates the final forward state with the final state of the
//! backward pass, which starts at the last real token.

mod cell;
pub mod checkpoint;
mod params;

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassLabel, NUM_CLASSES};
use crate::embeddings::EncodedSequence;
use crate::tensor::{mat_vec_acc, outer_acc, softmax, vec_mat_acc, Tensor};

pub use cell::DirectionTrace;
use cell::{DirectionLayout, GateIndex, Recurrence};
pub use params::ParamStore;

/// Probabilities are clipped to `[EPSILON, 1 - EPSILON]` before the log.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("embedding matrix has shape {found:?}, expected (vocab, {expected})")]
    EmbeddingShape { found: Vec<usize>, expected: usize },
    #[error("token index {index} out of range for vocabulary of {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },
    #[error("{probabilities} probability rows but {labels} labels")]
    LengthMismatch { probabilities: usize, labels: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("forward cache does not belong to the current parameters")]
    StaleCache,
    #[error("dropout masks do not match the batch")]
    MaskShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    SimpleRNN,
    LSTM,
    GRU,
    BiLSTM,
}

impl CellKind {
    pub const ALL: [CellKind; 4] = [CellKind::SimpleRNN, CellKind::LSTM, CellKind::GRU, CellKind::BiLSTM];

    pub fn directions(self) -> usize {
        if self == CellKind::BiLSTM {
            2
        } else {
            1
        }
    }

    fn recurrence(self) -> Recurrence {
        match self {
            CellKind::SimpleRNN => Recurrence::Simple,
            CellKind::LSTM | CellKind::BiLSTM => Recurrence::Lstm,
            CellKind::GRU => Recurrence::Gru,
        }
    }

    pub fn gates(self) -> usize {
        self.recurrence().gate_names().len()
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simplernn" | "rnn" => Ok(CellKind::SimpleRNN),
            "lstm" => Ok(CellKind::LSTM),
            "gru" => Ok(CellKind::GRU),
            "bilstm" => Ok(CellKind::BiLSTM),
            _ => Err(format!("unknown cell kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub cell: CellKind,
    pub hidden_units: usize,
    pub embedding_dimension: usize,
    pub max_length: usize,
    /// Dense layer widths; the last must be the class count.
    pub dense_layers: Vec<usize>,
    pub recurrent_dropout: f64,
    pub embeddings_trainable: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            cell: CellKind::BiLSTM,
            hidden_units: 32,
            embedding_dimension: 100,
            max_length: 200,
            dense_layers: vec![64, NUM_CLASSES],
            recurrent_dropout: 0.2,
            embeddings_trainable: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.hidden_units == 0 {
            return fail("hidden_units must be positive");
        }
        if self.embedding_dimension == 0 {
            return fail("embedding_dimension must be positive");
        }
        if self.max_length == 0 {
            return fail("max_length must be positive");
        }
        if self.dense_layers.last() != Some(&NUM_CLASSES) {
            return fail("dense_layers must end with width 3");
        }
        if self.dense_layers.contains(&0) {
            return fail("dense layer widths must be positive");
        }
        if !(0.0..1.0).contains(&self.recurrent_dropout) {
            return fail("recurrent_dropout must lie in [0, 1)");
        }
        Ok(())
    }

    /// Short human-readable architecture tag, e.g. `BiLSTM-32/d100`.
    pub fn descriptor(&self) -> String {
        format!("{}-{}/d{}", self.cell, self.hidden_units, self.embedding_dimension)
    }

    /// Width of the encoder output fed to the first dense layer.
    pub fn encoder_width(&self) -> usize {
        self.hidden_units * self.cell.directions()
    }
}

#[derive(Debug, Clone)]
struct Layout {
    embedding: usize,
    directions: Vec<DirectionLayout>,
    dense: Vec<(usize, usize)>,
}

/// Parameters plus the architecture that gives them meaning.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
    generation: u64,
}

fn glorot_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-limit..=limit)).collect())
}

/// Square matrix with orthonormal columns: Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Tensor {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..size)
            .map(|_| (0..size).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let mut degenerate = false;
        for j in 0..size {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                    *a -= dot * b;
                }
            }
            let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-10 {
                degenerate = true;
                break;
            }
            cols[j].iter_mut().for_each(|v| *v /= norm);
        }
        if degenerate {
            continue;
        }
        let mut data = vec![0.0; size * size];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * size + j] = *v;
            }
        }
        return Tensor::from_vec(&[size, size], data);
    }
}

fn build_layout(config: &ModelConfig, vocab_size: usize) -> (Layout, ParamStore) {
    let mut store = ParamStore::new();
    let dim = config.embedding_dimension;
    let units = config.hidden_units;
    let embedding = store.push("embedding", Tensor::zeros(&[vocab_size, dim]));
    let recurrence = config.cell.recurrence();
    let mut directions = Vec::new();
    for d in 0..config.cell.directions() {
        let tag = if d == 0 { "forward" } else { "backward" };
        let mut gates = Vec::new();
        for gate in recurrence.gate_names() {
            let prefix = format!("encoder.{tag}.{gate}");
            gates.push(GateIndex {
                kernel: store.push(format!("{prefix}.kernel"), Tensor::zeros(&[dim, units])),
                recurrent: store.push(format!("{prefix}.recurrent_kernel"), Tensor::zeros(&[units, units])),
                bias: store.push(format!("{prefix}.bias"), Tensor::zeros(&[units])),
            });
        }
        directions.push(DirectionLayout {
            recurrence,
            reversed: d == 1,
            gates,
        });
    }
    let mut dense = Vec::new();
    let mut width = config.encoder_width();
    for (l, &out) in config.dense_layers.iter().enumerate() {
        let kernel = store.push(format!("dense.{l}.kernel"), Tensor::zeros(&[width, out]));
        let bias = store.push(format!("dense.{l}.bias"), Tensor::zeros(&[out]));
        dense.push((kernel, bias));
        width = out;
    }
    (
        Layout {
            embedding,
            directions,
            dense,
        },
        store,
    )
}

/// Builds a model around `embedding_matrix` (vocab × dim). Input and dense
/// kernels are Glorot-uniform, recurrent kernels orthogonal, biases zero except
/// the LSTM forget gate bias, which starts at 1.
pub fn init_model<R: Rng + ?Sized>(
    config: ModelConfig,
    embedding_matrix: Tensor,
    rng: &mut R,
) -> Result<Model, ModelError> {
    config.validate()?;
    let shape = embedding_matrix.shape();
    if shape.len() != 2 || shape[1] != config.embedding_dimension || shape[0] < 2 {
        return Err(ModelError::EmbeddingShape {
            found: shape.to_vec(),
            expected: config.embedding_dimension,
        });
    }
    let (layout, mut params) = build_layout(&config, shape[0]);
    *params.get_mut(layout.embedding) = embedding_matrix;
    let dim = config.embedding_dimension;
    let units = config.hidden_units;
    for direction in &layout.directions {
        let gate_count = direction.gates.len();
        for (k, gate) in direction.gates.iter().enumerate() {
            *params.get_mut(gate.kernel) = glorot_uniform(&[dim, units], dim, units * gate_count, rng);
            *params.get_mut(gate.recurrent) = orthogonal(units, rng);
            if direction.recurrence == Recurrence::Lstm && k == 1 {
                params.get_mut(gate.bias).fill(1.0);
            }
        }
    }
    for &(kernel, _) in &layout.dense {
        let shape = params.get(kernel).shape().to_vec();
        *params.get_mut(kernel) = glorot_uniform(&shape, shape[0], shape[1], rng);
    }
    Ok(Model {
        config,
        params,
        layout,
        generation: 0,
    })
}

/// Per-example, per-direction recurrent dropout masks (already scaled by
/// `1 / (1 - p)`).
pub type DropoutMasks = Vec<Vec<Vec<f64>>>;

pub enum Mode<'a, R: Rng + ?Sized> {
    Eval,
    Train(&'a mut R),
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    examples: Vec<ExampleTrace>,
}

#[derive(Debug, Clone)]
pub struct ExampleTrace {
    pub directions: Vec<DirectionTrace>,
    /// Input to each dense layer (the encoder output first).
    pub dense_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each dense layer.
    pub dense_pre: Vec<Vec<f64>>,
    pub probabilities: [f64; NUM_CLASSES],
}

impl ForwardCache {
    pub fn examples(&self) -> &[ExampleTrace] {
        &self.examples
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub per_example: Vec<f64>,
}

impl Model {
    /// Reassembles a model from stored parameters. Names and shapes must match
    /// the layout implied by `config`.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        let vocab = params
            .find("embedding")
            .map(|i| params.get(i).rows())
            .ok_or_else(|| ModelError::Config("missing embedding tensor".into()))?;
        let (layout, expected) = build_layout(&config, vocab);
        if !expected.same_layout(&params) {
            return Err(ModelError::Config("parameter layout does not match config".into()));
        }
        Ok(Model {
            config,
            params,
            layout,
            generation: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Mutable parameters. Any cache produced before this call becomes stale.
    pub fn params_mut(&mut self) -> &mut ParamStore {
        self.generation += 1;
        &mut self.params
    }

    pub fn vocab_size(&self) -> usize {
        self.params.get(self.layout.embedding).rows()
    }

    pub fn embedding_index(&self) -> usize {
        self.layout.embedding
    }

    /// Whether the optimizer may update tensor `index`.
    pub fn is_trainable(&self, index: usize) -> bool {
        index != self.layout.embedding || self.config.embeddings_trainable
    }

    /// Scalar count of the recurrent encoder parameters.
    pub fn recurrent_parameter_count(&self) -> usize {
        self.layout
            .directions
            .iter()
            .flat_map(|d| &d.gates)
            .map(|g| {
                self.params.get(g.kernel).len() + self.params.get(g.recurrent).len() + self.params.get(g.bias).len()
            })
            .sum()
    }

    pub fn sample_dropout_masks<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> DropoutMasks {
        let p = self.config.recurrent_dropout;
        let units = self.config.hidden_units;
        let directions = self.config.cell.directions();
        (0..batch)
            .map(|_| {
                (0..directions)
                    .map(|_| {
                        if p == 0.0 {
                            vec![1.0; units]
                        } else {
                            (0..units)
                                .map(|_| if rng.random::<f64>() < p { 0.0 } else { 1.0 / (1.0 - p) })
                                .collect()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        batch: &[EncodedSequence],
        mode: Mode<'_, R>,
    ) -> Result<(Vec<[f64; NUM_CLASSES]>, ForwardCache), ModelError> {
        match mode {
            Mode::Eval => self.forward_with_masks(batch, None),
            Mode::Train(rng) => {
                let masks = self.sample_dropout_masks(batch.len(), rng);
                self.forward_with_masks(batch, Some(&masks))
            }
        }
    }

    pub fn forward_eval(&self, batch: &[EncodedSequence]) -> Result<Vec<[f64; NUM_CLASSES]>, ModelError> {
        Ok(self.forward_with_masks(batch, None)?.0)
    }

    /// Forward pass with explicit dropout masks; `None` means no dropout.
    pub fn forward_with_masks(
        &self,
        batch: &[EncodedSequence],
        masks: Option<&DropoutMasks>,
    ) -> Result<(Vec<[f64; NUM_CLASSES]>, ForwardCache), ModelError> {
        let vocab = self.vocab_size();
        if let Some(masks) = masks {
            let directions = self.config.cell.directions();
            let units = self.config.hidden_units;
            let ok = masks.len() == batch.len()
                && masks
                    .iter()
                    .all(|m| m.len() == directions && m.iter().all(|d| d.len() == units));
            if !ok {
                return Err(ModelError::MaskShape);
            }
        }
        let mut examples = Vec::with_capacity(batch.len());
        for (b, sequence) in batch.iter().enumerate() {
            if let Some(&index) = sequence.active().iter().find(|&&i| i >= vocab) {
                return Err(ModelError::IndexOutOfRange { index, vocab });
            }
            let example_masks = masks.map(|m| &m[b]);
            examples.push(self.forward_one(sequence, example_masks));
        }
        let probabilities = examples.iter().map(|e| e.probabilities).collect();
        Ok((
            probabilities,
            ForwardCache {
                generation: self.generation,
                examples,
            },
        ))
    }

    fn forward_one(&self, sequence: &EncodedSequence, masks: Option<&Vec<Vec<f64>>>) -> ExampleTrace {
        let embedding = self.params.get(self.layout.embedding);
        let units = self.config.hidden_units;
        let mut directions = Vec::with_capacity(self.layout.directions.len());
        let mut encoded = Vec::with_capacity(self.config.encoder_width());
        for (d, layout) in self.layout.directions.iter().enumerate() {
            let mut tokens = sequence.active().to_vec();
            if layout.reversed {
                tokens.reverse();
            }
            let mask = masks.map(|m| m[d].clone()).unwrap_or_else(|| vec![1.0; units]);
            let trace = cell::run_direction(layout, &self.params, embedding, tokens, mask);
            encoded.extend_from_slice(trace.final_state());
            directions.push(trace);
        }

        let mut dense_inputs = Vec::with_capacity(self.layout.dense.len());
        let mut dense_pre = Vec::with_capacity(self.layout.dense.len());
        let mut activation = encoded;
        let last = self.layout.dense.len() - 1;
        for (l, &(kernel, bias)) in self.layout.dense.iter().enumerate() {
            let mut z = self.params.get(bias).data().to_vec();
            vec_mat_acc(&activation, self.params.get(kernel).data(), &mut z);
            dense_inputs.push(activation);
            activation = if l == last {
                softmax(&z)
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            dense_pre.push(z);
        }
        let mut probabilities = [0.0; NUM_CLASSES];
        probabilities.copy_from_slice(&activation);
        ExampleTrace {
            directions,
            dense_inputs,
            dense_pre,
            probabilities,
        }
    }

    /// Gradient of the mean cross-entropy of the cached batch with respect to
    /// every parameter. The embedding gradient stays zero when embeddings are
    /// frozen.
    pub fn backward(&self, cache: &ForwardCache, labels: &[ClassLabel]) -> Result<ParamStore, ModelError> {
        if cache.generation != self.generation {
            return Err(ModelError::StaleCache);
        }
        if cache.examples.len() != labels.len() {
            return Err(ModelError::LengthMismatch {
                probabilities: cache.examples.len(),
                labels: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let mut grads = self.params.zeros_like();
        let scale = 1.0 / labels.len() as f64;
        let embedding = self.params.get(self.layout.embedding);
        let embedding_grad = self.config.embeddings_trainable.then_some(self.layout.embedding);
        let units = self.config.hidden_units;

        for (example, &label) in cache.examples.iter().zip(labels) {
            let mut delta: Vec<f64> = example
                .probabilities
                .iter()
                .enumerate()
                .map(|(c, p)| (p - if c == label.code() { 1.0 } else { 0.0 }) * scale)
                .collect();
            for l in (0..self.layout.dense.len()).rev() {
                let (kernel, bias) = self.layout.dense[l];
                let input = &example.dense_inputs[l];
                outer_acc(input, &delta, grads.get_mut(kernel).data_mut());
                crate::tensor::add_assign(grads.get_mut(bias).data_mut(), &delta);
                let mut d_input = vec![0.0; input.len()];
                mat_vec_acc(self.params.get(kernel).data(), &delta, &mut d_input);
                if l > 0 {
                    for (d, z) in d_input.iter_mut().zip(&example.dense_pre[l - 1]) {
                        if *z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                delta = d_input;
            }
            for (d, (layout, trace)) in self.layout.directions.iter().zip(&example.directions).enumerate() {
                let d_final = &delta[d * units..(d + 1) * units];
                cell::backprop_direction(
                    layout,
                    &self.params,
                    embedding,
                    trace,
                    d_final,
                    &mut grads,
                    embedding_grad,
                );
            }
        }
        Ok(grads)
    }

    /// Eval-mode class and probabilities for one sequence.
    pub fn predict(&self, sequence: &EncodedSequence) -> Result<(ClassLabel, [f64; NUM_CLASSES]), ModelError> {
        let probabilities = self.forward_eval(std::slice::from_ref(sequence))?[0];
        Ok((argmax_label(&probabilities), probabilities))
    }
}

/// Index of the largest probability; ties go to the lowest class code.
pub fn argmax_label(probabilities: &[f64; NUM_CLASSES]) -> ClassLabel {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if probabilities[c] > probabilities[best] {
            best = c;
        }
    }
    ClassLabel::from_code(best).expect("class index")
}

/// Mean categorical cross-entropy, `-(1/N) Σ_i log p_i[y_i]`, with
/// probabilities clipped to `[1e-12, 1 - 1e-12]`.
pub fn loss(probabilities: &[[f64; NUM_CLASSES]], labels: &[ClassLabel]) -> Result<LossValue, ModelError> {
    if probabilities.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            probabilities: probabilities.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let per_example: Vec<f64> = probabilities
        .iter()
        .zip(labels)
        .map(|(row, label)| -row[label.code()].clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON).ln())
        .collect();
    let value = per_example.iter().sum::<f64>() / per_example.len() as f64;
    Ok(LossValue { value, per_example })
}

#[cfg(test)]
mod tests;
