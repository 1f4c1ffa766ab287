//! Self-describing binary checkpoints.
//!
//! Byte layout (all integers little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | magic `CMXCKPT\0`                         |
//! | 8      | 4    | format version, `u32` (currently 1)       |
//! | 12     | 8    | header length `n` in bytes, `u64`         |
//! | 20     | n    | header, UTF-8 JSON                        |
//! | 20 + n | 8·k  | tensor data, `f64` little-endian          |
//!
//! The header lists the model config, the vocabulary tokens and their hash,
//! the name and shape of every tensor, string metadata (provenance), and an
//! optional opaque training state.
//! Tensor data follows in header order: model parameters first, then any
//! auxiliary tensors (optimizer moments). The file ends exactly after the last
//! value. Values are stored bit for bit, so a reloaded model reproduces the
//! saved one's output exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Model, ModelConfig, ModelError, ParamStore};
use crate::embeddings::{EmbeddingError, Vocabulary};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 8] = *b"CMXCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint vocabulary {found} does not match the expected vocabulary {expected}")]
    VocabularyMismatch { found: String, expected: String },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Vocabulary(#[from] EmbeddingError),
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    descriptor: String,
    config: ModelConfig,
    vocabulary_hash: String,
    vocabulary: Vec<String>,
    tensors: Vec<TensorEntry>,
    auxiliary: Vec<TensorEntry>,
    metadata: BTreeMap<String, String>,
    state: Option<serde_json::Value>,
}

/// A model together with everything needed to use or resume it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub vocabulary: Vocabulary,
    /// Extra tensors saved alongside the parameters, e.g. optimizer moments.
    pub auxiliary: ParamStore,
    /// Provenance such as the config hash and seed.
    pub metadata: BTreeMap<String, String>,
    /// Free-form training state (epoch counters, learning rate, history).
    pub state: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn new(model: Model, vocabulary: Vocabulary) -> Self {
        Checkpoint {
            model,
            vocabulary,
            auxiliary: ParamStore::new(),
            metadata: BTreeMap::new(),
            state: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let entries = |store: &ParamStore| {
            store
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect()
        };
        let header = Header {
            descriptor: self.model.config().descriptor(),
            config: self.model.config().clone(),
            vocabulary_hash: self.vocabulary.hash(),
            vocabulary: self.vocabulary.tokens().to_vec(),
            tensors: entries(self.model.params()),
            auxiliary: entries(&self.auxiliary),
            metadata: self.metadata.clone(),
            state: self.state.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header is always serializable");
        let scalars = self.model.params().scalar_count() + self.auxiliary.scalar_count();
        let mut out = Vec::with_capacity(20 + json.len() + 8 * scalars);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, tensor) in self.model.params().iter().chain(self.auxiliary.iter()) {
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut cursor = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut cursor, &mut magic)?;
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut word = [0u8; 4];
        read_exact(&mut cursor, &mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let mut len = [0u8; 8];
        read_exact(&mut cursor, &mut len)?;
        let len = usize::try_from(u64::from_le_bytes(len))
            .ok()
            .filter(|&n| n <= cursor.len())
            .ok_or_else(|| CheckpointError::Corrupt("header length exceeds file".into()))?;
        let (json, mut data) = cursor.split_at(len);
        let header: Header =
            serde_json::from_slice(json).map_err(|e| CheckpointError::Corrupt(format!("header: {e}")))?;

        let vocabulary = Vocabulary::from_tokens(header.vocabulary)?;
        if vocabulary.hash() != header.vocabulary_hash {
            return Err(CheckpointError::Corrupt(
                "vocabulary hash does not match its tokens".into(),
            ));
        }
        let params = read_tensors(&header.tensors, &mut data)?;
        let auxiliary = read_tensors(&header.auxiliary, &mut data)?;
        if !data.is_empty() {
            return Err(CheckpointError::Corrupt(format!("{} trailing bytes", data.len())));
        }
        let model = Model::from_parts(header.config, params)?;
        if model.vocab_size() != vocabulary.len() {
            return Err(CheckpointError::Corrupt(format!(
                "embedding has {} rows for a vocabulary of {}",
                model.vocab_size(),
                vocabulary.len()
            )));
        }
        Ok(Checkpoint {
            model,
            vocabulary,
            auxiliary,
            metadata: header.metadata,
            state: header.state,
        })
    }

    /// Writes through a temporary sibling file and renames, so a crash never
    /// leaves a half-written checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io_err = |source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(&self.to_bytes()).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        drop(file);
        fs::rename(&tmp, path).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks that the checkpoint was trained on `expected`.
    pub fn load_for(path: &Path, expected: &Vocabulary) -> Result<Self, CheckpointError> {
        let checkpoint = Self::load(path)?;
        checkpoint.ensure_vocabulary(expected)?;
        Ok(checkpoint)
    }

    pub fn ensure_vocabulary(&self, expected: &Vocabulary) -> Result<(), CheckpointError> {
        let (found, expected) = (self.vocabulary.hash(), expected.hash());
        if found != expected {
            return Err(CheckpointError::VocabularyMismatch { found, expected });
        }
        Ok(())
    }
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<(), CheckpointError> {
    cursor
        .read_exact(buf)
        .map_err(|_| CheckpointError::Corrupt("file truncated".into()))
}

fn read_tensors(entries: &[TensorEntry], data: &mut &[u8]) -> Result<ParamStore, CheckpointError> {
    let mut store = ParamStore::new();
    for entry in entries {
        let n: usize = entry.shape.iter().product();
        if data.len() / 8 < n {
            return Err(CheckpointError::Corrupt(format!("tensor `{}` truncated", entry.name)));
        }
        let (raw, rest) = data.split_at(8 * n);
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        store.push(entry.name.clone(), Tensor::from_vec(&entry.shape, values));
        *data = rest;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EncodedSequence;
    use crate::model::{init_model, CellKind};
    use crate::rng;
    use rand::Rng;

    fn fixture(cell: CellKind) -> Checkpoint {
        let tokens: Vec<String> = ["<pad>", "<unk>", "a", "b", "c", "d"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let vocab = Vocabulary::from_tokens(tokens).unwrap();
        let config = ModelConfig {
            cell,
            hidden_units: 4,
            embedding_dimension: 3,
            max_length: 7,
            dense_layers: vec![5, 3],
            recurrent_dropout: 0.2,
            embeddings_trainable: true,
            seed: 3,
        };
        let mut rng = rng::seeded(3);
        let emb = Tensor::from_vec(&[6, 3], (0..18).map(|_| rng.random_range(-1.0..1.0)).collect());
        let model = init_model(config, emb, &mut rng).unwrap();
        Checkpoint::new(model, vocab)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        for cell in CellKind::ALL {
            let mut saved = fixture(cell);
            saved.auxiliary = saved.model.params().zeros_like();
            saved.auxiliary.get_mut(0).fill(0.1 + 0.2);
            saved.state = Some(serde_json::json!({"epoch": 4, "lr": 0.1 + 0.7}));
            saved.metadata.insert("seed".into(), "3".into());
            let path = dir.path().join(format!("{cell}.ckpt"));
            saved.save(&path).unwrap();
            let loaded = Checkpoint::load(&path).unwrap();
            assert_eq!(loaded.model.params(), saved.model.params());
            assert_eq!(loaded.auxiliary, saved.auxiliary);
            assert_eq!(loaded.state, saved.state);
            assert_eq!(loaded.metadata, saved.metadata);
            assert_eq!(loaded.to_bytes(), saved.to_bytes());

            let mut rng = rng::seeded(9);
            for _ in 0..100 {
                let len = rng.random_range(0..=7);
                let mut indices: Vec<usize> = (0..len).map(|_| rng.random_range(1..6)).collect();
                indices.resize(7, 0);
                let seq = [EncodedSequence {
                    indices,
                    true_length: len,
                }];
                let a = saved.model.forward_eval(&seq).unwrap();
                let b = loaded.model.forward_eval(&seq).unwrap();
                assert!(a[0].iter().zip(&b[0]).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = fixture(CellKind::GRU).to_bytes();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(CheckpointError::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn wrong_vocabulary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let saved = fixture(CellKind::LSTM);
        saved.save(&path).unwrap();
        let other: Vec<String> = ["<pad>", "<unk>", "a", "b", "d", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let other = Vocabulary::from_tokens(other).unwrap();
        assert!(matches!(
            Checkpoint::load_for(&path, &other),
            Err(CheckpointError::VocabularyMismatch { .. })
        ));
        assert!(Checkpoint::load_for(&path, &saved.vocabulary).is_ok());
    }

    #[test]
    fn damage_is_detected() {
        let bytes = fixture(CellKind::SimpleRNN).to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(b"nonsense"),
            Err(CheckpointError::BadMagic)
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(CheckpointError::Corrupt(_))
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            Checkpoint::from_bytes(&longer),
            Err(CheckpointError::Corrupt(_))
        ));
    }
}
