//! Pre-trained word vectors, task vocabulary and fixed-length index encoding.
//!
//! Embedding files are whitespace-separated text: a token followed by exactly
//! `dimension` decimal components per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::rng;
use crate::tensor::Tensor;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Half-width of the uniform range for vectors of tokens missing from the table.
pub const OOV_INIT_RANGE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: component `{value}` is not a finite number")]
    NotNumeric { line: usize, value: String },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("vocabulary must start with `{PAD_TOKEN}` and `{UNK_TOKEN}` and have unique tokens")]
    BadVocabulary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self, EmbeddingError> {
        if dimension == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
            trainable: true,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Returns `true` if an existing vector was replaced.
    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                line: 0,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(EmbeddingError::NotNumeric {
                line: 0,
                value: bad.to_string(),
            });
        }
        Ok(self.vectors.insert(token, vector).is_some())
    }

    pub fn parse<R: BufRead>(reader: R, expected_dimension: usize) -> Result<Self, EmbeddingError> {
        let mut table = EmbeddingTable::new(expected_dimension)?;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: format!("line {line_no}"),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let mut vector = Vec::with_capacity(expected_dimension);
            for field in fields {
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => vector.push(v),
                    _ => {
                        return Err(EmbeddingError::NotNumeric {
                            line: line_no,
                            value: field.to_string(),
                        })
                    }
                }
            }
            if vector.len() != expected_dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line_no,
                    expected: expected_dimension,
                    found: vector.len(),
                });
            }
            if table.vectors.insert(token.to_string(), vector).is_some() {
                log::warn!("embedding line {line_no}: duplicate token `{token}`, keeping the later vector");
            }
        }
        Ok(table)
    }
}

pub fn load_embeddings(path: &Path, expected_dimension: usize) -> Result<EmbeddingTable, EmbeddingError> {
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EmbeddingTable::parse(BufReader::new(file), expected_dimension)
}

/// Token ↔ index map. Index 0 is padding and index 1 the unknown marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index_to_token: Vec<String>,
    token_to_index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()]).expect("reserved")
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its full index-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, EmbeddingError> {
        if tokens.len() < 2 || tokens[PAD_INDEX] != PAD_TOKEN || tokens[UNK_INDEX] != UNK_TOKEN {
            return Err(EmbeddingError::BadVocabulary);
        }
        let token_to_index: HashMap<String, usize> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if token_to_index.len() != tokens.len() {
            return Err(EmbeddingError::BadVocabulary);
        }
        Ok(Vocabulary {
            index_to_token: tokens,
            token_to_index,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index for a token; unknown tokens map to [`UNK_INDEX`].
    pub fn index(&self, token: &str) -> usize {
        match self.token_to_index.get(token) {
            Some(&i) if i > UNK_INDEX => i,
            _ => UNK_INDEX,
        }
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    /// SHA-256 over the index-ordered tokens.
    pub fn hash(&self) -> String {
        rng::fingerprint(self.index_to_token.join("\n").as_bytes())
    }

    /// `token<TAB>index` lines for auditing.
    pub fn dump(&self) -> String {
        self.index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{t}\t{i}\n"))
            .collect()
    }
}

/// Tokens with frequency ≥ `min_frequency`, ordered by descending frequency and
/// then lexicographically, after the two reserved entries.
pub fn build_vocab<'a, I, S>(sequences: I, min_frequency: usize) -> Vocabulary
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for sequence in sequences {
        for token in sequence {
            let token = token.as_ref();
            if token != PAD_TOKEN && token != UNK_TOKEN {
                *freq.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, n)| n >= min_frequency.max(1)).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Vocabulary::from_tokens(tokens).expect("unique tokens")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSequence {
    pub indices: Vec<usize>,
    pub true_length: usize,
}

impl EncodedSequence {
    pub fn max_length(&self) -> usize {
        self.indices.len()
    }

    /// The non-padding prefix.
    pub fn active(&self) -> &[usize] {
        &self.indices[..self.true_length]
    }
}

/// Keeps the first `max_length` tokens and right-pads with [`PAD_INDEX`].
pub fn encode_sequence<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_length: usize) -> EncodedSequence {
    assert!(max_length >= 1, "max_length must be at least 1");
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_length)
        .map(|t| vocab.index(t.as_ref()))
        .collect();
    let true_length = indices.len();
    indices.resize(max_length, PAD_INDEX);
    EncodedSequence { indices, true_length }
}

pub fn decode_sequence(sequence: &EncodedSequence, vocab: &Vocabulary) -> Vec<String> {
    sequence
        .active()
        .iter()
        .map(|&i| vocab.token(i).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

/// `(|vocab|, dimension)` matrix: table vectors where available, uniform
/// `[-0.25, 0.25]` otherwise, zeros for the padding row.
pub fn build_embedding_matrix<R: Rng + ?Sized>(vocab: &Vocabulary, table: &EmbeddingTable, rng: &mut R) -> Tensor {
    let dim = table.dimension();
    let mut matrix = Tensor::zeros(&[vocab.len(), dim]);
    for (i, token) in vocab.tokens().iter().enumerate().skip(1) {
        let row = matrix.row_mut(i);
        match table.get(token) {
            Some(vector) if i != UNK_INDEX => row.copy_from_slice(vector),
            _ => {
                for v in row.iter_mut() {
                    *v = rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE);
                }
            }
        }
    }
    matrix
}
