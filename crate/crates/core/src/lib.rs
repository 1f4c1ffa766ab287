//! Classification of code-mixed (Hinglish) short messages into
//! Non-Offensive, Offensive and Hate-Inducing classes.
//!
//! The pipeline runs: [`preprocess`] (cleaning, stopwords, dictionary
//! transliteration) → [`augment`] (EDA oversampling) → [`embeddings`]
//! (vocabulary and fixed-length encoding) → [`model`] (recurrent encoder with a
//! dense softmax head) → [`training`] → [`evaluate`].

pub mod augment;
pub mod corpus;
pub mod embeddings;
pub mod evaluate;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synthetic;
pub mod tensor;
pub mod training;

pub use corpus::{ClassCounts, ClassLabel, LabeledCorpus, MessageRecord, Origin, NUM_CLASSES};
