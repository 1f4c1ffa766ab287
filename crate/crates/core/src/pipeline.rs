//! Glue between the stages: corpus-level preprocessing, validation hold-out,
//! vocabulary and encoding, model construction, and a one-call experiment.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_corpus, AugmentConfig, AugmentError, SynonymLexicon};
use crate::corpus::{stratified_split, CorpusError, LabeledCorpus, MessageRecord, Origin};
use crate::embeddings::{
    build_embedding_matrix, build_vocab, encode_sequence, EmbeddingError, EmbeddingTable, Vocabulary,
};
use crate::evaluate::{evaluate, EvaluateError, MetricsReport};
use crate::model::{init_model, Model, ModelConfig, ModelError};
use crate::preprocess::{preprocess_pipeline, Resources, StageTrace};
use crate::rng;
use crate::training::{train, Dataset, TrainingError, TrainingOutcome, TrainingSchedule};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error("validation_fraction must lie in (0, 1), got {0}")]
    BadValidationFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedCorpus {
    pub corpus: LabeledCorpus,
    pub trace: StageTrace,
    /// Ids of records left with no tokens, which are dropped.
    pub dropped: Vec<String>,
}

/// Runs the preprocessing pipeline over every record, keeping ids, labels and
/// origins. Augmented records whose source was dropped are dropped as well.
pub fn preprocess_corpus(corpus: &LabeledCorpus, resources: &Resources) -> Result<PreprocessedCorpus, CorpusError> {
    let mut trace = StageTrace::default();
    let mut dropped = Vec::new();
    let mut records = Vec::with_capacity(corpus.len());
    for record in corpus.records() {
        let processed = preprocess_pipeline(&record.text, resources, true);
        trace += processed.stage_trace.expect("audit requested");
        let orphan = matches!(&record.origin, Origin::Augmented(source) if dropped.contains(source));
        if processed.tokens.is_empty() || orphan {
            dropped.push(record.id.clone());
            continue;
        }
        records.push(MessageRecord::with_origin(
            record.id.clone(),
            processed.joined(),
            record.label,
            record.origin.clone(),
        )?);
    }
    Ok(PreprocessedCorpus {
        corpus: LabeledCorpus::new(records)?,
        trace,
        dropped,
    })
}

/// Holds out a stratified `fraction` of the original records for validation.
/// Augmented copies of held-out records are removed from the training side so
/// no variant of a validation message is trained on.
pub fn holdout_validation(
    corpus: &LabeledCorpus,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), PipelineError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PipelineError::BadValidationFraction(fraction));
    }
    let originals: Vec<MessageRecord> = corpus.records().iter().filter(|r| r.is_original()).cloned().collect();
    let originals = LabeledCorpus::new(originals)?;
    let (_, validation) = stratified_split(&originals, fraction, rng::derive_seed(seed, "validation", 0))?;
    let held: HashSet<&str> = validation.records().iter().map(|r| r.id.as_str()).collect();
    let train = corpus
        .records()
        .iter()
        .filter(|r| match &r.origin {
            Origin::Original => !held.contains(r.id.as_str()),
            Origin::Augmented(source) => !held.contains(source.as_str()),
        })
        .cloned()
        .collect();
    Ok((LabeledCorpus::new(train)?, validation))
}

pub fn corpus_tokens(corpus: &LabeledCorpus) -> Vec<Vec<String>> {
    corpus
        .records()
        .iter()
        .map(|r| r.text.split_whitespace().map(str::to_string).collect())
        .collect()
}

pub fn build_vocabulary(corpus: &LabeledCorpus, min_frequency: usize) -> Vocabulary {
    let tokens = corpus_tokens(corpus);
    build_vocab(tokens.iter().map(Vec::as_slice), min_frequency)
}

pub fn encode_corpus(corpus: &LabeledCorpus, vocabulary: &Vocabulary, max_length: usize) -> Dataset {
    let sequences = corpus_tokens(corpus)
        .iter()
        .map(|t| encode_sequence(t, vocabulary, max_length))
        .collect();
    let labels = corpus.records().iter().map(|r| r.label).collect();
    Dataset::new(sequences, labels).expect("one label per record")
}

/// Fresh model whose embedding rows come from `table` where available and are
/// random otherwise. All randomness derives from `config.seed`.
pub fn new_model(
    config: ModelConfig,
    vocabulary: &Vocabulary,
    table: Option<&EmbeddingTable>,
) -> Result<Model, PipelineError> {
    config.validate()?;
    let empty;
    let table = match table {
        Some(t) => t,
        None => {
            empty = EmbeddingTable::new(config.embedding_dimension)?;
            &empty
        }
    };
    if table.dimension() != config.embedding_dimension {
        return Err(ModelError::Config(format!(
            "embedding table has dimension {}, config asks for {}",
            table.dimension(),
            config.embedding_dimension
        ))
        .into());
    }
    let matrix = build_embedding_matrix(vocabulary, table, &mut rng::stream(config.seed, "embedding", 0));
    let seed = config.seed;
    Ok(init_model(config, matrix, &mut rng::stream(seed, "init", 0))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub schedule: TrainingSchedule,
    /// `None` trains on the original records only.
    pub augment: Option<AugmentConfig>,
    pub validation_fraction: f64,
    pub min_frequency: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: MetricsReport,
    pub outcome: TrainingOutcome,
    pub vocabulary: Vocabulary,
    pub train_size: usize,
}

/// Hold out validation → augment (optional) → vocabulary → train → evaluate on
/// `test`. Both corpora must already be preprocessed.
pub fn run_experiment(
    train_corpus: &LabeledCorpus,
    test_corpus: &LabeledCorpus,
    config: &ExperimentConfig,
    lexicon: &SynonymLexicon,
    resources: &Resources,
    table: Option<&EmbeddingTable>,
) -> Result<ExperimentResult, PipelineError> {
    let (train_part, validation) = holdout_validation(train_corpus, config.validation_fraction, config.schedule.seed)?;
    let train_part = match &config.augment {
        Some(augment) => augment_corpus(&train_part, augment, lexicon, resources.stopwords())?,
        None => train_part,
    };
    let vocabulary = build_vocabulary(&train_part, config.min_frequency);
    let max_length = config.model.max_length;
    let model = new_model(config.model.clone(), &vocabulary, table)?;
    let outcome = train(
        model,
        encode_corpus(&train_part, &vocabulary, max_length),
        encode_corpus(&validation, &vocabulary, max_length),
        config.schedule.clone(),
    )?;
    let report = evaluate(
        &outcome.model,
        &encode_corpus(test_corpus, &vocabulary, max_length),
        config.schedule.seed,
    )?;
    Ok(ExperimentResult {
        report,
        outcome,
        vocabulary,
        train_size: train_part.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClassLabel;

    fn corpus(rows: &[(&str, &str, ClassLabel, Option<&str>)]) -> LabeledCorpus {
        LabeledCorpus::new(
            rows.iter()
                .map(|(id, text, label, source)| {
                    let origin = source.map_or(Origin::Original, |s| Origin::Augmented(s.to_string()));
                    MessageRecord::with_origin(*id, *text, *label, origin).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn preprocessing_drops_empty_records_and_their_copies() {
        let input = corpus(&[
            (
                "1",
                "Hum sab ghumne jaa rahe hain? http://t.",
                ClassLabel::NonOffensive,
                None,
            ),
            ("2", "@someone the and of", ClassLabel::Offensive, None),
            ("2~aug1", "the of", ClassLabel::Offensive, Some("2")),
            ("3", "Mujhe mat sikha:/", ClassLabel::HateInducing, None),
        ]);
        let out = preprocess_corpus(&input, &Resources::shipped()).unwrap();
        assert_eq!(out.dropped, ["2", "2~aug1"]);
        let texts: Vec<&str> = out.corpus.records().iter().map(|r| r.text.as_str()).collect();
        assert_eq!(texts, ["roam go rahe hain", "teach"]);
        assert_eq!(out.trace.tokenized, 6 + 3 + 2 + 3);
    }

    #[test]
    fn holdout_keeps_variants_of_validation_records_out_of_training() {
        let mut rows = Vec::new();
        let ids: Vec<String> = (0..30).map(|i| i.to_string()).collect();
        let aug: Vec<String> = (0..30).map(|i| format!("{i}~aug1")).collect();
        for i in 0..30 {
            let label = ClassLabel::ALL[i % 3];
            rows.push((ids[i].as_str(), "word", label, None));
            rows.push((aug[i].as_str(), "word", label, Some(ids[i].as_str())));
        }
        let (train, validation) = holdout_validation(&corpus(&rows), 0.2, 3).unwrap();
        assert_eq!(validation.len(), 6);
        assert!(validation.records().iter().all(|r| r.is_original()));
        assert_eq!(train.len(), 48);
        for v in validation.records() {
            assert!(train
                .records()
                .iter()
                .all(|t| t.id != v.id && t.origin != Origin::Augmented(v.id.clone())));
        }
    }
}
