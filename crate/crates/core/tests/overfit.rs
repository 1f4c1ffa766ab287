//! A default BiLSTM must be able to memorize a small separable corpus.

use std::time::Instant;

use codemix_core::evaluate::evaluate;
use codemix_core::model::ModelConfig;
use codemix_core::pipeline::{build_vocabulary, encode_corpus, new_model};
use codemix_core::synthetic::{generate, SyntheticSpec};
use codemix_core::training::{train, TrainingSchedule};

#[test]
fn bilstm_memorizes_thirty_separable_examples() {
    let start = Instant::now();
    let corpus = generate(&SyntheticSpec {
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(corpus.len(), 30);
    let vocab = build_vocabulary(&corpus, 1);
    let config = ModelConfig {
        seed: 11,
        ..Default::default()
    };
    let data = encode_corpus(&corpus, &vocab, config.max_length);
    let model = new_model(config, &vocab, None).unwrap();
    let schedule = TrainingSchedule {
        epochs: 200,
        early_stop_patience: 20,
        seed: 11,
        ..Default::default()
    };
    let outcome = train(model, data.clone(), data.clone(), schedule).unwrap();
    let report = evaluate(&outcome.model, &data, 11).unwrap();
    let elapsed = start.elapsed();
    eprintln!(
        "train accuracy {:.3} after {} epochs in {elapsed:.1?}",
        report.accuracy, outcome.summary.epochs_completed
    );
    assert!(report.accuracy >= 0.95);
    assert!(elapsed.as_secs() < 120);
}
