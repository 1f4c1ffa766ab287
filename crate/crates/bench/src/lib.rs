//! Fixtures shared by the benchmarks.

use codemix_core::embeddings::EncodedSequence;
use codemix_core::model::{Model, ModelConfig};
use codemix_core::pipeline::{build_vocabulary, encode_corpus, new_model};
use codemix_core::synthetic::{generate, SyntheticMode, SyntheticSpec};
use codemix_core::{ClassCounts, ClassLabel, LabeledCorpus};

/// Tweet-like raw messages exercising every preprocessing stage.
pub const RAW_MESSAGES: [&str; 4] = [
    "Hum sab ghumne jaa rahe hain? http://t.co/xyz :)",
    "@username1 Mujhe mat sikha:/ #angry",
    "terrorist Akbaar kill SaveWorld!!! www.example.com",
    "Yeh kya bakwas hai yaar, tum log pagal ho gaye ho :D",
];

pub fn synthetic(per_class: usize, seed: u64) -> LabeledCorpus {
    generate(&SyntheticSpec {
        per_class: ClassCounts([per_class; 3]),
        mode: SyntheticMode::Hard,
        overlap: 0.5,
        seed,
        ..Default::default()
    })
    .expect("valid spec")
}

/// A default-shaped model with a batch of `batch` encoded messages.
pub fn model_and_batch(config: ModelConfig, batch: usize) -> (Model, Vec<EncodedSequence>, Vec<ClassLabel>) {
    let corpus = synthetic(batch.div_ceil(3), 1);
    let vocab = build_vocabulary(&corpus, 1);
    let data = encode_corpus(&corpus, &vocab, config.max_length);
    let model = new_model(config, &vocab, None).expect("valid config");
    let sequences = data.sequences.into_iter().take(batch).collect();
    let labels = data.labels.into_iter().take(batch).collect();
    (model, sequences, labels)
}
