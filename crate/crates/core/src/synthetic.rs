//! Seeded three-class corpora with controllable class signal, for smoke and
//! acceptance runs when no real data is available.
//!
//! Every class owns a set of indicative pseudo-words; a shared pool of neutral
//! words carries no signal. Tokens are purely alphabetic and never collide with
//! the shipped stopwords or dictionary keys, so they survive preprocessing
//! unchanged.
//!
//! * Separable: every token is indicative of the message's class.
//! * Hard: each token is indicative of the message's class with probability
//!   `(1 - overlap) / 2`, and otherwise drawn uniformly from all words of all
//!   classes plus the neutral pool. With `overlap = 1` the token distribution
//!   is identical across classes and nothing better than chance is possible.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::SynonymLexicon;
use crate::corpus::{ClassCounts, ClassLabel, LabeledCorpus, MessageRecord, NUM_CLASSES};
use crate::rng;

const CLASS_STEMS: [&str; NUM_CLASSES] = ["zor", "vek", "qul"];
const NEUTRAL_STEM: &str = "miv";

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticMode {
    Separable,
    Hard,
}

impl std::str::FromStr for SyntheticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "separable" => Ok(SyntheticMode::Separable),
            "hard" => Ok(SyntheticMode::Hard),
            _ => Err(format!("unknown mode `{s}` (expected separable or hard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub per_class: ClassCounts,
    pub mode: SyntheticMode,
    /// Hard mode only, in [0, 1].
    pub overlap: f64,
    /// Indicative words per class.
    pub class_words: usize,
    pub neutral_words: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            per_class: ClassCounts([10, 10, 10]),
            mode: SyntheticMode::Separable,
            overlap: 0.5,
            class_words: 12,
            neutral_words: 24,
            min_length: 4,
            max_length: 10,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let fail = |m: &str| Err(SyntheticError::Spec(m.to_string()));
        if self.per_class.total() == 0 {
            return fail("per_class sizes are all zero");
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return fail("overlap must lie in [0, 1]");
        }
        if self.class_words < 2 {
            return fail("class_words must be at least 2");
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return fail("need 1 <= min_length <= max_length");
        }
        Ok(())
    }
}

/// Spreads `total` over the classes in proportion to `shape`, largest
/// remainders first, so the parts always sum to `total`.
pub fn proportional_sizes(total: usize, shape: ClassCounts) -> ClassCounts {
    let weight = shape.total().max(1) as f64;
    let exact: Vec<f64> = shape.0.iter().map(|&n| total as f64 * n as f64 / weight).collect();
    let mut sizes = ClassCounts(std::array::from_fn(|c| exact[c].floor() as usize));
    let mut order: Vec<usize> = (0..NUM_CLASSES).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().take(total - sizes.total()) {
        sizes.0[c] += 1;
    }
    sizes
}

/// `stem` followed by a base-26 letter suffix, e.g. `zorab`, `zorac`.
fn word(stem: &str, index: usize) -> String {
    let letters = |i: usize| (b'a' + (i % 26) as u8) as char;
    format!("{stem}{}{}", letters(index / 26), letters(index))
}

pub fn class_vocabulary(spec: &SyntheticSpec, label: ClassLabel) -> Vec<String> {
    (0..spec.class_words)
        .map(|i| word(CLASS_STEMS[label.code()], i))
        .collect()
}

pub fn neutral_vocabulary(spec: &SyntheticSpec) -> Vec<String> {
    (0..spec.neutral_words).map(|i| word(NEUTRAL_STEM, i)).collect()
}

/// Messages shuffled together, ids `syn1, syn2, …` in output order.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledCorpus, SyntheticError> {
    spec.validate()?;
    let class_words: Vec<Vec<String>> = ClassLabel::ALL.iter().map(|&c| class_vocabulary(spec, c)).collect();
    let mut pool: Vec<String> = class_words.iter().flatten().cloned().collect();
    pool.extend(neutral_vocabulary(spec));
    let signal = match spec.mode {
        SyntheticMode::Separable => 1.0,
        SyntheticMode::Hard => (1.0 - spec.overlap) / 2.0,
    };

    let mut messages = Vec::with_capacity(spec.per_class.total());
    for label in ClassLabel::ALL {
        for i in 0..spec.per_class[label] {
            let mut rng = rng::stream(spec.seed, &format!("synthetic:{}", label.code()), i as u64);
            let length = rng.random_range(spec.min_length..=spec.max_length);
            let tokens: Vec<&str> = (0..length)
                .map(|_| {
                    let source = if rng.random_bool(signal) {
                        &class_words[label.code()]
                    } else {
                        &pool
                    };
                    source[rng.random_range(0..source.len())].as_str()
                })
                .collect();
            messages.push((label, tokens.join(" ")));
        }
    }
    messages.shuffle(&mut rng::stream(spec.seed, "synthetic:order", 0));
    let records = messages
        .into_iter()
        .enumerate()
        .map(|(i, (label, text))| MessageRecord::new(format!("syn{}", i + 1), text, label).expect("non-empty text"))
        .collect();
    Ok(LabeledCorpus::new(records).expect("unique generated ids"))
}

/// Pairs consecutive words of each class (and of the neutral pool) as mutual
/// synonyms, so synonym edits keep the class signal intact.
pub fn synonym_lexicon(spec: &SyntheticSpec) -> SynonymLexicon {
    let mut groups: Vec<Vec<String>> = ClassLabel::ALL.iter().map(|&c| class_vocabulary(spec, c)).collect();
    groups.push(neutral_vocabulary(spec));
    let mut entries = Vec::new();
    for group in &groups {
        for pair in group.chunks_exact(2) {
            entries.push((pair[0].clone(), vec![pair[1].clone()]));
            entries.push((pair[1].clone(), vec![pair[0].clone()]));
        }
    }
    SynonymLexicon::new(entries).expect("generated words are valid lexicon entries")
}
