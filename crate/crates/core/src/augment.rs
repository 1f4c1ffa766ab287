//! Easy data augmentation (EDA): synonym replacement, random insertion, random
//! swap and random deletion, plus per-class oversampling of a training corpus.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassLabel, CorpusError, LabeledCorpus, MessageRecord, Origin};
use crate::preprocess::StopwordList;
use crate::rng;

const SHIPPED_LEXICON: &str = include_str!("../resources/synonyms.tsv");

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("no multiplier configured for class {0}")]
    MissingMultiplier(ClassLabel),
    #[error("multiplier for class {0} must be at least 1")]
    ZeroMultiplier(ClassLabel),
    #[error("deletion probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("edit rate {0} must be finite and non-negative")]
    BadRate(f64),
    #[error("record `{0}` is already augmented; augment a corpus of originals")]
    NotOriginal(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Token → synonyms. A token never lists itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new<I, K, V>(entries: I) -> Result<Self, AugmentError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (token, synonyms)) in entries.into_iter().enumerate() {
            let token = token.into();
            let synonyms = synonyms.into_iter().map(Into::into).collect();
            let (token, synonyms) = validate_entry(token, synonyms, i + 1)?;
            map.insert(token, synonyms);
        }
        Ok(SynonymLexicon { entries: map })
    }

    /// `token<TAB>syn1,syn2,...` per line; `#` starts a comment line. Repeated
    /// tokens merge their synonym lists.
    pub fn parse(text: &str) -> Result<Self, AugmentError> {
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (token, list) = trimmed.split_once('\t').ok_or_else(|| AugmentError::Lexicon {
                line: line_no,
                message: "expected `token<TAB>synonyms`".to_string(),
            })?;
            let synonyms = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            let (token, synonyms) = validate_entry(token.trim().to_string(), synonyms, line_no)?;
            let slot = map.entry(token).or_default();
            for synonym in synonyms {
                if !slot.contains(&synonym) {
                    slot.push(synonym);
                }
            }
        }
        Ok(SynonymLexicon { entries: map })
    }

    pub fn load(path: &Path) -> Result<Self, AugmentError> {
        let text = std::fs::read_to_string(path).map_err(|source| AugmentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn synonyms(&self, token: &str) -> Option<&[String]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges `other` into `self`; synonyms are appended without duplicates.
    pub fn extend(&mut self, other: SynonymLexicon) {
        let mut tokens: Vec<_> = other.entries.into_iter().collect();
        tokens.sort();
        for (token, synonyms) in tokens {
            let slot = self.entries.entry(token).or_default();
            for synonym in synonyms {
                if !slot.contains(&synonym) {
                    slot.push(synonym);
                }
            }
        }
    }

    /// Lines in `token<TAB>syn1,syn2` form, sorted by token.
    pub fn to_tsv(&self) -> String {
        let mut tokens: Vec<_> = self.entries.iter().collect();
        tokens.sort();
        tokens
            .into_iter()
            .map(|(token, synonyms)| format!("{token}\t{}\n", synonyms.join(",")))
            .collect()
    }
}

fn validate_entry(token: String, synonyms: Vec<String>, line: usize) -> Result<(String, Vec<String>), AugmentError> {
    let bad = |message: String| AugmentError::Lexicon { line, message };
    let lower = |s: &str| !s.is_empty() && s.to_lowercase() == s && !s.contains(char::is_whitespace);
    if !lower(&token) {
        return Err(bad(format!("token `{token}` must be a lowercase word")));
    }
    if let Some(s) = synonyms.iter().find(|s| !lower(s)) {
        return Err(bad(format!("synonym `{s}` must be a lowercase word")));
    }
    let synonyms: Vec<String> = synonyms.into_iter().filter(|s| *s != token).collect();
    if synonyms.is_empty() {
        return Err(bad(format!("token `{token}` has no synonym other than itself")));
    }
    Ok((token, synonyms))
}

fn eligible_positions(tokens: &[String], lexicon: &SynonymLexicon, stoplist: &StopwordList) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !stoplist.contains(t) && lexicon.synonyms(t).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Replaces `min(n, eligible)` distinct non-stopword positions that have
/// lexicon entries, each with a uniformly chosen synonym.
pub fn synonym_replacement<R: Rng + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    stoplist: &StopwordList,
    rng: &mut R,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    if n == 0 {
        return out;
    }
    let eligible = eligible_positions(tokens, lexicon, stoplist);
    let chosen: Vec<usize> = eligible.choose_multiple(rng, n).copied().collect();
    for position in chosen {
        let synonyms = lexicon.synonyms(&tokens[position]).expect("eligible");
        out[position] = synonyms.choose(rng).expect("non-empty").clone();
    }
    out
}

/// `n` times: pick an eligible word of the current sentence, insert one of its
/// synonyms at a uniform position in `0..=len`. Stops early when nothing is
/// eligible.
pub fn random_insertion<R: Rng + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    stoplist: &StopwordList,
    rng: &mut R,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..n {
        let eligible = eligible_positions(&out, lexicon, stoplist);
        let Some(&source) = eligible.choose(rng) else {
            break;
        };
        let synonym = lexicon
            .synonyms(&out[source])
            .and_then(|s| s.choose(rng))
            .expect("eligible")
            .clone();
        let at = rng.random_range(0..=out.len());
        out.insert(at, synonym);
    }
    out
}

/// `n` swaps of two positions drawn independently and uniformly; a draw may
/// pick the same position twice, which leaves the sentence unchanged.
pub fn random_swap<R: Rng + ?Sized>(tokens: &[String], n: usize, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    if out.len() < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.random_range(0..out.len());
        let j = rng.random_range(0..out.len());
        out.swap(i, j);
    }
    out
}

/// Keeps each token independently with probability `1 - p`. If every token is
/// dropped, one uniformly chosen original token is returned instead.
pub fn random_deletion<R: Rng + ?Sized>(tokens: &[String], p: f64, rng: &mut R) -> Vec<String> {
    assert!((0.0..=1.0).contains(&p), "deletion probability {p} outside [0, 1]");
    if tokens.is_empty() {
        return Vec::new();
    }
    let kept: Vec<String> = tokens.iter().filter(|_| rng.random_bool(1.0 - p)).cloned().collect();
    if kept.is_empty() {
        vec![tokens[rng.random_range(0..tokens.len())].clone()]
    } else {
        kept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdaOperation {
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
}

impl EdaOperation {
    pub const ALL: [EdaOperation; 4] = [
        EdaOperation::SynonymReplacement,
        EdaOperation::RandomInsertion,
        EdaOperation::RandomSwap,
        EdaOperation::RandomDeletion,
    ];
}

/// How many edits `n` an operation makes on a sentence of `L` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditCount {
    Fixed(usize),
    /// `n = max(1, round(rate * L))`
    Rate(f64),
}

impl EditCount {
    pub fn for_length(self, length: usize) -> usize {
        match self {
            EditCount::Fixed(n) => n,
            EditCount::Rate(rate) => ((rate * length as f64).round() as usize).max(1),
        }
    }
}

/// Whether augmentation runs on raw messages or on preprocessed token sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentStage {
    BeforePreprocess,
    #[default]
    AfterPreprocess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub edits: EditCount,
    pub deletion_probability: f64,
    pub multipliers: BTreeMap<ClassLabel, usize>,
    pub seed: u64,
    #[serde(default)]
    pub stage: AugmentStage,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            edits: EditCount::Rate(0.1),
            deletion_probability: 0.1,
            multipliers: BTreeMap::from([
                (ClassLabel::NonOffensive, 4),
                (ClassLabel::Offensive, 7),
                (ClassLabel::HateInducing, 2),
            ]),
            seed: 0,
            stage: AugmentStage::AfterPreprocess,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(0.0..=1.0).contains(&self.deletion_probability) {
            return Err(AugmentError::BadProbability(self.deletion_probability));
        }
        if let EditCount::Rate(rate) = self.edits {
            if !rate.is_finite() || rate < 0.0 {
                return Err(AugmentError::BadRate(rate));
            }
        }
        for (&label, &m) in &self.multipliers {
            if m == 0 {
                return Err(AugmentError::ZeroMultiplier(label));
            }
        }
        Ok(())
    }
}

pub fn apply_operation<R: Rng + ?Sized>(
    operation: EdaOperation,
    tokens: &[String],
    config: &AugmentConfig,
    lexicon: &SynonymLexicon,
    stoplist: &StopwordList,
    rng: &mut R,
) -> Vec<String> {
    let n = config.edits.for_length(tokens.len());
    match operation {
        EdaOperation::SynonymReplacement => synonym_replacement(tokens, n, lexicon, stoplist, rng),
        EdaOperation::RandomInsertion => random_insertion(tokens, n, lexicon, stoplist, rng),
        EdaOperation::RandomSwap => random_swap(tokens, n, rng),
        EdaOperation::RandomDeletion => random_deletion(tokens, config.deletion_probability, rng),
    }
}

/// Oversamples each class `c` to `multiplier(c)` times its size. Every original
/// record is followed by `multiplier - 1` variants, each made by one uniformly
/// chosen EDA operation. Record `id` replica `k` draws from a stream keyed by
/// `(seed, id, k)`, so the output does not depend on processing order.
pub fn augment_corpus(
    train: &LabeledCorpus,
    config: &AugmentConfig,
    lexicon: &SynonymLexicon,
    stoplist: &StopwordList,
) -> Result<LabeledCorpus, AugmentError> {
    config.validate()?;
    for label in ClassLabel::ALL {
        if train.counts()[label] > 0 && !config.multipliers.contains_key(&label) {
            return Err(AugmentError::MissingMultiplier(label));
        }
    }
    let mut records = Vec::new();
    for record in train.records() {
        if !record.is_original() {
            return Err(AugmentError::NotOriginal(record.id.clone()));
        }
        records.push(record.clone());
        let tokens: Vec<String> = record.text.split_whitespace().map(str::to_string).collect();
        let multiplier = config.multipliers[&record.label];
        for replica in 1..multiplier {
            let mut rng = rng::stream(config.seed, &format!("augment:{}", record.id), replica as u64);
            let operation = *EdaOperation::ALL.choose(&mut rng).expect("four operations");
            let edited = apply_operation(operation, &tokens, config, lexicon, stoplist, &mut rng);
            records.push(MessageRecord::with_origin(
                format!("{}~aug{replica}", record.id),
                edited.join(" "),
                record.label,
                Origin::Augmented(record.id.clone()),
            )?);
        }
    }
    Ok(LabeledCorpus::new(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClassCounts;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn tally<F: FnMut(&mut rng::Rng) -> Vec<String>>(trials: usize, mut f: F) -> HashMap<Vec<String>, usize> {
        let mut rng = rng::seeded(12345);
        let mut counts = HashMap::new();
        for _ in 0..trials {
            *counts.entry(f(&mut rng)).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn lexicon_parsing() {
        let lex = SynonymLexicon::parse("# c\ngood\tgreat, fine\ngood\tnice,great\n").unwrap();
        assert_eq!(lex.synonyms("good").unwrap(), ["great", "fine", "nice"]);
        assert!(SynonymLexicon::parse("good\tgood\n").is_err());
        assert!(SynonymLexicon::parse("Good\tgreat\n").is_err());
        assert!(SynonymLexicon::parse("good great\n").is_err());
        let lex = SynonymLexicon::parse("good\tgood,fine\n").unwrap();
        assert_eq!(lex.synonyms("good").unwrap(), ["fine"]);
        assert!(SynonymLexicon::shipped().len() > 50);
    }

    #[test]
    fn synonym_replacement_examples() {
        let lex = SynonymLexicon::new([("good", ["great"])]).unwrap();
        let stop = StopwordList::default();
        let mut rng = rng::seeded(1);
        assert_eq!(
            synonym_replacement(&toks("good movie"), 1, &lex, &stop, &mut rng),
            toks("great movie")
        );
        assert_eq!(
            synonym_replacement(&toks("good movie"), 0, &lex, &stop, &mut rng),
            toks("good movie")
        );
        let stop_good = StopwordList::new(["good"]).unwrap();
        assert_eq!(
            synonym_replacement(&toks("good movie"), 3, &lex, &stop_good, &mut rng),
            toks("good movie")
        );
    }

    #[test]
    fn synonym_replacement_is_uniform_over_positions() {
        // Two eligible positions, n = 1: each outcome has probability 1/2.
        let lex = SynonymLexicon::new([("a", ["x"]), ("b", ["y"])]).unwrap();
        let stop = StopwordList::default();
        let counts = tally(10_000, |rng| synonym_replacement(&toks("a b"), 1, &lex, &stop, rng));
        assert_eq!(counts.len(), 2);
        for outcome in [toks("x b"), toks("a y")] {
            let freq = counts[&outcome] as f64 / 10_000.0;
            assert!((freq - 0.5).abs() <= 0.02, "{outcome:?}: {freq}");
        }
    }

    #[test]
    fn random_insertion_examples() {
        let lex = SynonymLexicon::new([("good", ["great"])]).unwrap();
        let stop = StopwordList::default();
        let counts = tally(10_000, |rng| random_insertion(&toks("good"), 1, &lex, &stop, rng));
        assert_eq!(counts.len(), 2);
        for outcome in [toks("great good"), toks("good great")] {
            let freq = counts[&outcome] as f64 / 10_000.0;
            assert!((freq - 0.5).abs() <= 0.02, "{outcome:?}: {freq}");
        }
        let mut rng = rng::seeded(0);
        assert_eq!(
            random_insertion(&toks("good x"), 0, &lex, &stop, &mut rng),
            toks("good x")
        );
        assert!(random_insertion(&[], 3, &lex, &stop, &mut rng).is_empty());
    }

    #[test]
    fn random_swap_examples() {
        let mut rng = rng::seeded(0);
        assert_eq!(random_swap(&toks("a"), 5, &mut rng), toks("a"));
        // Four equally likely (i, j) draws; two of them swap.
        let counts = tally(10_000, |rng| random_swap(&toks("a b"), 1, rng));
        for outcome in [toks("a b"), toks("b a")] {
            let freq = counts[&outcome] as f64 / 10_000.0;
            assert!((freq - 0.5).abs() <= 0.02, "{outcome:?}: {freq}");
        }
    }

    #[test]
    fn random_deletion_examples() {
        let mut rng = rng::seeded(3);
        assert_eq!(random_deletion(&toks("a b c"), 0.0, &mut rng), toks("a b c"));
        let counts = tally(3_000, |rng| random_deletion(&toks("a b c"), 1.0, rng));
        assert_eq!(counts.len(), 3);
        for (outcome, n) in counts {
            assert_eq!(outcome.len(), 1);
            assert!((n as f64 / 3_000.0 - 1.0 / 3.0).abs() < 0.04);
        }
        let sentence: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let total: usize = (0..10_000)
            .map(|_| random_deletion(&sentence, 0.3, &mut rng).len())
            .sum();
        let mean = total as f64 / 10_000.0;
        assert!((mean - 70.0).abs() <= 1.5, "mean {mean}");
    }

    /// Chi-square goodness of fit of RD output lengths against Binomial(L, 1-p),
    /// where the empty outcome is folded into length 1 by the fallback.
    #[test]
    fn random_deletion_length_distribution() {
        const L: usize = 10;
        const P: f64 = 0.3;
        const TRIALS: usize = 20_000;
        let sentence: Vec<String> = (0..L).map(|i| format!("w{i}")).collect();
        let mut rng = rng::seeded(99);
        let mut observed = [0usize; L + 1];
        for _ in 0..TRIALS {
            observed[random_deletion(&sentence, P, &mut rng).len()] += 1;
        }
        assert_eq!(observed[0], 0);
        let binom = |k: usize| {
            let choose = (0..k).fold(1.0, |acc, i| acc * (L - i) as f64 / (i + 1) as f64);
            choose * (1.0 - P).powi(k as i32) * P.powi((L - k) as i32)
        };
        let mut expected: Vec<f64> = (0..=L).map(|k| binom(k) * TRIALS as f64).collect();
        expected[1] += expected[0];
        // Merge sparse low-length cells into one bin.
        let (mut exp_bins, mut obs_bins) = (vec![], vec![]);
        let (mut e_acc, mut o_acc) = (0.0, 0usize);
        for k in 1..=L {
            e_acc += expected[k];
            o_acc += observed[k];
            if e_acc >= 5.0 {
                exp_bins.push(e_acc);
                obs_bins.push(o_acc);
                e_acc = 0.0;
                o_acc = 0;
            }
        }
        *exp_bins.last_mut().unwrap() += e_acc;
        *obs_bins.last_mut().unwrap() += o_acc;
        let chi2: f64 = exp_bins
            .iter()
            .zip(&obs_bins)
            .map(|(e, &o)| (o as f64 - e).powi(2) / e)
            .sum();
        // Critical values at alpha = 0.001 for df = 1..=12.
        const CRIT: [f64; 12] = [
            10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32, 26.12, 27.88, 29.59, 31.26, 32.91,
        ];
        let df = exp_bins.len() - 1;
        assert!(chi2 < CRIT[df - 1], "chi2 {chi2} df {df}");
    }

    #[test]
    fn edit_count_rules() {
        assert_eq!(EditCount::Rate(0.1).for_length(3), 1);
        assert_eq!(EditCount::Rate(0.1).for_length(25), 3);
        assert_eq!(EditCount::Rate(0.1).for_length(0), 1);
        assert_eq!(EditCount::Fixed(4).for_length(100), 4);
    }

    fn originals(counts: [usize; 3]) -> LabeledCorpus {
        let mut records = Vec::new();
        for label in ClassLabel::ALL {
            for i in 0..counts[label.code()] {
                records.push(
                    MessageRecord::new(
                        format!("{}-{i}", label.code()),
                        format!("good movie number w{i} love fight"),
                        label,
                    )
                    .unwrap(),
                );
            }
        }
        LabeledCorpus::new(records).unwrap()
    }

    #[test]
    fn augment_matches_multiplier_equation() {
        let corpus = originals([893, 234, 1362]);
        let out = augment_corpus(
            &corpus,
            &AugmentConfig::default(),
            &SynonymLexicon::shipped(),
            &StopwordList::shipped(),
        )
        .unwrap();
        assert_eq!(out.counts(), ClassCounts([3572, 1638, 2724]));
        assert_eq!(out.len(), 7934);
        let ids = crate::corpus::index_by_id(&out);
        for record in out.records() {
            if let Origin::Augmented(source) = &record.origin {
                assert!(ids[source.as_str()].is_original());
                assert_eq!(ids[source.as_str()].label, record.label);
            }
        }
    }

    #[test]
    fn unit_multipliers_are_identity_and_runs_are_deterministic() {
        let corpus = originals([3, 2, 4]);
        let config = AugmentConfig {
            multipliers: ClassLabel::ALL.iter().map(|&l| (l, 1)).collect(),
            ..Default::default()
        };
        let lex = SynonymLexicon::shipped();
        let stop = StopwordList::shipped();
        assert_eq!(augment_corpus(&corpus, &config, &lex, &stop).unwrap(), corpus);
        let config = AugmentConfig {
            seed: 77,
            ..Default::default()
        };
        let a = augment_corpus(&corpus, &config, &lex, &stop).unwrap();
        let b = augment_corpus(&corpus, &config, &lex, &stop).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn augment_errors() {
        let corpus = originals([2, 2, 2]);
        let lex = SynonymLexicon::default();
        let stop = StopwordList::default();
        let mut config = AugmentConfig::default();
        config.multipliers.remove(&ClassLabel::Offensive);
        assert!(matches!(
            augment_corpus(&corpus, &config, &lex, &stop),
            Err(AugmentError::MissingMultiplier(ClassLabel::Offensive))
        ));
        let config = AugmentConfig {
            deletion_probability: 1.5,
            ..Default::default()
        };
        assert!(augment_corpus(&corpus, &config, &lex, &stop).is_err());
        let augmented = augment_corpus(&corpus, &AugmentConfig::default(), &lex, &stop).unwrap();
        assert!(matches!(
            augment_corpus(&augmented, &AugmentConfig::default(), &lex, &stop),
            Err(AugmentError::NotOriginal(_))
        ));
    }

    fn sentence() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("(good|bad|the|a|movie|kill|hate|love|x[a-z]{1,3})", 0..20)
    }

    proptest! {
        #[test]
        fn swap_preserves_multiset(tokens in sentence(), n in 0usize..10, seed in any::<u64>()) {
            let out = random_swap(&tokens, n, &mut rng::seeded(seed));
            let (mut a, mut b) = (tokens.clone(), out);
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn replacement_keeps_length_and_stopwords(tokens in sentence(), n in 0usize..10, seed in any::<u64>()) {
            let lex = SynonymLexicon::new([("the", vec!["da"]), ("good", vec!["fine", "nice"]), ("kill", vec!["slay"])]).unwrap();
            let stop = StopwordList::new(["the", "a"]).unwrap();
            let out = synonym_replacement(&tokens, n, &lex, &stop, &mut rng::seeded(seed));
            prop_assert_eq!(out.len(), tokens.len());
            let changed = tokens.iter().zip(&out).filter(|(a, b)| a != b).count();
            let eligible = tokens.iter().filter(|t| *t == "good" || *t == "kill").count();
            prop_assert_eq!(changed, n.min(eligible));
            for (before, after) in tokens.iter().zip(&out) {
                if stop.contains(before) {
                    prop_assert_eq!(before, after);
                }
            }
        }

        #[test]
        fn insertion_keeps_originals_as_subsequence(tokens in sentence(), n in 0usize..6, seed in any::<u64>()) {
            let lex = SynonymLexicon::shipped();
            let stop = StopwordList::shipped();
            let out = random_insertion(&tokens, n, &lex, &stop, &mut rng::seeded(seed));
            let any_eligible = tokens.iter().any(|t| !stop.contains(t) && lex.synonyms(t).is_some());
            let expected = if any_eligible { tokens.len() + n } else { tokens.len() };
            prop_assert_eq!(out.len(), expected);
            let mut it = out.iter();
            for t in &tokens {
                prop_assert!(it.any(|o| o == t));
            }
        }

        #[test]
        fn deletion_never_grows(tokens in sentence(), p in 0.0f64..=1.0, seed in any::<u64>()) {
            let out = random_deletion(&tokens, p, &mut rng::seeded(seed));
            prop_assert!(out.len() <= tokens.len());
            prop_assert_eq!(out.is_empty(), tokens.is_empty());
        }
    }
}
