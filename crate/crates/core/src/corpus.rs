//! Labeled message corpora: loading, saving, class tallies and stratified splits.
//!
//! Dataset files are delimited text with a header row. The `label` and `text`
//! columns are required; `id` and `origin` are optional. Lines starting with `#`
//! are comments and carry provenance (`# seed=42`). With a tab delimiter fields
//! are never quoted; with a comma delimiter standard CSV quoting applies.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::ops::{Index, IndexMut};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("dataset file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty dataset")]
    Empty,
    #[error("missing required column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: malformed row: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: unknown label `{label}`")]
    UnknownLabel { line: u64, label: String },
    #[error("record `{0}` has empty text")]
    EmptyText(String),
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("augmented record `{id}` references missing source `{source_id}`")]
    DanglingOrigin { id: String, source_id: String },
    #[error("class {0} has fewer than 2 records")]
    ClassTooSmall(ClassLabel),
    #[error("test fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("requested {requested} test records for class {label}, which has {available}")]
    BadTestCount {
        label: ClassLabel,
        requested: usize,
        available: usize,
    },
    #[error("record `{id}`: {message}")]
    Unwritable { id: String, message: String },
    #[error("writing dataset: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing manifest: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    NonOffensive,
    Offensive,
    HateInducing,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] = [
        ClassLabel::NonOffensive,
        ClassLabel::Offensive,
        ClassLabel::HateInducing,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::NonOffensive => "Non-Offensive",
            ClassLabel::Offensive => "Offensive",
            ClassLabel::HateInducing => "Hate-Inducing",
        })
    }
}

/// Per-class record tally, indexed by [`ClassLabel`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassCounts(pub [usize; NUM_CLASSES]);

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl Index<ClassLabel> for ClassCounts {
    type Output = usize;
    fn index(&self, label: ClassLabel) -> &usize {
        &self.0[label.code()]
    }
}

impl IndexMut<ClassLabel> for ClassCounts {
    fn index_mut(&mut self, label: ClassLabel) -> &mut usize {
        &mut self.0[label.code()]
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Original,
    Augmented(String),
}

impl Origin {
    fn to_field(&self) -> String {
        match self {
            Origin::Original => "original".to_string(),
            Origin::Augmented(source) => format!("augmented:{source}"),
        }
    }

    fn parse(field: &str) -> Option<Self> {
        match field {
            "original" | "" => Some(Origin::Original),
            _ => field
                .strip_prefix("augmented:")
                .filter(|s| !s.is_empty())
                .map(|s| Origin::Augmented(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: String,
    pub text: String,
    pub label: ClassLabel,
    pub origin: Origin,
}

impl MessageRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: ClassLabel) -> Result<Self, CorpusError> {
        Self::with_origin(id, text, label, Origin::Original)
    }

    pub fn with_origin(
        id: impl Into<String>,
        text: impl Into<String>,
        label: ClassLabel,
        origin: Origin,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText(id));
        }
        Ok(MessageRecord {
            id,
            text,
            label,
            origin,
        })
    }

    pub fn is_original(&self) -> bool {
        self.origin == Origin::Original
    }
}

/// An ordered, validated collection of records with a cached class tally.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledCorpus {
    records: Vec<MessageRecord>,
    counts: ClassCounts,
}

impl LabeledCorpus {
    /// Validates id uniqueness and that every augmented record points at an
    /// original record present in the same corpus.
    pub fn new(records: Vec<MessageRecord>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::with_capacity(records.len());
        for record in &records {
            if !ids.insert(record.id.as_str()) {
                return Err(CorpusError::DuplicateId(record.id.clone()));
            }
        }
        let originals: HashSet<&str> = records
            .iter()
            .filter(|r| r.is_original())
            .map(|r| r.id.as_str())
            .collect();
        for record in &records {
            if let Origin::Augmented(source) = &record.origin {
                if !originals.contains(source.as_str()) {
                    return Err(CorpusError::DanglingOrigin {
                        id: record.id.clone(),
                        source_id: source.clone(),
                    });
                }
            }
        }
        let counts = tally(&records);
        Ok(LabeledCorpus { records, counts })
    }

    pub fn records(&self) -> &[MessageRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<MessageRecord> {
        self.records
    }

    pub fn counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn tally(records: &[MessageRecord]) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for record in records {
        counts[record.label] += 1;
    }
    counts
}

/// Recomputes the per-label tally from the records.
pub fn class_distribution(corpus: &LabeledCorpus) -> ClassCounts {
    tally(corpus.records())
}

/// Label spellings used in dataset files, in class-code order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNames(pub [String; NUM_CLASSES]);

impl Default for LabelNames {
    fn default() -> Self {
        LabelNames(ClassLabel::ALL.map(|l| l.to_string()))
    }
}

impl LabelNames {
    pub fn parse(&self, field: &str) -> Option<ClassLabel> {
        self.0
            .iter()
            .position(|name| name == field.trim())
            .and_then(ClassLabel::from_code)
    }

    pub fn name(&self, label: ClassLabel) -> &str {
        &self.0[label.code()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFormat {
    pub delimiter: u8,
    pub labels: LabelNames,
}

impl Default for DatasetFormat {
    fn default() -> Self {
        DatasetFormat {
            delimiter: b'\t',
            labels: LabelNames::default(),
        }
    }
}

impl DatasetFormat {
    pub fn csv() -> Self {
        DatasetFormat {
            delimiter: b',',
            ..Default::default()
        }
    }

    fn quoted(&self) -> bool {
        self.delimiter != b'\t'
    }
}

pub fn load_dataset(path: &Path, format: &DatasetFormat) -> Result<LabeledCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(file, format)
}

pub fn read_dataset<R: std::io::Read>(reader: R, format: &DatasetFormat) -> Result<LabeledCorpus, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .quoting(format.quoted())
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(reader);

    let malformed = |err: csv::Error| {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        CorpusError::Malformed {
            line,
            message: err.to_string(),
        }
    };
    let headers = reader.headers().map_err(malformed)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let label_col = column("label").ok_or(CorpusError::MissingColumn("label"))?;
    let text_col = column("text").ok_or(CorpusError::MissingColumn("text"))?;
    let id_col = column("id");
    let origin_col = column("origin");

    let mut records = Vec::new();
    for (ordinal, row) in reader.records().enumerate() {
        let row = row.map_err(malformed)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize| {
            row.get(col).ok_or_else(|| CorpusError::Malformed {
                line,
                message: format!("missing column {}", col + 1),
            })
        };
        let label_field = field(label_col)?;
        let label = format
            .labels
            .parse(label_field)
            .ok_or_else(|| CorpusError::UnknownLabel {
                line,
                label: label_field.to_string(),
            })?;
        let text = field(text_col)?;
        let id = match id_col {
            Some(col) => field(col)?.to_string(),
            None => (ordinal + 1).to_string(),
        };
        let origin = match origin_col {
            Some(col) => {
                let raw = field(col)?;
                Origin::parse(raw).ok_or_else(|| CorpusError::Malformed {
                    line,
                    message: format!("bad origin `{raw}`"),
                })?
            }
            None => Origin::Original,
        };
        let record = MessageRecord::with_origin(id, text, label, origin).map_err(|_| CorpusError::Malformed {
            line,
            message: "text is empty".to_string(),
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    LabeledCorpus::new(records)
}

/// Options for [`save_dataset`].
#[derive(Debug, Clone, Default)]
pub struct SaveOptions {
    /// Emit the `origin` column.
    pub with_origin: bool,
    /// `key=value` pairs written as leading comment lines.
    pub provenance: Vec<(String, String)>,
}

pub fn save_dataset(
    corpus: &LabeledCorpus,
    path: &Path,
    format: &DatasetFormat,
    options: &SaveOptions,
) -> Result<(), CorpusError> {
    let mut buffer = Vec::new();
    write_dataset(&mut buffer, corpus, format, options)?;
    std::fs::write(path, buffer).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_dataset<W: Write>(
    mut out: W,
    corpus: &LabeledCorpus,
    format: &DatasetFormat,
    options: &SaveOptions,
) -> Result<(), CorpusError> {
    for (key, value) in &options.provenance {
        writeln!(out, "# {key}={value}").map_err(csv::Error::from)?;
    }
    let quote_style = if format.quoted() {
        csv::QuoteStyle::Necessary
    } else {
        csv::QuoteStyle::Never
    };
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter)
        .quote_style(quote_style)
        .from_writer(out);
    let mut header = vec!["id", "label", "text"];
    if options.with_origin {
        header.push("origin");
    }
    writer.write_record(&header)?;
    for record in corpus.records() {
        if !format.quoted() {
            let forbidden = |s: &str| s.contains(['\t', '\n', '\r']);
            if forbidden(&record.text) || forbidden(&record.id) {
                return Err(CorpusError::Unwritable {
                    id: record.id.clone(),
                    message: "tab or line break in a tab-delimited field".to_string(),
                });
            }
        }
        let label = format.labels.name(record.label);
        let mut row = vec![record.id.clone(), label.to_string(), record.text.clone()];
        if options.with_origin {
            row.push(record.origin.to_field());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Per-class test sizes for a uniform test fraction.
///
/// Each class gets `round_half_up(fraction * n)`, clamped so both sides keep at
/// least one record. If the per-class sum drifts from the rounded overall
/// target, the largest class whose adjusted size still lies within one record of
/// its exact share absorbs the difference.
pub fn stratified_test_counts(counts: ClassCounts, test_fraction: f64) -> Result<ClassCounts, CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    for label in ClassLabel::ALL {
        if counts[label] < 2 {
            return Err(CorpusError::ClassTooSmall(label));
        }
    }
    let exact = |label: ClassLabel| test_fraction * counts[label] as f64;
    let mut test = ClassCounts::default();
    for label in ClassLabel::ALL {
        test[label] = round_half_up(exact(label)).clamp(1, counts[label] - 1);
    }
    let target = round_half_up(test_fraction * counts.total() as f64);

    // Largest class first; ties go to the lower class code.
    let mut by_size = ClassLabel::ALL;
    by_size.sort_by(|a, b| counts[*b].cmp(&counts[*a]).then(a.cmp(b)));

    while test.total() != target {
        let step: isize = if test.total() > target { -1 } else { 1 };
        let candidate = by_size.iter().copied().find(|&label| {
            let next = test[label] as isize + step;
            next >= 1 && next < counts[label] as isize && (next as f64 - exact(label)).abs() < 1.0
        });
        match candidate {
            Some(label) => test[label] = (test[label] as isize + step) as usize,
            None => break,
        }
    }
    Ok(test)
}

/// Seeded stratified split with a uniform per-class test fraction.
pub fn stratified_split(
    corpus: &LabeledCorpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), CorpusError> {
    let test_counts = stratified_test_counts(corpus.counts(), test_fraction)?;
    split_by_counts(corpus, test_counts, seed)
}

/// Seeded stratified split holding out exactly `test_counts[c]` records of each class.
pub fn split_by_counts(
    corpus: &LabeledCorpus,
    test_counts: ClassCounts,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), CorpusError> {
    let counts = corpus.counts();
    for label in ClassLabel::ALL {
        if test_counts[label] > counts[label] {
            return Err(CorpusError::BadTestCount {
                label,
                requested: test_counts[label],
                available: counts[label],
            });
        }
    }
    let mut in_test = vec![false; corpus.len()];
    for label in ClassLabel::ALL {
        let mut members: Vec<usize> = corpus
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        let mut rng = rng::stream(seed, "stratified-split", label.code() as u64);
        members.shuffle(&mut rng);
        for &i in &members[..test_counts[label]] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (record, held_out) in corpus.records().iter().zip(in_test) {
        if held_out {
            test.push(record.clone());
        } else {
            train.push(record.clone());
        }
    }
    Ok((LabeledCorpus::new(train)?, LabeledCorpus::new(test)?))
}

/// Provenance sidecar written next to a pair of split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub test_fraction: f64,
    pub train_file: String,
    pub test_file: String,
    pub train_counts: ClassCounts,
    pub test_counts: ClassCounts,
}

/// Writes `train.tsv`, `test.tsv` and `split.json` into `dir`.
pub fn write_split(
    dir: &Path,
    train: &LabeledCorpus,
    test: &LabeledCorpus,
    format: &DatasetFormat,
    seed: u64,
    test_fraction: f64,
    provenance: &[(String, String)],
) -> Result<SplitManifest, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let options = SaveOptions {
        with_origin: false,
        provenance: provenance.to_vec(),
    };
    save_dataset(train, &dir.join("train.tsv"), format, &options)?;
    save_dataset(test, &dir.join("test.tsv"), format, &options)?;
    let manifest = SplitManifest {
        seed,
        test_fraction,
        train_file: "train.tsv".to_string(),
        test_file: "test.tsv".to_string(),
        train_counts: train.counts(),
        test_counts: test.counts(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("split.json"), json + "\n").map_err(io_err)?;
    Ok(manifest)
}

/// Index of records by id.
pub fn index_by_id(corpus: &LabeledCorpus) -> HashMap<&str, &MessageRecord> {
    corpus.records().iter().map(|r| (r.id.as_str(), r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(counts: [usize; 3]) -> LabeledCorpus {
        let mut records = Vec::new();
        for label in ClassLabel::ALL {
            for i in 0..counts[label.code()] {
                records.push(MessageRecord::new(format!("{}-{i}", label.code()), format!("msg {i}"), label).unwrap());
            }
        }
        LabeledCorpus::new(records).unwrap()
    }

    fn tsv(body: &str) -> Result<LabeledCorpus, CorpusError> {
        read_dataset(body.as_bytes(), &DatasetFormat::default())
    }

    #[test]
    fn loads_counts_in_row_order() {
        let corpus = tsv("label\ttext\nOffensive\tb\nNon-Offensive\ta\nHate-Inducing\tc\n").unwrap();
        assert_eq!(corpus.counts(), ClassCounts([1, 1, 1]));
        let texts: Vec<_> = corpus.records().iter().map(|r| r.text.as_str()).collect();
        assert_eq!(texts, ["b", "a", "c"]);
        assert_eq!(corpus.records()[0].id, "1");
    }

    #[test]
    fn header_only_is_empty_dataset() {
        assert!(matches!(tsv("label\ttext\n"), Err(CorpusError::Empty)));
    }

    #[test]
    fn unknown_label_reports_line() {
        match tsv("label\ttext\nOffensive\tok\nSpam\tbad\n") {
            Err(CorpusError::UnknownLabel { line, label }) => {
                assert_eq!(line, 3);
                assert_eq!(label, "Spam");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_row_is_malformed_with_line() {
        match tsv("label\ttext\nOffensive\tok\nOffensive\n") {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/nonexistent/x.tsv"), &DatasetFormat::default());
        assert!(matches!(err, Err(CorpusError::Io { .. })));
    }

    #[test]
    fn custom_label_mapping() {
        let format = DatasetFormat {
            delimiter: b',',
            labels: LabelNames(["NOT".into(), "OFF".into(), "HATE".into()]),
        };
        let corpus = read_dataset("text,label\n\"hi, there\",HATE\n".as_bytes(), &format).unwrap();
        assert_eq!(corpus.records()[0].label, ClassLabel::HateInducing);
        assert_eq!(corpus.records()[0].text, "hi, there");
    }

    #[test]
    fn comments_are_skipped() {
        let corpus = tsv("# seed=3\nid\tlabel\ttext\n# note\nx\tOffensive\thello\n").unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.records()[0].id, "x");
    }

    #[test]
    fn dangling_augmented_origin_rejected() {
        let record =
            MessageRecord::with_origin("a1", "text", ClassLabel::Offensive, Origin::Augmented("zzz".into())).unwrap();
        assert!(matches!(
            LabeledCorpus::new(vec![record]),
            Err(CorpusError::DanglingOrigin { .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = MessageRecord::new("a", "x", ClassLabel::Offensive).unwrap();
        assert!(matches!(
            LabeledCorpus::new(vec![a.clone(), a]),
            Err(CorpusError::DuplicateId(_))
        ));
    }

    #[test]
    fn blank_text_rejected() {
        assert!(MessageRecord::new("a", "   ", ClassLabel::Offensive).is_err());
    }

    #[test]
    fn distribution_examples() {
        assert_eq!(class_distribution(&LabeledCorpus::default()), ClassCounts([0, 0, 0]));
        assert_eq!(class_distribution(&synthetic([0, 1, 0])), ClassCounts([0, 1, 0]));
        assert_eq!(class_distribution(&synthetic([3572, 1638, 2724])).total(), 7934);
    }

    #[test]
    fn ten_per_class_split_is_exact() {
        let (train, test) = stratified_split(&synthetic([10, 10, 10]), 0.2, 1).unwrap();
        assert_eq!(test.counts(), ClassCounts([2, 2, 2]));
        assert_eq!(train.counts(), ClassCounts([8, 8, 8]));
    }

    #[test]
    fn paper_scale_split_holds_out_about_seven_hundred() {
        let corpus = synthetic([1121, 303, 1765]);
        let (train, test) = stratified_split(&corpus, 0.22, 9).unwrap();
        assert_eq!(test.len(), 702);
        assert_eq!(train.len(), 3189 - 702);
        assert_eq!(test.counts(), ClassCounts([247, 67, 388]));
    }

    #[test]
    fn split_rejects_tiny_class() {
        assert!(matches!(
            stratified_split(&synthetic([5, 1, 5]), 0.5, 0),
            Err(CorpusError::ClassTooSmall(ClassLabel::Offensive))
        ));
        assert!(matches!(
            stratified_split(&synthetic([5, 5, 5]), 1.0, 0),
            Err(CorpusError::BadFraction(_))
        ));
    }

    #[test]
    fn split_by_paper_counts() {
        let corpus = synthetic([1121, 303, 1765]);
        let (train, test) = split_by_counts(&corpus, ClassCounts([228, 69, 403]), 4).unwrap();
        assert_eq!(train.counts(), ClassCounts([893, 234, 1362]));
        assert_eq!(test.len(), 700);
    }

    #[test]
    fn write_split_emits_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synthetic([4, 4, 4]);
        let (train, test) = stratified_split(&corpus, 0.25, 5).unwrap();
        let manifest = write_split(dir.path(), &train, &test, &DatasetFormat::default(), 5, 0.25, &[]).unwrap();
        assert_eq!(manifest.test_counts, ClassCounts([1, 1, 1]));
        let back = load_dataset(&dir.path().join("test.tsv"), &DatasetFormat::default()).unwrap();
        assert_eq!(back, test);
        let json = std::fs::read_to_string(dir.path().join("split.json")).unwrap();
        let parsed: SplitManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, manifest);
    }

    #[test]
    fn tab_in_text_is_unwritable_as_tsv() {
        let corpus = LabeledCorpus::new(vec![MessageRecord::new("a", "x\ty", ClassLabel::Offensive).unwrap()]).unwrap();
        let err = write_dataset(Vec::new(), &corpus, &DatasetFormat::default(), &SaveOptions::default());
        assert!(matches!(err, Err(CorpusError::Unwritable { .. })));
    }

    fn arb_corpus(text: &'static str) -> impl Strategy<Value = LabeledCorpus> {
        prop::collection::vec((text, 0usize..3, prop::bool::ANY), 1..40).prop_map(|rows| {
            let mut records = Vec::new();
            for (i, (text, code, augmented)) in rows.into_iter().enumerate() {
                let label = ClassLabel::from_code(code).unwrap();
                let origin = if augmented && i > 0 {
                    Origin::Augmented("0".to_string())
                } else {
                    Origin::Original
                };
                records.push(MessageRecord::with_origin(i.to_string(), text, label, origin).unwrap());
            }
            LabeledCorpus::new(records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tsv_round_trip(corpus in arb_corpus("[a-z][a-z #@:/\"']{0,30}")) {
            let mut buf = Vec::new();
            let options = SaveOptions { with_origin: true, provenance: vec![("seed".into(), "1".into())] };
            write_dataset(&mut buf, &corpus, &DatasetFormat::default(), &options).unwrap();
            let back = read_dataset(buf.as_slice(), &DatasetFormat::default()).unwrap();
            prop_assert_eq!(back, corpus);
        }

        #[test]
        fn csv_round_trip(corpus in arb_corpus("[a-z][^\u{0}\r]{0,30}")) {
            let mut buf = Vec::new();
            let options = SaveOptions { with_origin: true, provenance: vec![] };
            write_dataset(&mut buf, &corpus, &DatasetFormat::csv(), &options).unwrap();
            let back = read_dataset(buf.as_slice(), &DatasetFormat::csv()).unwrap();
            prop_assert_eq!(back, corpus);
        }

        #[test]
        fn split_partitions_and_tracks_fraction(
            counts in prop::array::uniform3(2usize..60),
            fraction in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let corpus = synthetic(counts);
            let (train, test) = stratified_split(&corpus, fraction, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), corpus.len());
            let train_ids: HashSet<_> = train.records().iter().map(|r| r.id.clone()).collect();
            let test_ids: HashSet<_> = test.records().iter().map(|r| r.id.clone()).collect();
            prop_assert!(train_ids.is_disjoint(&test_ids));
            let all: HashSet<_> = corpus.records().iter().map(|r| r.id.clone()).collect();
            prop_assert_eq!(train_ids.union(&test_ids).cloned().collect::<HashSet<_>>(), all);
            for label in ClassLabel::ALL {
                let exact = fraction * counts[label.code()] as f64;
                prop_assert!((test.counts()[label] as f64 - exact).abs() < 1.0);
            }
            let again = stratified_split(&corpus, fraction, seed).unwrap();
            prop_assert_eq!(again.1, test);
        }
    }
}
