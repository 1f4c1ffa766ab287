//! Confusion matrices, per-class precision/recall/F1 and run comparison tables.
//!
//! A ratio whose denominator is zero (no predictions of a class, or no true
//! examples of it) is reported as 0 with a flag, never as NaN.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassLabel, NUM_CLASSES};
use crate::model::{argmax_label, Model, ModelError};
use crate::training::{predict_all, Dataset};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("evaluation set is empty")]
    Empty,
    #[error("{truths} true labels but {predictions} predictions")]
    LengthMismatch { truths: usize, predictions: usize },
    #[error("no reports to compare")]
    NoReports,
    #[error("invalid metrics report: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self, EvaluateError> {
        if truth.len() != predicted.len() {
            return Err(EvaluateError::LengthMismatch {
                truths: truth.len(),
                predictions: predicted.len(),
            });
        }
        let mut matrix = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            matrix.record(t, p);
        }
        Ok(matrix)
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        self.counts[truth.code()][predicted.code()] += 1;
    }

    pub fn get(&self, truth: ClassLabel, predicted: ClassLabel) -> u64 {
        self.counts[truth.code()][predicted.code()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Correct predictions.
    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    /// True examples of `class`.
    pub fn support(&self, class: ClassLabel) -> u64 {
        self.counts[class.code()].iter().sum()
    }

    /// Examples predicted as `class`.
    pub fn predicted(&self, class: ClassLabel) -> u64 {
        self.counts.iter().map(|row| row[class.code()]).sum()
    }

    /// Σ true positives / Σ support over all classes.
    pub fn micro_recall(&self) -> f64 {
        let tp: u64 = ClassLabel::ALL.iter().map(|&c| self.get(c, c)).sum();
        let support: u64 = ClassLabel::ALL.iter().map(|&c| self.support(c)).sum();
        ratio(tp, support).0
    }
}

/// `(value, undefined)`; 0 when the denominator is 0.
fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Nothing was predicted as this class.
    pub precision_undefined: bool,
    /// The class has no true examples.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    /// Row label in comparisons; the model descriptor unless overridden.
    pub name: String,
    pub descriptor: String,
    pub seed: u64,
    pub config_hash: Option<String>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix, descriptor: &str, seed: u64) -> Result<Self, EvaluateError> {
        if confusion.total() == 0 {
            return Err(EvaluateError::Empty);
        }
        let per_class: Vec<ClassMetrics> = ClassLabel::ALL
            .iter()
            .map(|&class| {
                let tp = confusion.get(class, class);
                let (precision, precision_undefined) = ratio(tp, confusion.predicted(class));
                let (recall, recall_undefined) = ratio(tp, confusion.support(class));
                ClassMetrics {
                    class,
                    precision,
                    recall,
                    f1: harmonic(precision, recall),
                    support: confusion.support(class),
                    precision_undefined,
                    recall_undefined,
                }
            })
            .collect();
        let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64;
        Ok(MetricsReport {
            name: descriptor.to_string(),
            descriptor: descriptor.to_string(),
            seed,
            config_hash: None,
            per_class,
            accuracy: ratio(confusion.trace(), confusion.total()).0,
            macro_f1,
            confusion,
        })
    }

    pub fn class(&self, class: ClassLabel) -> &ClassMetrics {
        &self.per_class[class.code()]
    }

    /// Checks internal consistency: one entry per class in order, values in
    /// [0, 1], and every number reproducible from the confusion matrix.
    pub fn validate(&self) -> Result<(), EvaluateError> {
        let invalid = |m: String| Err(EvaluateError::Invalid(m));
        if self.per_class.len() != NUM_CLASSES {
            return invalid(format!("{} class entries", self.per_class.len()));
        }
        let expected = MetricsReport::from_confusion(self.confusion, &self.descriptor, self.seed)?;
        for (got, want) in self.per_class.iter().zip(&expected.per_class) {
            if got.class != want.class {
                return invalid("classes out of order".into());
            }
            for (name, value) in [("precision", got.precision), ("recall", got.recall), ("f1", got.f1)] {
                if !(0.0..=1.0).contains(&value) {
                    return invalid(format!("{} {name} {value} outside [0, 1]", got.class));
                }
            }
            if got != want {
                return invalid(format!("{} metrics disagree with the confusion matrix", got.class));
            }
        }
        if self.accuracy != expected.accuracy || self.macro_f1 != expected.macro_f1 {
            return invalid("accuracy or macro-F1 disagree with the confusion matrix".into());
        }
        Ok(())
    }

    /// Plain-text summary with the confusion matrix.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}  seed {}", self.descriptor, self.seed);
        if let Some(hash) = &self.config_hash {
            let _ = writeln!(out, "config {hash}");
        }
        let _ = writeln!(
            out,
            "{:<15} {:>9} {:>9} {:>9} {:>8}",
            "class", "precision", "recall", "f1", "support"
        );
        for m in &self.per_class {
            let flag = |undefined: bool| if undefined { "!" } else { " " };
            let _ = writeln!(
                out,
                "{:<15} {:>8.4}{} {:>8.4}{} {:>9.4} {:>8}",
                m.class.to_string(),
                m.precision,
                flag(m.precision_undefined),
                m.recall,
                flag(m.recall_undefined),
                m.f1,
                m.support
            );
        }
        let _ = writeln!(out, "accuracy {:.4}  macro-F1 {:.4}", self.accuracy, self.macro_f1);
        let _ = writeln!(out, "confusion (rows true, columns predicted)");
        for (class, row) in ClassLabel::ALL.iter().zip(&self.confusion.counts) {
            let _ = writeln!(
                out,
                "{:<15} {:>6} {:>6} {:>6}",
                class.to_string(),
                row[0],
                row[1],
                row[2]
            );
        }
        if self
            .per_class
            .iter()
            .any(|m| m.precision_undefined || m.recall_undefined)
        {
            let _ = writeln!(out, "! zero denominator, reported as 0");
        }
        out
    }
}

/// Predicts every example in eval mode and scores the predictions.
pub fn evaluate(model: &Model, data: &Dataset, seed: u64) -> Result<MetricsReport, EvaluateError> {
    if data.is_empty() {
        return Err(EvaluateError::Empty);
    }
    let predicted: Vec<ClassLabel> = predict_all(model, &data.sequences)?.iter().map(argmax_label).collect();
    let confusion = ConfusionMatrix::from_predictions(&data.labels, &predicted)?;
    MetricsReport::from_confusion(confusion, &model.config().descriptor(), seed)
}

/// Reports side by side, one row per report, best value per column flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    /// Row index of the best value for each column; the first row wins ties.
    pub best: Vec<usize>,
}

/// Higher is better for every column.
pub fn compare_runs(reports: &[MetricsReport]) -> Result<Comparison, EvaluateError> {
    if reports.is_empty() {
        return Err(EvaluateError::NoReports);
    }
    let mut columns = vec!["macro_f1".to_string(), "accuracy".to_string()];
    for class in ClassLabel::ALL {
        for metric in ["precision", "recall", "f1"] {
            columns.push(format!("{class} {metric}"));
        }
    }
    let rows: Vec<(String, Vec<f64>)> = reports
        .iter()
        .map(|r| {
            let mut values = vec![r.macro_f1, r.accuracy];
            for m in &r.per_class {
                values.extend([m.precision, m.recall, m.f1]);
            }
            (format!("{} (seed {})", r.name, r.seed), values)
        })
        .collect();
    let best = (0..columns.len())
        .map(|c| {
            let mut best = 0;
            for (i, (_, values)) in rows.iter().enumerate() {
                if values[c] > rows[best].1[c] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Ok(Comparison { columns, rows, best })
}

impl Comparison {
    /// Fixed-width table; `*` marks the best cell of each column.
    pub fn to_table(&self) -> String {
        let label_width = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(3);
        let widths: Vec<usize> = self.columns.iter().map(|c| c.len().max(7)).collect();
        let mut out = format!("{:<label_width$}", "run");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (i, (label, values)) in self.rows.iter().enumerate() {
            let _ = write!(out, "{label:<label_width$}");
            for (c, (v, w)) in values.iter().zip(&widths).enumerate() {
                let mark = if self.best[c] == i { "*" } else { " " };
                let _ = write!(out, "  {:>width$}", format!("{v:.4}{mark}"), width = *w);
            }
            out.push('\n');
        }
        out
    }

    /// Comma-separated, header row first, plus a `best` column listing the
    /// metrics where the row is best.
    pub fn to_csv(&self) -> Result<String, EvaluateError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["run".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("best".into());
        writer.write_record(&header)?;
        for (i, (label, values)) in self.rows.iter().enumerate() {
            let mut record = vec![label.clone()];
            record.extend(values.iter().map(|v| v.to_string()));
            let best: Vec<&str> = self
                .columns
                .iter()
                .zip(&self.best)
                .filter(|(_, &b)| b == i)
                .map(|(c, _)| c.as_str())
                .collect();
            record.push(best.join(";"));
            writer.write_record(&record)?;
        }
        let bytes = writer.into_inner().map_err(|e| EvaluateError::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 input"))
    }
}
