//! Classifier training and the four post-game metrics (accuracy, F1,
//! individual fairness, parity).

pub mod classifier;
pub mod fairness;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classifier::{Algorithm, Classifier};
pub use fairness::{individual_fairness, individual_fairness_points, parity, standardized_features};

use crate::scalar::Real;
use crate::table::{Table, TableError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("classifier `{0}` is not supported")]
    Unsupported(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("k = {k} out of range for {rows} rows")]
    InvalidK { k: usize, rows: usize },
    #[error("test fraction {0} must lie in (0, 1)")]
    InvalidFraction(f64),
    #[error("need at least two rows to split, found {0}")]
    TooFewRows(usize),
    #[error("expected {expected} labels, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sensitive column must be binary")]
    NonBinarySensitive,
    #[error("a sensitive group is empty")]
    EmptyGroup,
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Row-major non-label features and 0/1 labels.
pub fn features_and_labels<T: Real>(table: &Table) -> Result<(Vec<Vec<T>>, Vec<u8>), EvalError> {
    let n = table.row_count();
    let mut x = vec![Vec::new(); n];
    for idx in table.feature_indices() {
        for (r, &v) in table.values_at(idx)?.iter().enumerate() {
            x[r].push(T::of(v));
        }
    }
    let y = table.label_values().iter().map(|&v| u8::from(v == 1.0)).collect();
    Ok((x, y))
}

/// Seeded shuffle split; returns `(train, test)` row indices, each sorted.
pub fn split_rows(n: usize, seed: u64, test_fraction: f64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(test_fraction));
    }
    if n < 2 {
        return Err(EvalError::TooFewRows(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64 * test_fraction).ceil() as usize).clamp(1, n - 1);
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(truth: &[u8], pred: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(pred) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, _) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn accuracy<T: Real>(&self) -> T {
        let n = self.tp + self.fp + self.tn + self.fn_;
        if n == 0 {
            return T::zero();
        }
        T::of_usize(self.tp + self.tn) / T::of_usize(n)
    }

    /// F1 of the positive class; 0 when it is undefined.
    pub fn f1<T: Real>(&self) -> T {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return T::zero();
        }
        T::of_usize(2 * self.tp) / T::of_usize(denom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainEval<T> {
    pub test_rows: Vec<usize>,
    pub predictions: Vec<u8>,
    pub confusion: Confusion,
    pub accuracy: T,
    pub f1: T,
}

pub fn train_eval<T: Real>(
    table: &Table,
    algorithm: &Algorithm,
    split_seed: u64,
    test_fraction: f64,
) -> Result<TrainEval<T>, EvalError> {
    if let Algorithm::Svm | Algorithm::NeuralNetwork = algorithm {
        return Err(EvalError::Unsupported(algorithm.name().to_string()));
    }
    let (x, y) = features_and_labels::<T>(table)?;
    let (train, test) = split_rows(table.row_count(), split_seed, test_fraction)?;
    let xt: Vec<Vec<T>> = train.iter().map(|&i| x[i].clone()).collect();
    let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let model = algorithm.fit(&xt, &yt)?;
    let predictions: Vec<u8> = test.iter().map(|&i| model.predict(&x[i])).collect();
    let truth: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let confusion = Confusion::from_predictions(&truth, &predictions);
    Ok(TrainEval {
        accuracy: confusion.accuracy(),
        f1: confusion.f1(),
        test_rows: test,
        predictions,
        confusion,
    })
}

/// Evaluation settings shared by every snapshot of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    #[serde(flatten)]
    pub algorithm: Algorithm,
    pub split_seed: u64,
    pub test_fraction: f64,
    /// Neighbor count for individual fairness.
    pub fairness_k: usize,
    /// Sensitive column used for parity.
    pub parity_column: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            algorithm: Algorithm::default(),
            split_seed: 0,
            test_fraction: 0.25,
            fairness_k: 10,
            parity_column: "Gender".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct EvalReport<T> {
    pub accuracy: T,
    pub f1: T,
    pub individual_fairness: T,
    pub parity: T,
}

/// Accuracy, F1 and individual fairness on held-out predictions; parity on
/// the table's own labels. Individual-fairness neighbors are found over the
/// non-sensitive features (all features when every one is sensitive).
pub fn evaluate<T: Real>(table: &Table, opts: &EvalOptions) -> Result<EvalReport<T>, EvalError> {
    let te = train_eval::<T>(table, &opts.algorithm, opts.split_seed, opts.test_fraction)?;
    let x = standardized_features::<T>(table)?;
    let features = table.feature_indices();
    let sensitive = table.sensitive_columns();
    let mut keep: Vec<usize> = features
        .iter()
        .enumerate()
        .filter(|(_, &c)| !sensitive.contains(&table.columns()[c].name.as_str()))
        .map(|(p, _)| p)
        .collect();
    if keep.is_empty() {
        keep = (0..features.len()).collect();
    }
    let points: Vec<Vec<T>> = te
        .test_rows
        .iter()
        .map(|&i| keep.iter().map(|&p| x[i][p]).collect())
        .collect();
    let individual = fairness::individual_fairness_points(&points, &te.predictions, opts.fairness_k)?;
    let labels: Vec<u8> = table.label_values().iter().map(|&v| u8::from(v == 1.0)).collect();
    let par = parity(&labels, table.values(&opts.parity_column)?)?;
    Ok(EvalReport {
        accuracy: te.accuracy,
        f1: te.f1,
        individual_fairness: individual,
        parity: par,
    })
}

/// Original versus debiased evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ReportPair<T> {
    pub original: EvalReport<T>,
    pub debiased: EvalReport<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preferred {
    Higher,
    Lower,
}

impl<T: Real> ReportPair<T> {
    /// `(name, original, debiased, preferred direction)` per metric.
    pub fn rows(&self) -> [(&'static str, T, T, Preferred); 4] {
        let (o, d) = (&self.original, &self.debiased);
        [
            ("Predicted Accuracy", o.accuracy, d.accuracy, Preferred::Higher),
            ("Predicted F1", o.f1, d.f1, Preferred::Higher),
            ("Individual Fairness", o.individual_fairness, d.individual_fairness, Preferred::Lower),
            ("Parity", o.parity, d.parity, Preferred::Higher),
        ]
    }

    /// Plain-text table with a direction arrow and an improved/worse marker.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{:>12}{:>12}  change", "Metric", "Original", "Debiased");
        for (name, o, d, pref) in self.rows() {
            let (o, d) = (o.to_f64_lossy(), d.to_f64_lossy());
            let marker = if d == o {
                "= (unchanged)".to_string()
            } else {
                let arrow = if d > o { "▲" } else { "▼" };
                let better = (d > o) == (pref == Preferred::Higher);
                format!("{arrow} ({})", if better { "improved" } else { "worse" })
            };
            let _ = writeln!(out, "{name:<22}{o:>12.4}{d:>12.4}  {marker}");
        }
        out
    }
}
