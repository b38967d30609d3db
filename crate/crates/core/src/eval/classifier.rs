//! From-scratch binary classifiers.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::scalar::Real;

fn default_iterations() -> usize {
    500
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_smoothing() -> f64 {
    1.0
}
fn default_k() -> usize {
    5
}
fn default_depth() -> usize {
    8
}

/// Classifier choice plus hyperparameters. `svm` and `neural-network` are
/// accepted in configuration but cannot be trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum Algorithm {
    LogisticRegression {
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    NaiveBayes {
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    DecisionTree {
        #[serde(default = "default_depth")]
        max_depth: usize,
    },
    Svm,
    NeuralNetwork,
}

impl Default for Algorithm {
    fn default() -> Self {
        Algorithm::logistic()
    }
}

impl Algorithm {
    pub fn logistic() -> Self {
        Algorithm::LogisticRegression {
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
        }
    }
    pub fn naive_bayes() -> Self {
        Algorithm::NaiveBayes {
            smoothing: default_smoothing(),
        }
    }
    pub fn knn() -> Self {
        Algorithm::Knn { k: default_k() }
    }
    pub fn decision_tree() -> Self {
        Algorithm::DecisionTree {
            max_depth: default_depth(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::LogisticRegression { .. } => "logistic-regression",
            Algorithm::NaiveBayes { .. } => "naive-bayes",
            Algorithm::Knn { .. } => "knn",
            Algorithm::DecisionTree { .. } => "decision-tree",
            Algorithm::Svm => "svm",
            Algorithm::NeuralNetwork => "neural-network",
        }
    }

    /// Fits on row-major features `x` and 0/1 labels `y`.
    pub fn fit<T: Real>(&self, x: &[Vec<T>], y: &[u8]) -> Result<Box<dyn Classifier<T>>, EvalError> {
        let positives = y.iter().filter(|&&v| v == 1).count();
        if positives == 0 || positives == y.len() {
            return Err(EvalError::SingleClass);
        }
        Ok(match *self {
            Algorithm::LogisticRegression {
                iterations,
                learning_rate,
            } => Box::new(Logistic::fit(x, y, iterations, T::of(learning_rate))),
            Algorithm::NaiveBayes { smoothing } => Box::new(BernoulliNb::fit(x, y, T::of(smoothing))),
            Algorithm::Knn { k } => {
                if k == 0 {
                    return Err(EvalError::InvalidK { k, rows: y.len() });
                }
                Box::new(Knn::fit(x, y, k))
            }
            Algorithm::DecisionTree { max_depth } => Box::new(Tree::fit(x, y, max_depth)),
            Algorithm::Svm | Algorithm::NeuralNetwork => {
                return Err(EvalError::Unsupported(self.name().to_string()))
            }
        })
    }
}

pub trait Classifier<T>: Send + Sync {
    fn predict(&self, row: &[T]) -> u8;

    fn predict_all(&self, rows: &[Vec<T>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

#[derive(Debug, Clone)]
struct Scaler<T> {
    mean: Vec<T>,
    sd: Vec<T>,
}

impl<T: Real> Scaler<T> {
    fn fit(x: &[Vec<T>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = T::of_usize(x.len().max(1));
        let mean: Vec<T> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<T>() / n).collect();
        let sd = (0..d)
            .map(|j| {
                let v = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<T>() / n;
                v.sqrt()
            })
            .collect();
        Scaler { mean, sd }
    }

    fn apply(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.sd[j] > T::zero() {
                    (v - self.mean[j]) / self.sd[j]
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// Full-batch gradient descent on the mean log-loss, weights start at 0.
struct Logistic<T> {
    scaler: Scaler<T>,
    weights: Vec<T>,
    bias: T,
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Real> Logistic<T> {
    fn fit(x: &[Vec<T>], y: &[u8], iterations: usize, rate: T) -> Self {
        let scaler = Scaler::fit(x);
        let xs: Vec<Vec<T>> = x.iter().map(|r| scaler.apply(r)).collect();
        let d = scaler.mean.len();
        let n = T::of_usize(xs.len());
        let mut weights = vec![T::zero(); d];
        let mut bias = T::zero();
        for _ in 0..iterations {
            let mut grad = vec![T::zero(); d];
            let mut grad_b = T::zero();
            for (row, &label) in xs.iter().zip(y) {
                let z = row.iter().zip(&weights).fold(bias, |a, (&v, &w)| a + v * w);
                let err = sigmoid(z) - T::of(f64::from(label));
                for j in 0..d {
                    grad[j] = grad[j] + err * row[j];
                }
                grad_b = grad_b + err;
            }
            for j in 0..d {
                weights[j] = weights[j] - rate * grad[j] / n;
            }
            bias = bias - rate * grad_b / n;
        }
        Logistic {
            scaler,
            weights,
            bias,
        }
    }
}

impl<T: Real> Classifier<T> for Logistic<T> {
    fn predict(&self, row: &[T]) -> u8 {
        let r = self.scaler.apply(row);
        let z = r
            .iter()
            .zip(&self.weights)
            .fold(self.bias, |a, (&v, &w)| a + v * w);
        u8::from(z > T::zero())
    }
}

/// Bernoulli naive Bayes; a feature counts as "on" when it is > 0.
struct BernoulliNb<T> {
    log_prior: [T; 2],
    log_on: [Vec<T>; 2],
    log_off: [Vec<T>; 2],
}

impl<T: Real> BernoulliNb<T> {
    fn fit(x: &[Vec<T>], y: &[u8], alpha: T) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut n_class = [0usize; 2];
        let mut on = [vec![0usize; d], vec![0usize; d]];
        for (row, &c) in x.iter().zip(y) {
            let c = usize::from(c);
            n_class[c] += 1;
            for j in 0..d {
                if row[j] > T::zero() {
                    on[c][j] += 1;
                }
            }
        }
        let total = T::of_usize(y.len());
        let two = T::one() + T::one();
        let mk = |c: usize, want_on: bool| -> Vec<T> {
            (0..d)
                .map(|j| {
                    let p = (T::of_usize(on[c][j]) + alpha) / (T::of_usize(n_class[c]) + two * alpha);
                    if want_on {
                        p.ln()
                    } else {
                        (T::one() - p).ln()
                    }
                })
                .collect()
        };
        BernoulliNb {
            log_prior: [
                (T::of_usize(n_class[0]) / total).ln(),
                (T::of_usize(n_class[1]) / total).ln(),
            ],
            log_on: [mk(0, true), mk(1, true)],
            log_off: [mk(0, false), mk(1, false)],
        }
    }
}

impl<T: Real> Classifier<T> for BernoulliNb<T> {
    fn predict(&self, row: &[T]) -> u8 {
        let score = |c: usize| {
            row.iter().enumerate().fold(self.log_prior[c], |acc, (j, &v)| {
                acc + if v > T::zero() {
                    self.log_on[c][j]
                } else {
                    self.log_off[c][j]
                }
            })
        };
        u8::from(score(1) > score(0))
    }
}

/// k nearest neighbors on standardized features; distance ties go to the
/// lower training index, vote ties to the nearest neighbor's class.
struct Knn<T> {
    scaler: Scaler<T>,
    points: Vec<Vec<T>>,
    labels: Vec<u8>,
    k: usize,
}

impl<T: Real> Knn<T> {
    fn fit(x: &[Vec<T>], y: &[u8], k: usize) -> Self {
        let scaler = Scaler::fit(x);
        Knn {
            points: x.iter().map(|r| scaler.apply(r)).collect(),
            scaler,
            labels: y.to_vec(),
            k: k.min(y.len()),
        }
    }
}

impl<T: Real> Classifier<T> for Knn<T> {
    fn predict(&self, row: &[T]) -> u8 {
        let q = self.scaler.apply(row);
        let mut d: Vec<(T, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (super::fairness::sq_dist(p, &q), i))
            .collect();
        let k = self.k;
        let by = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, by);
            d.truncate(k);
        }
        d.sort_by(by);
        let ones = d.iter().filter(|(_, i)| self.labels[*i] == 1).count();
        match (2 * ones).cmp(&k) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => self.labels[d[0].1],
        }
    }
}

enum Node<T> {
    Leaf(u8),
    Split {
        feature: usize,
        threshold: T,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
    },
}

/// CART with Gini impurity; thresholds at midpoints of distinct values.
struct Tree<T> {
    root: Node<T>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl<T: Real> Tree<T> {
    fn fit(x: &[Vec<T>], y: &[u8], max_depth: usize) -> Self {
        let idx: Vec<usize> = (0..y.len()).collect();
        Tree {
            root: Self::grow(x, y, &idx, max_depth),
        }
    }

    fn majority(y: &[u8], idx: &[usize]) -> u8 {
        let ones = idx.iter().filter(|&&i| y[i] == 1).count();
        u8::from(2 * ones > idx.len())
    }

    fn grow(x: &[Vec<T>], y: &[u8], idx: &[usize], depth: usize) -> Node<T> {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| y[i] == 1).count();
        if depth == 0 || n < 2 || pos == 0 || pos == n {
            return Node::Leaf(Self::majority(y, idx));
        }
        let parent = gini(pos, n);
        let d = x[idx[0]].len();
        let mut best: Option<(f64, usize, T)> = None;
        for j in 0..d {
            let mut sorted: Vec<usize> = idx.to_vec();
            sorted.sort_by(|&a, &b| {
                x[a][j]
                    .partial_cmp(&x[b][j])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut left_pos = 0usize;
            for s in 0..n - 1 {
                if y[sorted[s]] == 1 {
                    left_pos += 1;
                }
                let (a, b) = (x[sorted[s]][j], x[sorted[s + 1]][j]);
                if a == b {
                    continue;
                }
                let nl = s + 1;
                let nr = n - nl;
                let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr))
                    / n as f64;
                if impurity < parent - 1e-12 && best.as_ref().is_none_or(|bst| impurity < bst.0) {
                    let two = T::one() + T::one();
                    best = Some((impurity, j, (a + b) / two));
                }
            }
        }
        match best {
            None => Node::Leaf(Self::majority(y, idx)),
            Some((_, feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x[i][feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(Self::grow(x, y, &l, depth - 1)),
                    right: Box::new(Self::grow(x, y, &r, depth - 1)),
                }
            }
        }
    }
}

impl<T: Real> Classifier<T> for Tree<T> {
    fn predict(&self, row: &[T]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(c) => return *c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}
