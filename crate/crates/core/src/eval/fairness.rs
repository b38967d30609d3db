//! Dataset-level fairness measures.

use super::EvalError;
use crate::scalar::Real;
use crate::table::Table;

#[inline]
pub(crate) fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Non-label columns standardized over the whole table (zero-variance
/// columns become 0). Row-major.
pub fn standardized_features<T: Real>(table: &Table) -> Result<Vec<Vec<T>>, EvalError> {
    let n = table.row_count();
    let mut rows = vec![Vec::new(); n];
    for idx in table.feature_indices() {
        let col = table.values_at(idx)?;
        let nn = T::of_usize(n.max(1));
        let mean = col.iter().map(|&v| T::of(v)).sum::<T>() / nn;
        let sd = (col.iter().map(|&v| (T::of(v) - mean).powi(2)).sum::<T>() / nn).sqrt();
        for (r, &v) in col.iter().enumerate() {
            rows[r].push(if sd > T::zero() {
                (T::of(v) - mean) / sd
            } else {
                T::zero()
            });
        }
    }
    Ok(rows)
}

/// `100 ×` mean fraction of each row's `k` nearest neighbors (Euclidean on
/// standardized non-label features of `table`, ties to the lower row index)
/// whose entry in `labels` differs from the row's own.
pub fn individual_fairness<T: Real>(table: &Table, labels: &[u8], k: usize) -> Result<T, EvalError> {
    let x = standardized_features::<T>(table)?;
    individual_fairness_points(&x, labels, k)
}

/// Same measure over arbitrary points.
pub fn individual_fairness_points<T: Real>(points: &[Vec<T>], labels: &[u8], k: usize) -> Result<T, EvalError> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(EvalError::InvalidK { k, rows: n });
    }
    if labels.len() != n {
        return Err(EvalError::LengthMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let cmp = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    let mut disagreements = 0usize;
    let mut buf: Vec<(T, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(&points[i], &points[j]), j)));
        buf.select_nth_unstable_by(k - 1, cmp);
        disagreements += buf[..k].iter().filter(|(_, j)| labels[*j] != labels[i]).count();
    }
    Ok(T::of(100.0) * T::of_usize(disagreements) / T::of_usize(n * k))
}

/// Disparate-impact ratio across the two groups of a binary sensitive
/// column, as a percentage: `100 × min(rate) / max(rate)`. Both rates zero
/// count as perfect parity.
pub fn parity<T: Real>(labels: &[u8], sensitive: &[f64]) -> Result<T, EvalError> {
    if labels.len() != sensitive.len() {
        return Err(EvalError::LengthMismatch {
            expected: sensitive.len(),
            found: labels.len(),
        });
    }
    let mut size = [0usize; 2];
    let mut pos = [0usize; 2];
    for (&l, &s) in labels.iter().zip(sensitive) {
        let g = if s == 1.0 {
            1
        } else if s == 0.0 {
            0
        } else {
            return Err(EvalError::NonBinarySensitive);
        };
        size[g] += 1;
        pos[g] += usize::from(l == 1);
    }
    if size[0] == 0 || size[1] == 0 {
        return Err(EvalError::EmptyGroup);
    }
    let rate = |g: usize| T::of_usize(pos[g]) / T::of_usize(size[g]);
    let (a, b) = (rate(0), rate(1));
    let hi = a.max(b);
    if hi == T::zero() {
        return Ok(T::of(100.0));
    }
    Ok(T::of(100.0) * a.min(b) / hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(features: Vec<Vec<u8>>, label: Vec<u8>) -> Table {
        let mut cols: Vec<(String, Vec<u8>)> = features
            .into_iter()
            .enumerate()
            .map(|(i, c)| (format!("F{i}"), c))
            .collect();
        cols.push(("Y".into(), label));
        Table::from_binary_columns(cols, "Y", &[] as &[&str]).unwrap()
    }

    #[test]
    fn constant_labels_are_perfectly_fair() {
        let t = table(vec![vec![0, 1, 0, 1, 1]], vec![1; 5]);
        assert_eq!(individual_fairness::<f64>(&t, &[1; 5], 2).unwrap(), 0.0);
    }

    #[test]
    fn twin_rows_with_opposite_labels() {
        let t = table(vec![vec![1, 1]], vec![0, 1]);
        assert_eq!(individual_fairness::<f64>(&t, &[0, 1], 1).unwrap(), 100.0);
    }

    #[test]
    fn k_bounds() {
        let t = table(vec![vec![1, 0]], vec![0, 1]);
        assert!(matches!(individual_fairness::<f64>(&t, &[0, 1], 0), Err(EvalError::InvalidK { .. })));
        assert!(matches!(individual_fairness::<f64>(&t, &[0, 1], 2), Err(EvalError::InvalidK { .. })));
    }

    #[test]
    fn parity_cases() {
        // rates 0.2 vs 0.5
        let mut labels = vec![0u8; 20];
        let mut sens = vec![0.0; 20];
        for i in 0..10 {
            sens[i] = 1.0;
        }
        labels[0] = 1;
        labels[1] = 1;
        for i in 10..15 {
            labels[i] = 1;
        }
        let p: f64 = parity(&labels, &sens).unwrap();
        assert!((p - 40.0).abs() < 1e-12);
        let flipped: Vec<f64> = sens.iter().map(|s| 1.0 - s).collect();
        assert_eq!(parity::<f64>(&labels, &flipped).unwrap(), p);
        assert_eq!(parity::<f64>(&[0, 0], &[0.0, 1.0]).unwrap(), 100.0);
        assert_eq!(parity::<f64>(&[1, 0, 1, 0], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 100.0);
        assert!(matches!(parity::<f64>(&[1, 0], &[1.0, 1.0]), Err(EvalError::EmptyGroup)));
    }
}
