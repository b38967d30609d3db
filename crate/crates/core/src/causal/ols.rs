//! Minimum-norm least squares through a one-sided Jacobi SVD.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    /// Numerical rank of the design.
    pub rank: usize,
}

impl<T> LeastSquares<T> {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.coefficients.len()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Solves `min ||X b - y||` with the smallest `||b||` among minimizers.
/// `columns` holds the design column-major: `columns[j][i] = X[i][j]`.
pub fn min_norm_least_squares<T: Real>(columns: &[Vec<T>], y: &[T]) -> LeastSquares<T> {
    let p = columns.len();
    let n = y.len();
    let mut a: Vec<Vec<T>> = columns.to_vec();
    let mut v: Vec<Vec<T>> = (0..p)
        .map(|j| (0..p).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let mut rotated = false;
        for j in 0..p {
            for k in j + 1..p {
                let alpha = dot(&a[j], &a[j]);
                let beta = dot(&a[k], &a[k]);
                let gamma = dot(&a[j], &a[k]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, z) = (a[j][i], a[k][i]);
                    a[j][i] = c * x - s * z;
                    a[k][i] = s * x + c * z;
                }
                for i in 0..p {
                    let (x, z) = (v[j][i], v[k][i]);
                    v[j][i] = c * x - s * z;
                    v[k][i] = s * x + c * z;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<T> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    let sigma_max = sigma.iter().copied().fold(T::zero(), T::max);
    let tol = eps * T::of_usize(n.max(p).max(1)) * sigma_max;
    let mut coefficients = vec![T::zero(); p];
    let mut rank = 0;
    for j in 0..p {
        if sigma[j] <= tol || sigma[j] == T::zero() {
            continue;
        }
        rank += 1;
        // u_j = a_j / sigma_j, so u_j . y / sigma_j = a_j . y / sigma_j^2
        let w = dot(&a[j], y) / (sigma[j] * sigma[j]);
        for i in 0..p {
            coefficients[i] = coefficients[i] + w * v[j][i];
        }
    }
    LeastSquares { coefficients, rank }
}
