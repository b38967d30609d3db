//! Latent residuals for binary endogenous nodes.
//!
//! A binary column is treated as a thresholded latent score
//! `fit + sigma * z`. Each row's `z` is a seeded draw from the standard
//! normal truncated to the side of the threshold its observed value
//! demands, so every 1-row keeps a higher score than every 0-row until an
//! intervention moves the fitted part.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 0x5eed_1a7e;

/// Returns residuals `latent - fit`. Falls back to `exact` when the column
/// is constant or perfectly fitted. `eps` is the working precision; the
/// lowest 1-score is kept a few thousand ulps above the threshold.
pub(crate) fn latent_residuals(
    fit: &[f64],
    exact: &[f64],
    ones: &[bool],
    stream: u64,
    eps: f64,
) -> Vec<f64> {
    let n = fit.len();
    let k = ones.iter().filter(|&&b| b).count();
    let sigma = (exact.iter().map(|r| r * r).sum::<f64>() / n.max(1) as f64).sqrt();
    if k == 0 || k == n || !(sigma > 1e-12) || !sigma.is_finite() {
        return exact.to_vec();
    }
    let std = Normal::standard();
    let c = threshold(fit, k, sigma, &std);
    let gap = 1e3 * eps * sigma.max(c.abs()).max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    rng.set_stream(stream);
    fit.iter()
        .zip(ones)
        .map(|(&f, &one)| {
            let z0 = (c - f) / sigma;
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let z = if one { upper_tail(z0, u, &std) } else { -upper_tail(-z0, u, &std) };
            let mut latent = f + sigma * z;
            if !latent.is_finite() {
                latent = c;
            }
            if one {
                latent = latent.max(c + gap);
            } else {
                latent = latent.min(c);
            }
            latent - f
        })
        .collect()
}

/// Draw from N(0, 1) conditioned on `Z > a`, via the inverse CDF on the
/// numerically safer tail.
fn upper_tail(a: f64, u: f64, std: &Normal) -> f64 {
    if a < 0.0 {
        let lo = std.cdf(a);
        std.inverse_cdf(lo + u * (1.0 - lo))
    } else {
        let q = std.cdf(-a);
        -std.inverse_cdf(u * q)
    }
}

/// Threshold `c` at which the expected number of latent scores above it
/// equals `k`.
fn threshold(fit: &[f64], k: usize, sigma: f64, std: &Normal) -> f64 {
    let expected = |c: f64| fit.iter().map(|&f| std.cdf((f - c) / sigma)).sum::<f64>();
    let min = fit.iter().copied().fold(f64::INFINITY, f64::min);
    let max = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (min - 40.0 * sigma, max + 40.0 * sigma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) > k as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
