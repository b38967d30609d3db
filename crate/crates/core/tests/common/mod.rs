//! Independent reference implementations used by the oracle and acceptance
//! tests. None of them call into the library's numeric code.
#![allow(dead_code)]

use debias_core::hiring::binary_hiring;
use debias_core::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Binary chain `A -> B -> C`; each link copies its parent with probability
/// `1 - flip`.
pub fn chain_table(seed: u64, n: usize, flip: f64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let x: u8 = rng.random_bool(0.5).into();
        let y = if rng.random_bool(flip) { 1 - x } else { x };
        let z = if rng.random_bool(flip) { 1 - y } else { y };
        a.push(x);
        b.push(y);
        c.push(z);
    }
    Table::from_binary_columns(
        vec![("A".into(), a), ("B".into(), b), ("C".into(), c)],
        "C",
        &[] as &[&str],
    )
    .unwrap()
}

pub fn independent_table(seed: u64, n: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = ["X", "Y", "Z"]
        .iter()
        .map(|name| (name.to_string(), (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect()))
        .collect();
    Table::from_binary_columns(cols, "Z", &[] as &[&str]).unwrap()
}

/// Pearson chi-square for `x ⟂ y | cond` by enumerating every stratum of the
/// conditioning set. Returns `(statistic, df, p)`.
pub fn chi_square_oracle(table: &Table, x: &str, y: &str, cond: &[&str]) -> (f64, usize, f64) {
    let levels = |name: &str| {
        let mut v: Vec<f64> = table.values(name).unwrap().to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (lx, ly) = (levels(x), levels(y));
    let cond_levels: Vec<Vec<f64>> = cond.iter().map(|c| levels(c)).collect();
    let xs = table.values(x).unwrap();
    let ys = table.values(y).unwrap();
    let zs: Vec<&[f64]> = cond.iter().map(|c| table.values(c).unwrap()).collect();

    let strata: usize = cond_levels.iter().map(Vec::len).product();
    let mut stat = 0.0;
    let mut df = 0;
    for s in 0..strata {
        // decode stratum index into one level per conditioning column
        let mut rem = s;
        let mut want = vec![0.0; cond.len()];
        for (i, lv) in cond_levels.iter().enumerate().rev() {
            want[i] = lv[rem % lv.len()];
            rem /= lv.len();
        }
        let rows: Vec<usize> = (0..table.row_count())
            .filter(|&r| zs.iter().zip(&want).all(|(z, w)| z[r] == *w))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let count = |a: f64, b: f64| rows.iter().filter(|&&r| xs[r] == a && ys[r] == b).count() as f64;
        let row_tot: Vec<f64> = lx.iter().map(|&a| ly.iter().map(|&b| count(a, b)).sum()).collect();
        let col_tot: Vec<f64> = ly.iter().map(|&b| lx.iter().map(|&a| count(a, b)).sum()).collect();
        for (i, &a) in lx.iter().enumerate() {
            for (j, &b) in ly.iter().enumerate() {
                let e = row_tot[i] * col_tot[j] / n;
                if e > 0.0 {
                    stat += (count(a, b) - e).powi(2) / e;
                }
            }
        }
        let nr = row_tot.iter().filter(|&&t| t > 0.0).count();
        let nc = col_tot.iter().filter(|&&t| t > 0.0).count();
        df += nr.saturating_sub(1) * nc.saturating_sub(1);
    }
    let p = if df == 0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(df as f64 / 2.0, stat / 2.0)
    };
    (stat, df, p)
}

/// Z-scores with the population standard deviation; constant columns map to 0.
pub fn zscore(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    values
        .iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

/// Solves `(XᵀX) b = Xᵀy` by Gauss-Jordan elimination with partial pivoting.
/// `columns` includes the intercept column if one is wanted.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = columns.len();
    let mut m = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            m[i][j] = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
        }
        m[i][p] = columns[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    for c in 0..p {
        let pivot = (c..p).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, pivot);
        let d = m[c][c];
        assert!(d.abs() > 1e-12, "singular normal equations");
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != c {
                let f = m[r][c];
                let row_c = m[c].clone();
                for (v, rc) in m[r].iter_mut().zip(row_c) {
                    *v -= f * rc;
                }
            }
        }
    }
    m.iter().map(|row| row[p]).collect()
}

/// Individual fairness by brute force: every pairwise distance, full sort by
/// `(distance, index)`, first `k` neighbors.
pub fn knn_fairness_oracle(points: &[Vec<f64>], labels: &[u8], k: usize) -> f64 {
    let n = points.len();
    let mut disagree = 0usize;
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dist: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                (dist, j)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        disagree += d[..k].iter().filter(|(_, j)| labels[*j] != labels[i]).count();
    }
    100.0 * disagree as f64 / (n * k) as f64
}

/// Positive-rate ratio between the two groups of `sensitive`, by counting.
pub fn parity_oracle(labels: &[u8], sensitive: &[f64]) -> f64 {
    let rate = |g: f64| {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| sensitive[i] == g).collect();
        members.iter().filter(|&&i| labels[i] == 1).count() as f64 / members.len() as f64
    };
    let (a, b) = (rate(0.0), rate(1.0));
    if a == 0.0 && b == 0.0 {
        100.0
    } else {
        100.0 * a.min(b) / a.max(b)
    }
}

/// Numeric `A -> B -> Y <- C` fixture with an unrelated binary label `L`.
pub fn numeric_fixture(seed: u64, n: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b: Vec<f64> = a.iter().map(|x| 0.6 * x + rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.5 * a[i] - 0.4 * b[i] + 0.2 * c[i] + rng.random_range(-0.5..0.5))
        .collect();
    let label: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
    Table::from_numeric_columns(
        vec![("A".into(), a), ("B".into(), b), ("C".into(), c), ("Y".into(), y), ("L".into(), label)],
        "L",
        &[] as &[&str],
    )
    .unwrap()
}

/// Binary hiring rows with Gender as the only sensitive column.
pub fn small_binary(seed: u64, n: usize) -> Table {
    let t = binary_hiring(seed, n);
    Table::from_numeric_columns(
        t.column_names().map(|c| (c.to_string(), t.values(c).unwrap().to_vec())).collect(),
        "Job",
        &["Gender"],
    )
    .unwrap()
}
