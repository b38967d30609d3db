//! Pearson chi-square test of conditional independence on discrete columns.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiOutcome {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Columns re-coded as dense level indices `0..levels`.
#[derive(Debug, Clone)]
pub struct DiscreteData {
    codes: Vec<Vec<u32>>,
    levels: Vec<u32>,
    rows: usize,
}

impl DiscreteData {
    /// Codes every column of `table`; levels are the sorted distinct values.
    pub fn from_table(table: &Table) -> Self {
        let mut codes = Vec::with_capacity(table.column_count());
        let mut levels = Vec::with_capacity(table.column_count());
        for name in table.column_names() {
            let text = table.text_values(name).expect("column exists");
            let numeric = table.values(name).ok();
            let (c, l) = match numeric {
                Some(values) => encode_numeric(values),
                None => encode_text(&text),
            };
            codes.push(c);
            levels.push(l);
        }
        DiscreteData {
            codes,
            levels,
            rows: table.row_count(),
        }
    }

    pub fn levels(&self, col: usize) -> u32 {
        self.levels[col]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn code(&self, col: usize, row: usize) -> u32 {
        self.codes[col][row]
    }

    /// Tests `x ⟂ y | cond`. Strata with no rows contribute nothing; each
    /// stratum adds `(r - 1)(c - 1)` degrees of freedom over its non-empty
    /// rows and columns. Zero total degrees of freedom yields `p = 1`.
    pub fn test(&self, x: usize, y: usize, cond: &[usize]) -> CiOutcome {
        let (lx, ly) = (self.levels[x] as usize, self.levels[y] as usize);
        let mut strata: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for r in 0..self.rows {
            let mut key = 0u64;
            for &z in cond {
                key = key * u64::from(self.levels[z]) + u64::from(self.codes[z][r]);
            }
            let cell = self.codes[x][r] as usize * ly + self.codes[y][r] as usize;
            strata.entry(key).or_insert_with(|| vec![0; lx * ly])[cell] += 1;
        }
        let mut statistic = 0.0;
        let mut df = 0usize;
        for counts in strata.values() {
            let (s, d) = stratum_chi_square(counts, lx, ly);
            statistic += s;
            df += d;
        }
        let p_value = p_value(statistic, df);
        CiOutcome {
            statistic,
            df,
            p_value,
        }
    }
}

fn encode_numeric(values: &[f64]) -> (Vec<u32>, u32) {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let codes = values
        .iter()
        .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).expect("present") as u32)
        .collect();
    (codes, distinct.len() as u32)
}

fn encode_text(values: &[String]) -> (Vec<u32>, u32) {
    let mut distinct: Vec<&String> = values.iter().collect();
    distinct.sort();
    distinct.dedup();
    let codes = values
        .iter()
        .map(|v| distinct.binary_search(&v).expect("present") as u32)
        .collect();
    (codes, distinct.len() as u32)
}

/// Chi-square statistic and degrees of freedom of one `lx × ly` table.
pub(crate) fn stratum_chi_square(counts: &[u64], lx: usize, ly: usize) -> (f64, usize) {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return (0.0, 0);
    }
    let rows: Vec<u64> = (0..lx).map(|i| (0..ly).map(|j| counts[i * ly + j]).sum()).collect();
    let cols: Vec<u64> = (0..ly).map(|j| (0..lx).map(|i| counts[i * ly + j]).sum()).collect();
    let nz_rows = rows.iter().filter(|&&r| r > 0).count();
    let nz_cols = cols.iter().filter(|&&c| c > 0).count();
    let nf = n as f64;
    let mut stat = 0.0;
    for i in 0..lx {
        for j in 0..ly {
            let expected = rows[i] as f64 * cols[j] as f64 / nf;
            if expected > 0.0 {
                let d = counts[i * ly + j] as f64 - expected;
                stat += d * d / expected;
            }
        }
    }
    (stat, nz_rows.saturating_sub(1) * nz_cols.saturating_sub(1))
}

pub(crate) fn p_value(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    dist.sf(statistic).clamp(0.0, 1.0)
}
