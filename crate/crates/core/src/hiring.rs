//! Synthetic hiring dataset: nine columns, a binary `Job` decision that
//! depends on qualifications and leaks the sensitive attributes.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::table::{CutRule, Table};

pub const COLUMNS: [&str; 9] = [
    "Age",
    "Gender",
    "Race",
    "WorkExp",
    "GPA",
    "SAT",
    "CollegeRank",
    "Major",
    "Job",
];

pub const LABEL: &str = "Job";

pub const SENSITIVE: [&str; 3] = ["Age", "Gender", "Race"];

/// Share of candidates that get the job.
pub const POSITIVE_RATE: f64 = 0.35;

/// Weight of the qualification score; the sensitive score gets the rest.
pub const QUALIFICATION_WEIGHT: f64 = 0.7;

const MAJORS: [&str; 4] = ["Computer Science", "Engineering", "Business", "Arts"];

/// Expert DAG for the hiring data, in DAG-file syntax.
pub const HIRING_DAG: &str = "\
# hiring scenario
Age -> WorkExp
GPA -> SAT
SAT -> CollegeRank
WorkExp -> Job
GPA -> Job
SAT -> Job
CollegeRank -> Job
Major -> Job
Gender -> Job
Race -> Job
";

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn zscores(values: &[f64]) -> Vec<f64> {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    values
        .iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

/// Generates `n` candidates. Pure function of `(seed, n)`.
pub fn generate_hiring(seed: u64, n: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut age = Vec::with_capacity(n);
    let mut gender = Vec::with_capacity(n);
    let mut race = Vec::with_capacity(n);
    let mut work = Vec::with_capacity(n);
    let mut gpa = Vec::with_capacity(n);
    let mut sat = Vec::with_capacity(n);
    let mut rank = Vec::with_capacity(n);
    let mut major = Vec::with_capacity(n);

    for _ in 0..n {
        let a: u32 = rng.random_range(22..=62);
        let g = rng.random_bool(0.5);
        let r = rng.random_bool(0.5);
        let z_work: f64 = rng.sample(StandardNormal);
        let z_gpa: f64 = rng.sample(StandardNormal);
        let z_sat: f64 = rng.sample(StandardNormal);
        let z_rank: f64 = rng.sample(StandardNormal);
        let u_major: f64 = rng.random();

        let a = f64::from(a);
        // months of experience, logistic in age
        let w = (48.0 * sigmoid(0.12 * (a - 42.0) + 0.8 * z_work)).round();
        let gp = ((2.0 + 2.0 * sigmoid(0.9 * z_gpa)) * 100.0).round() / 100.0;
        let sat_latent = 0.8 * z_gpa + 0.6 * z_sat;
        let s = (400.0 + 1200.0 * sigmoid(sat_latent)).round();
        let elite = sat_latent + 0.8 * z_rank > 0.7;
        let tier = if elite {
            "Elite"
        } else if sat_latent + 0.8 * z_rank > -0.3 {
            "Tier 2"
        } else {
            "Tier 3"
        };
        let m = if u_major < 0.4 {
            MAJORS[0]
        } else {
            MAJORS[1 + ((u_major - 0.4) / 0.2).floor().min(2.0) as usize]
        };

        age.push(a);
        gender.push(f64::from(u8::from(g)));
        race.push(f64::from(u8::from(r)));
        work.push(w);
        gpa.push(gp);
        sat.push(s);
        rank.push(tier.to_string());
        major.push(m.to_string());
    }

    let elite: Vec<f64> = rank.iter().map(|t| f64::from(u8::from(t == "Elite"))).collect();
    let cs: Vec<f64> = major.iter().map(|m| f64::from(u8::from(m == MAJORS[0]))).collect();
    let parts = [zscores(&work), zscores(&gpa), zscores(&sat), zscores(&elite), zscores(&cs)];
    let qual_raw: Vec<f64> = (0..n).map(|i| parts.iter().map(|p| p[i]).sum()).collect();
    let sens_raw: Vec<f64> = (0..n).map(|i| gender[i] + race[i]).collect();
    let (qual, sens) = (zscores(&qual_raw), zscores(&sens_raw));
    let score: Vec<f64> = (0..n)
        .map(|i| QUALIFICATION_WEIGHT * qual[i] + (1.0 - QUALIFICATION_WEIGHT) * sens[i])
        .collect();

    let hired = (POSITIVE_RATE * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut job = vec![0.0; n];
    for &i in order.iter().take(hired) {
        job[i] = 1.0;
    }

    Table::from_mixed(
        vec![
            ("Age".into(), age),
            ("Gender".into(), gender),
            ("Race".into(), race),
            ("WorkExp".into(), work),
            ("GPA".into(), gpa),
            ("SAT".into(), sat),
            ("Job".into(), job),
        ],
        vec![("CollegeRank".into(), rank), ("Major".into(), major)],
        &COLUMNS,
        LABEL,
        &SENSITIVE,
    )
    .expect("generator produces a valid table")
}

/// Binarization rules for the hiring columns.
pub fn hiring_cuts() -> BTreeMap<String, CutRule> {
    BTreeMap::from([
        ("Age".to_string(), CutRule::Above(42.0)),
        ("WorkExp".to_string(), CutRule::Above(24.0)),
        ("GPA".to_string(), CutRule::Above(3.0)),
        ("SAT".to_string(), CutRule::Above(1000.0)),
        (
            "CollegeRank".to_string(),
            CutRule::OneOf(BTreeSet::from(["Elite".to_string()])),
        ),
        (
            "Major".to_string(),
            CutRule::OneOf(BTreeSet::from([MAJORS[0].to_string()])),
        ),
    ])
}

/// Generated and binarized in one step.
pub fn binary_hiring(seed: u64, n: usize) -> Table {
    generate_hiring(seed, n)
        .binarize(&hiring_cuts())
        .expect("hiring cuts cover every non-binary column")
}
