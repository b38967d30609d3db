use std::collections::BTreeMap;

use debias_core::causal::{apply_intervention, fit_sem, load_dag, regenerate, Edge, Intervention};
use debias_core::eval::{individual_fairness_points, parity};
use debias_core::hiring::{binary_hiring, generate_hiring, hiring_cuts, HIRING_DAG};
use debias_core::metrics::compute_outcome;
use debias_core::preferences::{create_group, AttributeSelection};
use debias_core::Table;
use proptest::prelude::*;

const NONE: [&str; 0] = [];

fn table_strategy() -> impl Strategy<Value = Table> {
    (1usize..40, 1usize..5).prop_flat_map(|(rows, cols)| {
        let numeric = prop::collection::vec(prop::collection::vec(-1e6f64..1e6, rows), cols);
        let label = prop::collection::vec(0u8..=1, rows);
        (numeric, label).prop_map(|(numeric, label)| {
            let mut columns: Vec<(String, Vec<f64>)> = numeric
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("c{i}"), v))
                .collect();
            columns.push(("y".into(), label.into_iter().map(f64::from).collect()));
            Table::from_numeric_columns(columns, "y", &NONE).unwrap()
        })
    })
}

fn edges() -> Vec<Edge> {
    HIRING_DAG
        .lines()
        .filter(|l| l.contains("->"))
        .map(|l| l.parse().unwrap())
        .collect()
}

fn intervention_strategy() -> impl Strategy<Value = Intervention<f64>> {
    prop::collection::vec(-1.0f64..=1.0, edges().len())
        .prop_map(|deltas| edges().into_iter().zip(deltas).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(table in table_strategy()) {
        let text = table.to_csv_string();
        let back = Table::read_csv(text.as_bytes(), "y", &NONE).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn binarize_is_idempotent(seed in 0u64..1000, rows in 5usize..200) {
        let once = generate_hiring(seed, rows).binarize(&hiring_cuts()).unwrap();
        prop_assert!(once.is_all_binary());
        let twice = once.binarize(&BTreeMap::new()).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn care_budget_sums_to_one(picks in prop::collection::btree_set((0usize..8, 0u8..=1), 1..16)) {
        let features = ["Age", "Gender", "Race", "WorkExp", "GPA", "SAT", "CollegeRank", "Major"];
        let sel: Vec<AttributeSelection> = picks.iter().map(|&(f, v)| AttributeSelection::new(features[f], v)).collect();
        let g = create_group::<f64>("g", "p", sel).unwrap();
        let total: f64 = g.care_weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(g.care_weights().iter().all(|&w| w == g.care_weights()[0]));
    }

    #[test]
    fn metric_ranges(points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 12..40),
                     labels in prop::collection::vec(0u8..=1, 40),
                     groups in prop::collection::vec(0u8..=1, 40),
                     k in 1usize..10) {
        let n = points.len();
        let labels = &labels[..n];
        let v: f64 = individual_fairness_points(&points, labels, k).unwrap();
        prop_assert!((0.0..=100.0).contains(&v));
        let s: Vec<f64> = groups[..n].iter().map(|&g| f64::from(g)).collect();
        if s.contains(&0.0) && s.contains(&1.0) {
            let p: f64 = parity(labels, &s).unwrap();
            prop_assert!((0.0..=100.0).contains(&p));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regeneration_conserves_counts(seed in 0u64..50, iv in intervention_strategy()) {
        let table = binary_hiring(seed, 300);
        let dag = load_dag(HIRING_DAG, &table).unwrap().0;
        let model = apply_intervention(&fit_sem::<f64>(&dag, &table).unwrap(), &iv).unwrap();
        let out = regenerate(&model, &table).unwrap();
        for name in table.column_names() {
            let ones = |t: &Table| t.values(name).unwrap().iter().sum::<f64>();
            prop_assert_eq!(ones(&out), ones(&table), "{}", name);
        }
        // exogenous columns are copied
        for name in ["Age", "Gender", "Race", "GPA", "Major"] {
            prop_assert_eq!(out.values(name).unwrap(), table.values(name).unwrap());
        }
    }

    #[test]
    fn zero_intervention_is_identity(seed in 0u64..1000, rows in 40usize..400) {
        let table = binary_hiring(seed, rows);
        let dag = load_dag(HIRING_DAG, &table).unwrap().0;
        let model = apply_intervention(&fit_sem::<f64>(&dag, &table).unwrap(), &Intervention::new()).unwrap();
        prop_assert_eq!(regenerate(&model, &table).unwrap(), table);
    }

    #[test]
    fn gender_weight_moves_jobs_monotonically(seed in 0u64..50, a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
        let table = binary_hiring(seed, 300);
        let dag = load_dag(HIRING_DAG, &table).unwrap().0;
        let base = fit_sem::<f64>(&dag, &table).unwrap();
        let edge = Edge::new("Gender", "Job");
        let sign = base.original_beta(&edge).unwrap().signum();
        let hired_ones = |d: f64| {
            let iv = Intervention::new().with(edge.clone(), d).unwrap();
            let out = regenerate(&apply_intervention(&base, &iv).unwrap(), &table).unwrap();
            compute_outcome(&out, "Job").unwrap().count("Gender", 1) as f64
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sign * hired_ones(lo) <= sign * hired_ones(hi));
    }

    #[test]
    fn f32_and_f64_agree_on_identity(seed in 0u64..200) {
        let table = binary_hiring(seed, 120);
        let dag = load_dag(HIRING_DAG, &table).unwrap().0;
        let model = fit_sem::<f32>(&dag, &table).unwrap();
        prop_assert_eq!(regenerate(&model, &table).unwrap(), table);
    }
}
