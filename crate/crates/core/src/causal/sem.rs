//! Linear structural equation model on standardized columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dag::{Dag, Edge};
use super::latent::latent_residuals;
use super::ols::min_norm_least_squares;
use super::CausalError;
use crate::scalar::Real;
use crate::table::{ColumnKind, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats<T> {
    pub mean: T,
    /// Population standard deviation.
    pub sd: T,
}

impl<T: Real> ColumnStats<T> {
    fn of(values: &[f64]) -> Self {
        let n = T::of_usize(values.len().max(1));
        let mean = values.iter().map(|&x| T::of(x)).sum::<T>() / n;
        let var = values
            .iter()
            .map(|&x| {
                let d = T::of(x) - mean;
                d * d
            })
            .sum::<T>()
            / n;
        ColumnStats { mean, sd: var.sqrt() }
    }

    #[inline]
    pub fn standardize(&self, x: f64) -> T {
        if self.sd > T::zero() {
            (T::of(x) - self.mean) / self.sd
        } else {
            T::zero()
        }
    }
}

/// Structural equation of one endogenous node.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation<T> {
    pub node: usize,
    /// Positions (in DAG edge order) of the edges entering `node`.
    pub edges: Vec<usize>,
    pub intercept: T,
    pub residuals: Vec<T>,
}

/// Per-edge relative change of the fitted weight, each in `[-1, 1]`.
/// The effective weight of an edge is `beta * (1 + delta)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Intervention<T> {
    deltas: BTreeMap<Edge, T>,
}

impl<T: Real> Intervention<T> {
    pub fn new() -> Self {
        Intervention {
            deltas: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, edge: Edge, delta: T) -> Result<(), CausalError> {
        check_delta(&edge, delta)?;
        if delta == T::zero() {
            self.deltas.remove(&edge);
        } else {
            self.deltas.insert(edge, delta);
        }
        Ok(())
    }

    pub fn with(mut self, edge: Edge, delta: T) -> Result<Self, CausalError> {
        self.set(edge, delta)?;
        Ok(self)
    }

    pub fn get(&self, edge: &Edge) -> T {
        self.deltas.get(edge).copied().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Edge, &T)> {
        self.deltas.iter()
    }

    pub fn is_identity(&self) -> bool {
        self.deltas.values().all(|d| *d == T::zero())
    }
}

impl<T: Real> FromIterator<(Edge, T)> for Intervention<T> {
    fn from_iter<I: IntoIterator<Item = (Edge, T)>>(iter: I) -> Self {
        Intervention {
            deltas: iter.into_iter().filter(|(_, d)| *d != T::zero()).collect(),
        }
    }
}

fn check_delta<T: Real>(edge: &Edge, delta: T) -> Result<(), CausalError> {
    if delta.is_nan() || delta < -T::one() || delta > T::one() {
        return Err(CausalError::DeltaOutOfRange {
            edge: edge.clone(),
            delta: delta.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Fitted SEM plus the intervention currently applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel<T> {
    dag: Dag,
    /// Table column backing each DAG node.
    column_of: Vec<usize>,
    schema: Vec<String>,
    kinds: Vec<ColumnKind>,
    rows: usize,
    beta: Vec<T>,
    delta: Vec<T>,
    stats: Vec<ColumnStats<T>>,
    equations: Vec<Equation<T>>,
}

struct Prepared<T> {
    column_of: Vec<usize>,
    stats: Vec<ColumnStats<T>>,
    z: Vec<Vec<T>>,
}

fn prepare<T: Real>(dag: &Dag, table: &Table) -> Result<Prepared<T>, CausalError> {
    let mut column_of = Vec::with_capacity(dag.nodes().len());
    let mut stats = Vec::with_capacity(dag.nodes().len());
    let mut z = Vec::with_capacity(dag.nodes().len());
    for name in dag.nodes() {
        let idx = table
            .column_index(name)
            .ok_or_else(|| CausalError::UnknownNode(name.clone()))?;
        let values = table.values_at(idx)?;
        let st = ColumnStats::<T>::of(values);
        if st.sd == T::zero() && !values.is_empty() {
            log::warn!("column `{name}` has zero variance; standardized to 0");
        }
        z.push(values.iter().map(|&x| st.standardize(x)).collect());
        column_of.push(idx);
        stats.push(st);
    }
    Ok(Prepared { column_of, stats, z })
}

fn linear_part<T: Real>(intercept: T, weights: &[T], parents: &[&[T]], row: usize) -> T {
    weights
        .iter()
        .zip(parents)
        .fold(intercept, |acc, (&w, p)| acc + w * p[row])
}

fn build<T: Real>(
    dag: &Dag,
    table: &Table,
    fixed: Option<&BTreeMap<Edge, f64>>,
) -> Result<SemModel<T>, CausalError> {
    let prep = prepare::<T>(dag, table)?;
    let rows = table.row_count();
    let mut beta = vec![T::zero(); dag.edge_count()];
    let mut equations = Vec::new();

    for node in dag.topological_order() {
        if !dag.is_endogenous(node) {
            continue;
        }
        let edges: Vec<usize> = dag
            .edge_pairs()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.1 == node)
            .map(|(i, _)| i)
            .collect();
        let parents: Vec<&[T]> = edges
            .iter()
            .map(|&e| prep.z[dag.edge_pairs()[e].0].as_slice())
            .collect();
        let y = &prep.z[node];

        let intercept = match fixed {
            None => {
                let mut design: Vec<Vec<T>> = vec![vec![T::one(); rows]];
                design.extend(parents.iter().map(|p| p.to_vec()));
                let ls = min_norm_least_squares(&design, y);
                if !ls.is_full_rank() {
                    log::warn!(
                        "singular design for `{}` (rank {} of {}); using minimum-norm solution",
                        dag.nodes()[node],
                        ls.rank,
                        design.len()
                    );
                }
                for (k, &e) in edges.iter().enumerate() {
                    beta[e] = ls.coefficients[k + 1];
                }
                ls.coefficients[0]
            }
            Some(betas) => {
                for &e in &edges {
                    let (s, t) = dag.edge_pairs()[e];
                    let edge = Edge::new(&dag.nodes()[s], &dag.nodes()[t]);
                    let b = betas
                        .get(&edge)
                        .ok_or_else(|| CausalError::UnknownEdge(edge.clone()))?;
                    beta[e] = T::of(*b);
                }
                let w: Vec<T> = edges.iter().map(|&e| beta[e]).collect();
                let total = (0..rows)
                    .map(|r| y[r] - linear_part(T::zero(), &w, &parents, r))
                    .sum::<T>();
                total / T::of_usize(rows.max(1))
            }
        };

        let w: Vec<T> = edges.iter().map(|&e| beta[e]).collect();
        let fit: Vec<T> = (0..rows).map(|r| linear_part(intercept, &w, &parents, r)).collect();
        let mut residuals: Vec<T> = (0..rows).map(|r| y[r] - fit[r]).collect();
        let col = prep.column_of[node];
        if table.columns()[col].kind == ColumnKind::Binary {
            let ones: Vec<bool> = table.values_at(col)?.iter().map(|&v| v == 1.0).collect();
            let as_f64 = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
            residuals = latent_residuals(&as_f64(&fit), &as_f64(&residuals), &ones, node as u64, T::epsilon().to_f64_lossy())
                .into_iter()
                .map(T::of)
                .collect();
        }
        equations.push(Equation {
            node,
            edges,
            intercept,
            residuals,
        });
    }

    Ok(SemModel {
        dag: dag.clone(),
        column_of: prep.column_of,
        schema: table.column_names().map(str::to_string).collect(),
        kinds: table.columns().iter().map(|c| c.kind).collect(),
        rows,
        delta: vec![T::zero(); beta.len()],
        beta,
        stats: prep.stats,
        equations,
    })
}

/// Least-squares fit of every endogenous node on its standardized parents.
pub fn fit_sem<T: Real>(dag: &Dag, table: &Table) -> Result<SemModel<T>, CausalError> {
    build(dag, table, None)
}

/// Uses the given standardized betas instead of fitting; intercepts and
/// residuals are derived from them.
pub fn fit_sem_with_betas<T: Real>(
    dag: &Dag,
    table: &Table,
    betas: &BTreeMap<Edge, f64>,
) -> Result<SemModel<T>, CausalError> {
    build(dag, table, Some(betas))
}

/// Returns a new model whose effective betas reflect `iv`. The deltas are
/// relative to the fitted betas, not to any previously applied intervention.
pub fn apply_intervention<T: Real>(
    model: &SemModel<T>,
    iv: &Intervention<T>,
) -> Result<SemModel<T>, CausalError> {
    let mut delta = vec![T::zero(); model.beta.len()];
    for (edge, &d) in iv.iter() {
        check_delta(edge, d)?;
        let pos = model
            .dag
            .edge_position(edge)
            .ok_or_else(|| CausalError::UnknownEdge(edge.clone()))?;
        delta[pos] = d;
    }
    let mut out = model.clone();
    out.delta = delta;
    Ok(out)
}

/// Recomputes endogenous columns in topological order from the effective
/// betas and stored residuals. Binary columns keep their count of ones:
/// the `k` highest scores become 1, ties going to the lower row index.
pub fn regenerate<T: Real>(model: &SemModel<T>, table: &Table) -> Result<Table, CausalError> {
    let names: Vec<&str> = table.column_names().collect();
    if names != model.schema.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CausalError::SchemaMismatch(format!(
            "expected columns {:?}, found {:?}",
            model.schema, names
        )));
    }
    if table.row_count() != model.rows {
        return Err(CausalError::SchemaMismatch(format!(
            "expected {} rows, found {}",
            model.rows,
            table.row_count()
        )));
    }

    let rows = model.rows;
    let mut current: Vec<Vec<f64>> = model
        .column_of
        .iter()
        .map(|&c| table.values_at(c).map(<[f64]>::to_vec))
        .collect::<Result<_, _>>()?;
    let weights = model.effective_betas_raw();

    for eq in &model.equations {
        let parents: Vec<Vec<T>> = eq
            .edges
            .iter()
            .map(|&e| {
                let p = model.dag.edge_pairs()[e].0;
                current[p].iter().map(|&x| model.stats[p].standardize(x)).collect()
            })
            .collect();
        let parent_refs: Vec<&[T]> = parents.iter().map(Vec::as_slice).collect();
        let w: Vec<T> = eq.edges.iter().map(|&e| weights[e]).collect();
        let scores: Vec<T> = (0..rows)
            .map(|r| linear_part(eq.intercept, &w, &parent_refs, r) + eq.residuals[r])
            .collect();

        let col = model.column_of[eq.node];
        current[eq.node] = if model.kinds[col] == ColumnKind::Binary {
            let ones = table.values_at(col)?.iter().filter(|&&x| x == 1.0).count();
            rank_threshold(&scores, ones)
        } else {
            let st = model.stats[eq.node];
            scores
                .iter()
                .map(|&s| (s * st.sd + st.mean).to_f64_lossy())
                .collect()
        };
    }

    let mut out = table.clone();
    for eq in &model.equations {
        let col = model.column_of[eq.node];
        out = out.with_column(col, std::mem::take(&mut current[eq.node]))?;
    }
    Ok(out)
}

/// 1 for the `k` largest scores (ties to the lower index), 0 elsewhere.
pub fn rank_threshold<T: Real>(scores: &[T], k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![0.0; scores.len()];
    for &i in order.iter().take(k) {
        out[i] = 1.0;
    }
    out
}

impl<T: Real> SemModel<T> {
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn equations(&self) -> &[Equation<T>] {
        &self.equations
    }

    pub fn stats(&self, node: &str) -> Option<ColumnStats<T>> {
        self.dag.node_index(node).map(|i| self.stats[i])
    }

    pub fn equation(&self, node: &str) -> Option<&Equation<T>> {
        let idx = self.dag.node_index(node)?;
        self.equations.iter().find(|e| e.node == idx)
    }

    /// Fitted (pre-intervention) beta of `edge`.
    pub fn original_beta(&self, edge: &Edge) -> Option<T> {
        self.dag.edge_position(edge).map(|p| self.beta[p])
    }

    pub fn delta(&self, edge: &Edge) -> Option<T> {
        self.dag.edge_position(edge).map(|p| self.delta[p])
    }

    /// `1 + delta`: the factor applied to the fitted beta.
    pub fn multiplier(&self, edge: &Edge) -> Option<T> {
        self.delta(edge).map(|d| T::one() + d)
    }

    pub fn beta(&self, edge: &Edge) -> Option<T> {
        self.dag
            .edge_position(edge)
            .map(|p| self.beta[p] * (T::one() + self.delta[p]))
    }

    fn effective_betas_raw(&self) -> Vec<T> {
        self.beta
            .iter()
            .zip(&self.delta)
            .map(|(&b, &d)| b * (T::one() + d))
            .collect()
    }

    /// Effective betas in DAG edge order.
    pub fn effective_betas(&self) -> Vec<(Edge, T)> {
        self.dag
            .edges()
            .into_iter()
            .zip(self.effective_betas_raw())
            .collect()
    }

    pub fn intervention(&self) -> Intervention<T> {
        self.dag
            .edges()
            .into_iter()
            .zip(self.delta.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: [&str; 0] = [];

    fn copy_table() -> Table {
        let a: Vec<u8> = (0..100).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        Table::from_binary_columns(vec![("A".into(), a.clone()), ("B".into(), a)], "B", &NONE).unwrap()
    }

    #[test]
    fn perfect_copy_has_unit_beta() {
        let t = copy_table();
        let dag = Dag::with_edges(["A", "B"], &[("A", "B")]).unwrap();
        let m: SemModel<f64> = fit_sem(&dag, &t).unwrap();
        let e = Edge::new("A", "B");
        assert!((m.beta(&e).unwrap() - 1.0).abs() < 1e-9);
        assert!(m.equation("B").unwrap().residuals.iter().all(|r| r.abs() < 1e-9));
        assert!(m.equation("A").is_none());
    }

    #[test]
    fn delta_bounds_and_unknown_edges() {
        let t = copy_table();
        let dag = Dag::with_edges(["A", "B"], &[("A", "B")]).unwrap();
        let m: SemModel<f64> = fit_sem(&dag, &t).unwrap();
        let mut iv = Intervention::new();
        assert!(matches!(
            iv.set(Edge::new("A", "B"), 1.5),
            Err(CausalError::DeltaOutOfRange { .. })
        ));
        iv.set(Edge::new("B", "A"), 0.5).unwrap();
        assert!(matches!(apply_intervention(&m, &iv), Err(CausalError::UnknownEdge(_))));
    }

    #[test]
    fn full_down_weight_zeroes_beta_and_keeps_input() {
        let t = copy_table();
        let dag = Dag::with_edges(["A", "B"], &[("A", "B")]).unwrap();
        let m: SemModel<f64> = fit_sem(&dag, &t).unwrap();
        let e = Edge::new("A", "B");
        let iv = Intervention::new().with(e.clone(), -1.0).unwrap();
        let m2 = apply_intervention(&m, &iv).unwrap();
        assert_eq!(m2.beta(&e).unwrap(), 0.0);
        assert_eq!(m2.multiplier(&e).unwrap(), 0.0);
        assert!((m.beta(&e).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_threshold_ties_go_to_low_index() {
        assert_eq!(rank_threshold(&[0.0f64, 0.0, 0.0, 0.0], 2), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(rank_threshold(&[0.1f64, 0.5, -1.0, 0.5], 2), vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn schema_mismatch() {
        let t = copy_table();
        let dag = Dag::with_edges(["A", "B"], &[("A", "B")]).unwrap();
        let m: SemModel<f64> = fit_sem(&dag, &t).unwrap();
        let other = Table::from_binary_columns(vec![("B".into(), vec![0, 1])], "B", &NONE).unwrap();
        assert!(matches!(regenerate(&m, &other), Err(CausalError::SchemaMismatch(_))));
    }

    #[test]
    fn numeric_endogenous_identity() {
        let x: Vec<f64> = (0..50).map(|i| f64::from(i % 7)).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + (i % 3) as f64).collect();
        let j: Vec<f64> = (0..50).map(|i| f64::from(i % 2)).collect();
        let t = Table::from_numeric_columns(
            vec![("X".into(), x), ("Y".into(), y.clone()), ("J".into(), j)],
            "J",
            &NONE,
        )
        .unwrap();
        let dag = Dag::with_edges(["X", "Y", "J"], &[("X", "Y")]).unwrap();
        let m: SemModel<f64> = fit_sem(&dag, &t).unwrap();
        let out = regenerate(&m, &t).unwrap();
        for (a, b) in out.values("Y").unwrap().iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
