//! Order-independent ("stable") PC algorithm over discrete columns.
//!
//! Skeleton search removes an edge as soon as some conditioning set drawn
//! from the adjacency snapshot of the current level makes the pair
//! independent (`p > alpha`). Orientation runs v-structures, then Meek
//! rules R1–R3 to a fixpoint. Whatever is still undirected gets oriented
//! from the lower column index to the higher one, or the reverse when that
//! would close a cycle, re-running Meek after every such choice.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ci::{CiOutcome, DiscreteData};
use super::dag::{reaches, Dag};
use super::CausalError;
use crate::table::Table;

/// Minimum number of rows accepted by [`pc_discover`].
pub const MIN_ROWS: usize = 30;

/// Significance threshold for the independence tests.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const DEFAULT: f64 = 0.01;

    pub fn new(value: f64) -> Result<Self, CausalError> {
        if value > 0.0 && value < 1.0 {
            Ok(Alpha(value))
        } else {
            Err(CausalError::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha(Self::DEFAULT)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = CausalError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// One conditional independence test run during skeleton search.
#[derive(Debug, Clone, PartialEq)]
pub struct CiRecord {
    pub x: usize,
    pub y: usize,
    pub cond: Vec<usize>,
    pub outcome: CiOutcome,
}

#[derive(Debug, Clone)]
pub struct PcResult {
    pub dag: Dag,
    /// Undirected skeleton as `(low, high)` index pairs.
    pub skeleton: BTreeSet<(usize, usize)>,
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub tests: Vec<CiRecord>,
    /// Columns with a single level, left without edges.
    pub excluded: Vec<String>,
}

pub fn pc_discover(table: &Table, alpha: Alpha) -> Result<Dag, CausalError> {
    pc_discover_detailed(table, alpha).map(|r| r.dag)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub fn pc_discover_detailed(table: &Table, alpha: Alpha) -> Result<PcResult, CausalError> {
    if table.row_count() < MIN_ROWS {
        return Err(CausalError::TooFewRows {
            found: table.row_count(),
            required: MIN_ROWS,
        });
    }
    let data = DiscreteData::from_table(table);
    let names: Vec<String> = table.column_names().map(str::to_string).collect();
    let n = names.len();

    let mut excluded = Vec::new();
    let active: Vec<usize> = (0..n)
        .filter(|&i| {
            let ok = data.levels(i) > 1;
            if !ok {
                log::warn!("column `{}` has zero variance; excluded from discovery", names[i]);
                excluded.push(names[i].clone());
            }
            ok
        })
        .collect();

    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &i in &active {
        for &j in &active {
            if i != j {
                adj[i].insert(j);
            }
        }
    }

    let mut sepsets = BTreeMap::new();
    let mut tests = Vec::new();
    let mut level = 0usize;
    while level + 2 <= n.max(2) {
        let snapshot = adj.clone();
        let mut any_testable = false;
        for &i in &active {
            for &j in &snapshot[i] {
                if !adj[i].contains(&j) {
                    continue;
                }
                let pool: Vec<usize> = snapshot[i].iter().copied().filter(|&k| k != j).collect();
                if pool.len() < level {
                    continue;
                }
                any_testable = true;
                for cond in combinations(&pool, level) {
                    let outcome = data.test(i, j, &cond);
                    tests.push(CiRecord {
                        x: i,
                        y: j,
                        cond: cond.clone(),
                        outcome,
                    });
                    if outcome.p_value > alpha.value() {
                        adj[i].remove(&j);
                        adj[j].remove(&i);
                        sepsets.insert(key(i, j), cond);
                        break;
                    }
                }
            }
        }
        if !any_testable {
            break;
        }
        level += 1;
    }

    let skeleton: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|i| adj[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
        .collect();
    let dag = orient(&names, &skeleton, &sepsets)?;
    Ok(PcResult {
        dag,
        skeleton,
        sepsets,
        tests,
        excluded,
    })
}

/// Lexicographic `k`-subsets of `pool`.
fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let m = pool.len();
    if k > m {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == pos - 1 + m - k {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

struct PartialGraph {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl PartialGraph {
    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b))
            || self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
    }

    fn creates_cycle(&self, from: usize, to: usize) -> bool {
        let edges: Vec<(usize, usize)> = self.directed.iter().copied().collect();
        reaches(&edges, self.n, to, from)
    }

    /// Orients the undirected edge `from - to` unless it would close a cycle.
    fn orient(&mut self, from: usize, to: usize) -> bool {
        if !self.undirected.contains(&key(from, to)) || self.creates_cycle(from, to) {
            return false;
        }
        self.undirected.remove(&key(from, to));
        self.directed.insert((from, to));
        true
    }

    fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        self.undirected
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    fn meek(&mut self) {
        loop {
            let mut changed = false;
            let pending: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
            for (u, v) in pending {
                for (b, c) in [(u, v), (v, u)] {
                    if !self.undirected.contains(&key(b, c)) {
                        continue;
                    }
                    if self.rule1(b, c) || self.rule2(b, c) || self.rule3(b, c) {
                        changed |= self.orient(b, c);
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    // a -> b - c, a and c non-adjacent  =>  b -> c
    fn rule1(&self, b: usize, c: usize) -> bool {
        self.directed
            .iter()
            .any(|&(a, t)| t == b && a != c && !self.adjacent(a, c))
    }

    // b -> a -> c with b - c  =>  b -> c
    fn rule2(&self, b: usize, c: usize) -> bool {
        self.directed
            .iter()
            .any(|&(s, a)| s == b && self.directed.contains(&(a, c)))
    }

    // b - x, b - y, x -> c, y -> c, x and y non-adjacent  =>  b -> c
    fn rule3(&self, b: usize, c: usize) -> bool {
        let nb = self.undirected_neighbors(b);
        let into_c: Vec<usize> = nb
            .iter()
            .copied()
            .filter(|&x| x != c && self.directed.contains(&(x, c)))
            .collect();
        into_c.iter().enumerate().any(|(i, &x)| {
            into_c[i + 1..].iter().any(|&y| !self.adjacent(x, y))
        })
    }
}

fn orient(
    names: &[String],
    skeleton: &BTreeSet<(usize, usize)>,
    sepsets: &BTreeMap<(usize, usize), Vec<usize>>,
) -> Result<Dag, CausalError> {
    let n = names.len();
    let mut g = PartialGraph {
        n,
        directed: BTreeSet::new(),
        undirected: skeleton.clone(),
    };
    let neighbors = |v: usize| -> Vec<usize> {
        skeleton
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    };

    // v-structures i -> k <- j
    for k in 0..n {
        let nb = neighbors(k);
        for (idx, &i) in nb.iter().enumerate() {
            for &j in &nb[idx + 1..] {
                if skeleton.contains(&key(i, j)) {
                    continue;
                }
                let sep = sepsets.get(&key(i, j));
                if sep.is_some_and(|s| s.contains(&k)) {
                    continue;
                }
                let ik = g.orient(i, k) || g.directed.contains(&(i, k));
                let jk = g.orient(j, k) || g.directed.contains(&(j, k));
                if !(ik && jk) {
                    log::debug!(
                        "conflicting v-structure {} -> {} <- {}",
                        names[i],
                        names[k],
                        names[j]
                    );
                }
            }
        }
    }
    g.meek();

    while let Some(&(a, b)) = g.undirected.iter().next() {
        if !g.orient(a, b) && !g.orient(b, a) {
            // both directions close a cycle only if the directed part is already cyclic
            unreachable!("directed part of the pattern is acyclic");
        }
        g.meek();
    }

    let mut dag = Dag::new(names.iter().cloned());
    for &(s, t) in &g.directed {
        dag.add_edge(s, t)?;
    }
    Ok(dag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(&[3, 5, 7], 2), vec![vec![3, 5], vec![3, 7], vec![5, 7]]);
        assert_eq!(combinations(&[1, 2], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[1], 2).is_empty());
        assert_eq!(combinations(&[0, 1, 2, 3], 3).len(), 4);
    }

    #[test]
    fn alpha_bounds() {
        assert_eq!(Alpha::default().value(), 0.01);
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(1.0).is_err());
        assert!(Alpha::new(0.05).is_ok());
    }

    #[test]
    fn collider_is_oriented() {
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let skel = BTreeSet::from([(0, 2), (1, 2)]);
        let seps = BTreeMap::from([((0, 1), vec![])]);
        let dag = orient(&names, &skel, &seps).unwrap();
        assert!(dag.has_edge(0, 2) && dag.has_edge(1, 2));
    }

    #[test]
    fn meek_r1_propagates() {
        // A -> C <- B, C - D  =>  C -> D
        let names: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let skel = BTreeSet::from([(0, 2), (1, 2), (2, 3)]);
        let seps = BTreeMap::from([((0, 1), vec![]), ((0, 3), vec![2]), ((1, 3), vec![2])]);
        let dag = orient(&names, &skel, &seps).unwrap();
        assert!(dag.has_edge(2, 3));
    }

    #[test]
    fn too_few_rows() {
        let t = Table::from_binary_columns(
            vec![("A".into(), vec![0, 1]), ("B".into(), vec![1, 0])],
            "B",
            &[] as &[&str],
        )
        .unwrap();
        assert!(matches!(
            pc_discover(&t, Alpha::default()),
            Err(CausalError::TooFewRows { .. })
        ));
    }
}
