use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CausalError;
use crate::table::Table;

/// A directed edge named by its endpoint columns. Serialized as `"A -> B"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Edge {
    pub source: String,
    pub target: String,
}

impl Edge {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Edge {
            source: source.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

impl FromStr for Edge {
    type Err = CausalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("->")
            .ok_or_else(|| CausalError::Parse {
                line: 0,
                message: format!("expected `source -> target`, got `{s}`"),
            })?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return Err(CausalError::Parse {
                line: 0,
                message: format!("empty endpoint in `{s}`"),
            });
        }
        Ok(Edge::new(a, b))
    }
}

impl TryFrom<String> for Edge {
    type Error = CausalError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Edge> for String {
    fn from(e: Edge) -> String {
        e.to_string()
    }
}

/// Directed acyclic graph over named nodes. Edges keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Dag {
    pub fn new<S: Into<String>>(nodes: impl IntoIterator<Item = S>) -> Self {
        Dag {
            nodes: nodes.into_iter().map(Into::into).collect(),
            edges: Vec::new(),
        }
    }

    pub fn with_edges<S: Into<String>>(
        nodes: impl IntoIterator<Item = S>,
        edges: &[(&str, &str)],
    ) -> Result<Self, CausalError> {
        let mut dag = Dag::new(nodes);
        for (s, t) in edges {
            dag.add_edge_named(s, t)?;
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    fn index_or_err(&self, name: &str) -> Result<usize, CausalError> {
        self.node_index(name)
            .ok_or_else(|| CausalError::UnknownNode(name.to_string()))
    }

    pub fn edge_pairs(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .map(|&(s, t)| Edge::new(&self.nodes[s], &self.nodes[t]))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_position(&self, edge: &Edge) -> Option<usize> {
        let s = self.node_index(&edge.source)?;
        let t = self.node_index(&edge.target)?;
        self.edges.iter().position(|&e| e == (s, t))
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.edges.contains(&(source, target))
    }

    /// True if `to` is reachable from `from` along directed edges.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        reaches(&self.edges, self.nodes.len(), from, to)
    }

    pub fn add_edge(&mut self, source: usize, target: usize) -> Result<(), CausalError> {
        if source == target {
            return Err(CausalError::SelfLoop(self.nodes[source].clone()));
        }
        if self.has_edge(source, target) {
            return Err(CausalError::DuplicateEdge(Edge::new(
                &self.nodes[source],
                &self.nodes[target],
            )));
        }
        if self.reaches(target, source) {
            return Err(CausalError::Cycle(Edge::new(
                &self.nodes[source],
                &self.nodes[target],
            )));
        }
        self.edges.push((source, target));
        Ok(())
    }

    pub fn add_edge_named(&mut self, source: &str, target: &str) -> Result<(), CausalError> {
        let s = self.index_or_err(source)?;
        let t = self.index_or_err(target)?;
        self.add_edge(s, t)
    }

    /// Parents of `node`, ordered by node index.
    pub fn parents(&self, node: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.1 == node)
            .map(|e| e.0)
            .collect();
        p.sort_unstable();
        p
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.0 == node)
            .map(|e| e.1)
            .collect();
        c.sort_unstable();
        c
    }

    pub fn is_endogenous(&self, node: usize) -> bool {
        self.edges.iter().any(|e| e.1 == node)
    }

    /// Kahn's algorithm, always releasing the lowest-index ready node first.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for &(_, t) in &self.edges {
            indegree[t] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &(s, t) in &self.edges {
                if s == v {
                    indegree[t] -= 1;
                    if indegree[t] == 0 {
                        ready.insert(t);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), n, "dag invariant violated");
        order
    }

    /// Serializes to the DAG-file syntax, optionally with `beta=` annotations.
    pub fn to_dag_file(&self, betas: Option<&BTreeMap<Edge, f64>>) -> String {
        let mut out = String::new();
        for e in self.edges() {
            match betas.and_then(|b| b.get(&e)) {
                Some(b) => out.push_str(&format!("{e} beta={b}\n")),
                None => out.push_str(&format!("{e}\n")),
            }
        }
        out
    }
}

pub(crate) fn reaches(edges: &[(usize, usize)], n: usize, from: usize, to: usize) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        for &(s, t) in edges {
            if s == v && !seen[t] {
                if t == to {
                    return true;
                }
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    false
}

/// Parsed DAG file: edges in file order with optional fixed betas.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DagFile {
    pub edges: Vec<(Edge, Option<f64>)>,
}

impl DagFile {
    /// One edge per line, `source -> target [beta=<float>]`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CausalError> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| CausalError::Parse {
                line: i + 1,
                message,
            };
            let (edge_part, beta) = match line.find("beta=") {
                Some(pos) => {
                    let value = line[pos + 5..].trim();
                    let beta: f64 = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad beta `{value}`")))?;
                    (line[..pos].trim(), Some(beta))
                }
                None => (line, None),
            };
            let edge: Edge = edge_part.parse().map_err(|e| match e {
                CausalError::Parse { message, .. } => parse_err(message),
                other => other,
            })?;
            edges.push((edge, beta));
        }
        Ok(DagFile { edges })
    }

    /// Fixed betas, present only when every edge carries an annotation.
    pub fn betas(&self) -> Option<BTreeMap<Edge, f64>> {
        self.edges
            .iter()
            .map(|(e, b)| b.map(|b| (e.clone(), b)))
            .collect()
    }
}

/// Builds the DAG described by `text` over the columns of `table`.
pub fn load_dag(text: &str, table: &Table) -> Result<(Dag, DagFile), CausalError> {
    let file = DagFile::parse(text)?;
    let mut dag = Dag::new(table.column_names());
    for (edge, _) in &file.edges {
        dag.add_edge_named(&edge.source, &edge.target)?;
    }
    Ok((dag, file))
}
