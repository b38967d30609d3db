//! Per-turn game metrics: outcome counts, disparities, scores and the edge
//! change history.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::causal::Edge;
use crate::preferences::Group;
use crate::scalar::Real;
use crate::table::{ColumnKind, Table, TableError};

/// Number of rows with label 1, split by each binary feature's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub label: String,
    pub counts: BTreeMap<String, [u64; 2]>,
    pub total_positives: u64,
}

impl OutcomeCounts {
    pub fn count(&self, feature: &str, value: u8) -> u64 {
        self.counts
            .get(feature)
            .map(|c| c[usize::from(value.min(1))])
            .unwrap_or(0)
    }

    /// Fraction of all positives carrying `feature = value`; 0 without positives.
    pub fn share<T: Real>(&self, feature: &str, value: u8) -> T {
        if self.total_positives == 0 {
            T::zero()
        } else {
            T::of(self.count(feature, value) as f64) / T::of(self.total_positives as f64)
        }
    }
}

pub fn compute_outcome(table: &Table, label: &str) -> Result<OutcomeCounts, TableError> {
    let labels = table.values(label)?;
    let positives: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == 1.0).collect();
    let mut counts = BTreeMap::new();
    for spec in table.columns() {
        if spec.name == label || spec.kind != ColumnKind::Binary {
            continue;
        }
        let values = table.values(&spec.name)?;
        let ones = positives.iter().filter(|&&r| values[r] == 1.0).count() as u64;
        counts.insert(spec.name.clone(), [positives.len() as u64 - ones, ones]);
    }
    Ok(OutcomeCounts {
        label: label.to_string(),
        counts,
        total_positives: positives.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DisparityEntry<T> {
    pub feature: String,
    pub value: u8,
    pub care: T,
    pub share: T,
    /// `care - share` when selected; 0 (neutral) otherwise.
    pub disparity: T,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PlayerDisparity<T> {
    pub player: String,
    pub entries: Vec<DisparityEntry<T>>,
    /// No positives at all: disparities equal the care weights.
    pub degenerate: bool,
}

impl<T: Real> PlayerDisparity<T> {
    pub fn get(&self, feature: &str, value: u8) -> Option<&DisparityEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.feature == feature && e.value == value)
    }

    pub fn selected(&self) -> impl Iterator<Item = &DisparityEntry<T>> {
        self.entries.iter().filter(|e| e.selected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DisparityMap<T> {
    pub players: Vec<PlayerDisparity<T>>,
}

impl<T: Real> DisparityMap<T> {
    pub fn player(&self, id: &str) -> Option<&PlayerDisparity<T>> {
        self.players.iter().find(|p| p.player == id)
    }
}

pub fn compute_disparity<T: Real>(groups: &[Group<T>], outcome: &OutcomeCounts) -> DisparityMap<T> {
    let degenerate = outcome.total_positives == 0;
    let players = groups
        .iter()
        .map(|g| {
            let mut entries = Vec::new();
            for feature in outcome.counts.keys() {
                for value in 0..=1u8 {
                    let care = g.care_for(feature, value);
                    let selected = g
                        .selections()
                        .iter()
                        .any(|s| &s.feature == feature && s.value == value);
                    let share: T = outcome.share(feature, value);
                    entries.push(DisparityEntry {
                        feature: feature.clone(),
                        value,
                        care,
                        share,
                        disparity: if selected { care - share } else { T::zero() },
                        selected,
                    });
                }
            }
            PlayerDisparity {
                player: g.owner.clone(),
                entries,
                degenerate,
            }
        })
        .collect();
    DisparityMap { players }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ScoreEntry<T> {
    pub player: String,
    pub score: T,
    /// Change against the previous board; 0 for the first one.
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ScoreBoard<T> {
    pub entries: Vec<ScoreEntry<T>>,
}

impl<T: Real> ScoreBoard<T> {
    pub fn score(&self, player: &str) -> Option<T> {
        self.entries
            .iter()
            .find(|e| e.player == player)
            .map(|e| e.score)
    }
}

/// Score of one group: `Σ care × count(feature, value)` over its selections.
pub fn group_score<T: Real>(group: &Group<T>, outcome: &OutcomeCounts) -> T {
    group
        .iter()
        .map(|(s, care)| care * T::of(outcome.count(&s.feature, s.value) as f64))
        .sum()
}

pub fn compute_scores<T: Real>(
    groups: &[Group<T>],
    outcome: &OutcomeCounts,
    previous: Option<&ScoreBoard<T>>,
) -> ScoreBoard<T> {
    let entries = groups
        .iter()
        .map(|g| {
            let score = group_score(g, outcome);
            let delta = previous
                .and_then(|p| p.score(&g.owner))
                .map(|prev| score - prev)
                .unwrap_or_else(T::zero);
            ScoreEntry {
                player: g.owner.clone(),
                score,
                delta,
            }
        })
        .collect();
    ScoreBoard { entries }
}

/// Diverging heatmap level in `0..=10` for a value in `[-1, 1]`; 0 maps to 5.
pub fn heat_bucket(value: f64) -> u8 {
    let v = value.clamp(-1.0, 1.0);
    ((v + 1.0) * 5.0).round() as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: u32,
    pub player: String,
    pub edge: Edge,
    pub previous: f64,
    pub delta: f64,
}

impl HistoryEntry {
    pub fn change(&self) -> f64 {
        (self.delta - self.previous).abs()
    }
}

/// Append-only record of committed edge changes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeHistory {
    entries: Vec<HistoryEntry>,
}

impl EdgeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: HistoryEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Moves that actually changed a delta, per round `1..=last_round`.
    pub fn round_counts(&self, last_round: u32) -> Vec<u32> {
        let mut counts = vec![0u32; last_round as usize];
        for e in &self.entries {
            if e.change() > 0.0 && e.round >= 1 && e.round <= last_round {
                counts[e.round as usize - 1] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSeries {
    pub edge: Edge,
    pub cumulative_change: f64,
    pub moves: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    /// Up to three edges with the largest cumulative absolute change.
    pub top_edges: Vec<EdgeSeries>,
    /// Index `i` holds the change count of round `i + 1`.
    pub round_counts: Vec<u32>,
    pub selected: Option<EdgeSeries>,
}

fn series_for(history: &EdgeHistory, edge: &Edge) -> EdgeSeries {
    let moves: Vec<HistoryEntry> = history
        .entries
        .iter()
        .filter(|e| &e.edge == edge)
        .cloned()
        .collect();
    EdgeSeries {
        edge: edge.clone(),
        cumulative_change: moves.iter().map(HistoryEntry::change).sum(),
        moves,
    }
}

/// Chart data for the edge history views. Ties in the top-3 ranking go to
/// the edge that was changed first.
pub fn summarize_history(
    history: &EdgeHistory,
    last_round: u32,
    selected: Option<&Edge>,
) -> HistorySummary {
    let mut order: Vec<Edge> = Vec::new();
    for e in &history.entries {
        if !order.contains(&e.edge) {
            order.push(e.edge.clone());
        }
    }
    let mut all: Vec<EdgeSeries> = order.iter().map(|e| series_for(history, e)).collect();
    all.retain(|s| s.cumulative_change > 0.0);
    all.sort_by(|a, b| b.cumulative_change.total_cmp(&a.cumulative_change));
    all.truncate(3);
    HistorySummary {
        top_edges: all,
        round_counts: history.round_counts(last_round),
        selected: selected.map(|e| series_for(history, e)),
    }
}
