//! Serializable documents: the per-checkpoint metrics snapshot and the full
//! chart-data view of a game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, Game, GameStatus, TurnPhase, VoteRound};
use crate::causal::Edge;
use crate::eval::EvalReport;
use crate::metrics::{heat_bucket, summarize_history, DisparityMap, HistorySummary, OutcomeCounts, ScoreBoard};
use crate::preferences::{priority_chart, AttributeSelection, Coverage};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct MetricsSnapshot<T> {
    /// Checkpoint this snapshot belongs to.
    pub index: usize,
    pub round: u32,
    /// Player whose apply produced it; none for the original model.
    pub player: Option<String>,
    pub outcome_original: OutcomeCounts,
    pub outcome: OutcomeCounts,
    pub disparity: DisparityMap<T>,
    pub scores: ScoreBoard<T>,
    pub eval: EvalReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub feature: String,
    pub value: u8,
    pub disparity: f64,
    /// Level on the 11-step diverging scale; 5 is neutral.
    pub bucket: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PlayerView<T> {
    pub id: String,
    pub role: String,
    pub group: String,
    pub selections: Vec<AttributeSelection>,
    pub care: Vec<T>,
    pub coverage: Coverage,
    /// Per feature: display weight of value 0 and value 1.
    pub priority: BTreeMap<String, [T; 2]>,
    pub score: T,
    pub score_delta: T,
    pub heat: Vec<HeatCell>,
    pub has_voted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct EdgeView<T> {
    pub edge: Edge,
    pub original_beta: T,
    pub delta: T,
    pub multiplier: T,
    pub beta: T,
    /// Delta staged in the running turn, if any.
    pub staged: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NetworkView<T> {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeView<T>>,
}

/// Everything a client needs to draw the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct GameView<T> {
    pub status: GameStatus,
    pub phase: TurnPhase,
    pub round: u32,
    pub rounds_played: u32,
    pub max_rounds: Option<u32>,
    pub current_player: Option<String>,
    pub sequence: u64,
    pub label: String,
    /// Binarization rule per column, e.g. `Age: above 42 ⇒ 1`.
    pub cuts: BTreeMap<String, String>,
    pub players: Vec<PlayerView<T>>,
    pub network: NetworkView<T>,
    pub snapshot: MetricsSnapshot<T>,
    pub original_eval: EvalReport<T>,
    pub history: HistorySummary,
    pub votes: Vec<VoteRound>,
    pub checkpoints: Vec<Checkpoint>,
}

impl<T: Real> Game<T> {
    /// The chart-data document; `selected` switches the edge-history chart
    /// to that edge's series.
    pub fn view(&self, selected: Option<&Edge>) -> GameView<T> {
        let snapshot = self.latest_snapshot().clone();
        let voted = self.voted();
        let players = self
            .players
            .iter()
            .map(|p| {
                let score = snapshot.scores.entries.iter().find(|e| e.player == p.id);
                let heat = snapshot
                    .disparity
                    .player(&p.id)
                    .map(|d| {
                        d.entries
                            .iter()
                            .map(|e| HeatCell {
                                feature: e.feature.clone(),
                                value: e.value,
                                disparity: e.disparity.to_f64_lossy(),
                                bucket: heat_bucket(e.disparity.to_f64_lossy()),
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                PlayerView {
                    id: p.id.clone(),
                    role: p.role.clone(),
                    group: p.group.name.clone(),
                    selections: p.group.selections().to_vec(),
                    care: p.group.care_weights().to_vec(),
                    coverage: p.coverage.clone(),
                    priority: priority_chart(&p.group, &self.original),
                    score: score.map(|s| s.score).unwrap_or_else(T::zero),
                    score_delta: score.map(|s| s.delta).unwrap_or_else(T::zero),
                    heat,
                    has_voted: voted.contains(&p.id.as_str()),
                }
            })
            .collect();
        let edges = self
            .base
            .dag()
            .edges()
            .into_iter()
            .map(|e| EdgeView {
                original_beta: self.base.original_beta(&e).unwrap_or_else(T::zero),
                delta: self.model.delta(&e).unwrap_or_else(T::zero),
                multiplier: self.model.multiplier(&e).unwrap_or_else(T::one),
                beta: self.model.beta(&e).unwrap_or_else(T::zero),
                staged: self.staged.get(&e).copied(),
                edge: e,
            })
            .collect();
        let last_round = self.round.max(self.rounds_played);
        GameView {
            status: self.status,
            phase: self.phase,
            round: self.round,
            rounds_played: self.rounds_played,
            max_rounds: self.config.max_rounds,
            current_player: self.current_player().map(str::to_string),
            sequence: self.seq,
            label: self.config.label.clone(),
            cuts: self
                .original
                .cuts()
                .keys()
                .filter_map(|c| self.original.cut_description(c).map(|d| (c.clone(), d)))
                .collect(),
            players,
            network: NetworkView {
                nodes: self.base.dag().nodes().to_vec(),
                edges,
            },
            original_eval: self.original_eval(),
            history: summarize_history(&self.history, last_round, selected),
            votes: self.vote_rounds.clone(),
            checkpoints: self.checkpoints.clone(),
            snapshot,
        }
    }
}
