//! Scripted agents that play whole games headlessly, and the report they
//! produce.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::Edge;
use crate::engine::{EngineError, Game, GameConfig, GameStatus, VoteChoice};
use crate::eval::ReportPair;
use crate::metrics::{group_score, DisparityMap};
use crate::scalar::Real;

pub const DEFAULT_GRID_STEP: f64 = 0.25;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{policies} policies for {players} players")]
    PolicyCount { policies: usize, players: usize },
    #[error("unknown policy `{0}` (expected deontologist, consequentialist[:step] or scripted:PATH)")]
    UnknownPolicy(String),
    #[error("grid step {0} must lie in (0, 1]")]
    BadStep(f64),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScriptStep {
    Set { edge: Edge, delta: f64 },
    Vote(VoteChoice),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptLine {
    pub round: u32,
    pub step: ScriptStep,
}

/// Ordered `(round, edge, delta)` and `(round, vote)` lines:
///
/// ```text
/// # round edge delta
/// 1 Gender -> Job -1
/// 1 vote continue
/// 2 vote stop
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Script {
    pub lines: Vec<ScriptLine>,
}

impl FromStr for Script {
    type Err = SimError;

    fn from_str(text: &str) -> Result<Self, SimError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| SimError::Script {
                line: i + 1,
                message: message.to_string(),
            };
            let (round, rest) = line.split_once(char::is_whitespace).ok_or_else(|| err("expected `ROUND ...`"))?;
            let round: u32 = round.parse().map_err(|_| err("round must be a non-negative integer"))?;
            let rest = rest.trim();
            let step = if let Some(choice) = rest.strip_prefix("vote") {
                match choice.trim() {
                    "stop" => ScriptStep::Vote(VoteChoice::Stop),
                    "continue" => ScriptStep::Vote(VoteChoice::Continue),
                    _ => return Err(err("vote must be `stop` or `continue`")),
                }
            } else {
                let (edge, delta) = rest.rsplit_once(char::is_whitespace).ok_or_else(|| err("expected `EDGE DELTA`"))?;
                let edge: Edge = edge.trim().parse().map_err(|_| err("bad edge, expected `A -> B`"))?;
                let delta: f64 = delta.parse().map_err(|_| err("delta must be a number"))?;
                ScriptStep::Set { edge, delta }
            };
            lines.push(ScriptLine { round, step });
        }
        Ok(Script { lines })
    }
}

impl Script {
    fn sets(&self, round: u32) -> Vec<(Edge, f64)> {
        self.lines
            .iter()
            .filter(|l| l.round == round)
            .filter_map(|l| match &l.step {
                ScriptStep::Set { edge, delta } => Some((edge.clone(), *delta)),
                ScriptStep::Vote(_) => None,
            })
            .collect()
    }

    /// The scripted vote; without one, continue while later lines remain.
    fn vote(&self, round: u32) -> VoteChoice {
        let explicit = self.lines.iter().rev().find_map(|l| match l.step {
            ScriptStep::Vote(v) if l.round == round => Some(v),
            _ => None,
        });
        explicit.unwrap_or_else(|| {
            if self.lines.iter().any(|l| l.round > round) {
                VoteChoice::Continue
            } else {
                VoteChoice::Stop
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentPolicy {
    /// Zeroes every edge leaving a sensitive column. `None` uses the
    /// table's sensitive columns.
    Deontologist { sensitive: Option<Vec<String>> },
    /// Greedy single-edge search over a delta grid; votes stop once no
    /// move improves its score by more than `min_gain`.
    Consequentialist { step: f64, min_gain: f64 },
    Scripted { script: Script },
}

impl AgentPolicy {
    pub fn deontologist() -> Self {
        AgentPolicy::Deontologist { sensitive: None }
    }

    pub fn consequentialist() -> Self {
        AgentPolicy::Consequentialist {
            step: DEFAULT_GRID_STEP,
            min_gain: 0.0,
        }
    }

    /// Parses `deontologist`, `consequentialist[:STEP]` or
    /// `scripted:PATH` (relative to `base`).
    pub fn parse(spec: &str, base: &Path) -> Result<Self, SimError> {
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        match (kind, arg) {
            ("deontologist", None) => Ok(Self::deontologist()),
            ("consequentialist", None) => Ok(Self::consequentialist()),
            ("consequentialist", Some(step)) => {
                let step: f64 = step.parse().map_err(|_| SimError::UnknownPolicy(spec.to_string()))?;
                if !(step > 0.0 && step <= 1.0) {
                    return Err(SimError::BadStep(step));
                }
                Ok(AgentPolicy::Consequentialist { step, min_gain: 0.0 })
            }
            ("scripted", Some(path)) => {
                let path = base.join(path);
                Ok(AgentPolicy::Scripted {
                    script: std::fs::read_to_string(path)?.parse()?,
                })
            }
            _ => Err(SimError::UnknownPolicy(spec.to_string())),
        }
    }
}

/// Deltas in `[-1, 1]` on a grid of `step`, ordered by `|delta|`, negative
/// before positive.
pub fn delta_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).floor() as i64;
    let mut grid: Vec<f64> = (-n..=n).map(|i| (i as f64 * step).clamp(-1.0, 1.0)).collect();
    if n as f64 * step < 1.0 {
        grid.push(-1.0);
        grid.push(1.0);
    }
    grid.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    grid.dedup();
    grid
}

/// Staged deltas of a deontologist: -1 on every edge out of a sensitive
/// column that still carries weight.
pub fn deontologist_move<T: Real>(game: &Game<T>, sensitive: &[String]) -> Vec<(Edge, f64)> {
    let iv = game.effective_intervention();
    game.base_model()
        .dag()
        .edges()
        .into_iter()
        .filter(|e| sensitive.contains(&e.source))
        .filter(|e| T::one() + iv.get(e) > T::zero())
        .map(|e| (e, -1.0))
        .collect()
}

/// Best single-edge change for `player`'s own score, if any strictly
/// improves it by more than `min_gain`. Ties go to the earlier edge, then
/// the smaller `|delta|`.
pub fn consequentialist_move<T: Real>(
    game: &Game<T>,
    player: &str,
    step: f64,
    min_gain: f64,
) -> Result<Vec<(Edge, f64)>, EngineError> {
    let group = &game
        .player(player)
        .ok_or_else(|| EngineError::UnknownPlayer(player.to_string()))?
        .group;
    let baseline = group_score(group, &game.preview_outcome(&[])?);
    let iv = game.effective_intervention();
    let mut best: Option<(T, Edge, f64)> = None;
    for edge in game.base_model().dag().edges() {
        let current = iv.get(&edge).to_f64_lossy();
        for delta in delta_grid(step) {
            if delta == current {
                continue;
            }
            let score = group_score(group, &game.preview_outcome(&[(edge.clone(), T::of(delta))])?);
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, edge.clone(), delta));
            }
        }
    }
    Ok(match best {
        Some((score, edge, delta)) if score > baseline + T::of(min_gain) => vec![(edge, delta)],
        _ => Vec::new(),
    })
}

struct Agent<'a> {
    policy: &'a AgentPolicy,
    sensitive: Vec<String>,
}

impl Agent<'_> {
    fn turn<T: Real>(&self, game: &Game<T>, player: &str) -> Result<Vec<(Edge, f64)>, EngineError> {
        match self.policy {
            AgentPolicy::Deontologist { .. } => Ok(deontologist_move(game, &self.sensitive)),
            AgentPolicy::Consequentialist { step, min_gain } => consequentialist_move(game, player, *step, *min_gain),
            AgentPolicy::Scripted { script } => Ok(script.sets(game.round())),
        }
    }

    fn vote<T: Real>(&self, game: &Game<T>, player: &str) -> Result<VoteChoice, EngineError> {
        let satisfied = match self.policy {
            AgentPolicy::Scripted { script } => return Ok(script.vote(game.round())),
            _ => self.turn(game, player)?.is_empty(),
        };
        Ok(if satisfied { VoteChoice::Stop } else { VoteChoice::Continue })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RoundRecord<T> {
    /// 0 is the state before play.
    pub round: u32,
    /// Edge multipliers in DAG edge order.
    pub multipliers: Vec<T>,
    /// Scores in player order.
    pub scores: Vec<T>,
    /// Committed edge changes in this round.
    pub changes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct SimulationReport<T> {
    pub seed: u64,
    pub rounds_played: u32,
    pub consensus: bool,
    pub status: GameStatus,
    pub players: Vec<String>,
    pub roles: Vec<String>,
    pub edges: Vec<Edge>,
    pub rounds: Vec<RoundRecord<T>>,
    pub report: ReportPair<T>,
    pub disparity: DisparityMap<T>,
}

pub struct Simulation<T: Real> {
    pub report: SimulationReport<T>,
    pub game: Game<T>,
}

fn round_record<T: Real>(game: &Game<T>, round: u32, changes: u32) -> RoundRecord<T> {
    let model = game.model();
    RoundRecord {
        round,
        multipliers: model
            .dag()
            .edges()
            .iter()
            .map(|e| model.multiplier(e).unwrap_or_else(T::one))
            .collect(),
        scores: game
            .players()
            .iter()
            .map(|p| game.scores().score(&p.id).unwrap_or_else(T::zero))
            .collect(),
        changes,
    }
}

/// Plays `config` with one policy per player (in player order) until the
/// game concludes or `max_rounds` rounds have been played.
pub fn simulate<T: Real>(
    mut config: GameConfig,
    policies: &[AgentPolicy],
    max_rounds: u32,
    seed: u64,
) -> Result<Simulation<T>, SimError> {
    if policies.len() != config.players.len() {
        return Err(SimError::PolicyCount {
            policies: policies.len(),
            players: config.players.len(),
        });
    }
    config.seed = seed;
    config.max_rounds = Some(max_rounds);
    let mut game = Game::<T>::new(config)?;
    let default_sensitive: Vec<String> = game
        .original_table()
        .sensitive_columns()
        .into_iter()
        .map(str::to_string)
        .collect();
    let agents: Vec<Agent> = policies
        .iter()
        .map(|policy| Agent {
            policy,
            sensitive: match policy {
                AgentPolicy::Deontologist { sensitive: Some(s) } => s.clone(),
                _ => default_sensitive.clone(),
            },
        })
        .collect();
    let ids: Vec<String> = game.players().iter().map(|p| p.id.clone()).collect();

    let mut rounds = vec![round_record(&game, 0, 0)];
    if max_rounds == 0 {
        game.call_vote(&ids[0])?;
    }
    loop {
        match game.status() {
            GameStatus::InProgress => {
                let turn = game.current_player().expect("in progress").to_string();
                let idx = ids.iter().position(|p| *p == turn).expect("known player");
                let staged = agents[idx].turn(&game, &turn)?;
                if !staged.is_empty() {
                    for (edge, delta) in staged {
                        game.propose_edge(&turn, edge, delta)?;
                    }
                    game.apply_turn(&turn)?;
                }
                let before = game.rounds_played();
                game.end_turn(&turn)?;
                if game.rounds_played() > before {
                    let r = game.rounds_played();
                    let changes = game.history().round_counts(game.round()).last().copied().unwrap_or(0);
                    rounds.push(round_record(&game, r, changes));
                }
            }
            GameStatus::VotePending => {
                let choices = ids
                    .iter()
                    .zip(&agents)
                    .map(|(id, a)| a.vote(&game, id))
                    .collect::<Result<Vec<_>, _>>()?;
                for (id, choice) in ids.iter().zip(choices) {
                    game.cast_vote(id, choice)?;
                }
            }
            GameStatus::Concluded | GameStatus::RoundLimit => break,
        }
    }

    let report = SimulationReport {
        seed,
        rounds_played: game.rounds_played(),
        consensus: game.status() == GameStatus::Concluded,
        status: game.status(),
        players: ids,
        roles: game.players().iter().map(|p| p.role.clone()).collect(),
        edges: game.base_model().dag().edges(),
        rounds,
        report: game.report(),
        disparity: game.latest_snapshot().disparity.clone(),
    };
    Ok(Simulation { report, game })
}

pub fn run_simulation<T: Real>(
    config: GameConfig,
    policies: &[AgentPolicy],
    max_rounds: u32,
    seed: u64,
) -> Result<SimulationReport<T>, SimError> {
    simulate(config, policies, max_rounds, seed).map(|s| s.report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `report.txt`: metric table, edge weights per round, disparity matrix.
    TextTable,
    /// `report.json`, `edge_weights.csv`, `disparity.csv`.
    Structured,
}

impl<T: Real> SimulationReport<T> {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "rounds played: {}  consensus: {}  status: {}  seed: {}\n",
            self.rounds_played, self.consensus, self.status, self.seed
        );
        out.push_str(&self.report.render_text());

        let _ = writeln!(out, "\nEdge weight multipliers by round");
        let _ = write!(out, "{:<28}", "edge");
        for r in &self.rounds {
            let _ = write!(out, "{:>8}", format!("r{}", r.round));
        }
        out.push('\n');
        for (i, e) in self.edges.iter().enumerate() {
            let _ = write!(out, "{:<28}", e.to_string());
            for r in &self.rounds {
                let _ = write!(out, "{:>8.3}", r.multipliers[i].to_f64_lossy());
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<28}", "changes");
        for r in &self.rounds {
            let _ = write!(out, "{:>8}", r.changes);
        }
        out.push('\n');

        let _ = writeln!(out, "\nScores by round");
        for (p, id) in self.players.iter().enumerate() {
            let _ = write!(out, "{:<28}", format!("{id} ({})", self.roles[p]));
            for r in &self.rounds {
                let _ = write!(out, "{:>10.2}", r.scores[p].to_f64_lossy());
            }
            out.push('\n');
        }

        let _ = writeln!(out, "\nFinal disparity (care - share) on selected attributes");
        for pd in &self.disparity.players {
            let cells: Vec<String> = pd
                .selected()
                .map(|e| format!("{}={}:{:+.3}", e.feature, e.value, e.disparity.to_f64_lossy()))
                .collect();
            let _ = writeln!(out, "{:<10}{}", pd.player, cells.join("  "));
        }
        out
    }

    fn edge_weights_csv(&self) -> String {
        let mut out = String::from("round,edge,multiplier\n");
        for r in &self.rounds {
            for (e, m) in self.edges.iter().zip(&r.multipliers) {
                let _ = writeln!(out, "{},{},{}", r.round, e, m.to_f64_lossy());
            }
        }
        out
    }

    fn disparity_csv(&self) -> String {
        let mut out = String::from("player,feature,value,care,share,disparity,selected\n");
        for pd in &self.disparity.players {
            for e in &pd.entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    pd.player,
                    e.feature,
                    e.value,
                    e.care.to_f64_lossy(),
                    e.share.to_f64_lossy(),
                    e.disparity.to_f64_lossy(),
                    e.selected
                );
            }
        }
        out
    }
}

/// Writes the report files for `format` into `dir`.
pub fn emit_report<T: Real>(
    report: &SimulationReport<T>,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, SimError> {
    std::fs::create_dir_all(dir)?;
    let files: Vec<(&str, String)> = match format {
        ReportFormat::TextTable => vec![("report.txt", report.render_text())],
        ReportFormat::Structured => vec![
            ("report.json", serde_json::to_string_pretty(report)? + "\n"),
            ("edge_weights.csv", report.edge_weights_csv()),
            ("disparity.csv", report.disparity_csv()),
        ],
    };
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
