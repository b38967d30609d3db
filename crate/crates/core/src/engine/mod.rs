//! Turn-based game: players take turns staging edge deltas, apply them to
//! the shared causal model, and vote at the end of every round.

pub mod audit;
pub mod config;
pub mod view;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use audit::{replay, AuditRecord};
pub use config::{DagSource, DatasetSource, GameConfig, PlayerConfig, MAX_PLAYERS};
pub use view::{GameView, MetricsSnapshot};

use crate::causal::{apply_intervention, fit_sem, regenerate, CausalError, Edge, Intervention, SemModel};
use crate::eval::{evaluate, EvalError, EvalOptions, EvalReport, ReportPair};
use crate::metrics::{
    compute_disparity, compute_outcome, compute_scores, EdgeHistory, HistoryEntry, OutcomeCounts, ScoreBoard,
};
use crate::preferences::{group_coverage, Coverage, Group, GroupError};
use crate::scalar::Real;
use crate::table::{Table, TableError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("too many players: {0} (at most {max})", max = MAX_PLAYERS)]
    TooManyPlayers(usize),
    #[error("duplicate player id `{0}`")]
    DuplicatePlayer(String),
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("not your turn: waiting for `{expected}`, got `{found}`")]
    NotYourTurn { expected: String, found: String },
    #[error("wrong phase: {found} (needs {expected})")]
    WrongPhase { expected: &'static str, found: TurnPhase },
    #[error("wrong status: {found} (needs {expected})")]
    WrongStatus { expected: &'static str, found: GameStatus },
    #[error("delta {0} outside [-1, 1]")]
    DeltaOutOfRange(f64),
    #[error("unknown edge {0}")]
    UnknownEdge(Edge),
    #[error("player `{0}` already voted this round")]
    DoubleVote(String),
    #[error("a vote can only be called before any move of the round")]
    VoteNotAllowed,
    #[error("game is not concluded")]
    NotConcluded,
    #[error("replay failed at line {line}: {message}")]
    Replay { line: usize, message: String },
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl EngineError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        EngineError::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnPhase {
    Editing,
    Applied,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameStatus {
    InProgress,
    VotePending,
    Concluded,
    /// The round limit ran out without consensus.
    RoundLimit,
}

macro_rules! kebab_display {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = serde_json::to_string(self).map_err(|_| fmt::Error)?;
                f.write_str(s.trim_matches('"'))
            }
        }
    };
}
kebab_display!(TurnPhase);
kebab_display!(GameStatus);
kebab_display!(VoteChoice);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoteChoice {
    Stop,
    Continue,
}

/// Everything a player can submit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    Propose { player: String, edge: Edge, delta: f64 },
    Apply { player: String },
    EndTurn { player: String },
    /// Opens the vote before anyone has moved this round.
    CallVote { player: String },
    Vote { player: String, choice: VoteChoice },
}

impl Action {
    pub fn player(&self) -> &str {
        match self {
            Action::Propose { player, .. }
            | Action::Apply { player }
            | Action::EndTurn { player }
            | Action::CallVote { player }
            | Action::Vote { player, .. } => player,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub round: u32,
    pub player: String,
    pub edge: Edge,
    pub previous: f64,
    pub delta: f64,
    /// Logical clock: the game's action sequence number.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub index: usize,
    pub round: u32,
    pub player: Option<String>,
    /// Committed deltas relative to the fitted model (zeros omitted).
    pub deltas: BTreeMap<Edge, f64>,
    /// SHA-256 over the effective betas and the regenerated table.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRound {
    pub round: u32,
    pub votes: BTreeMap<String, VoteChoice>,
}

impl VoteRound {
    pub fn unanimous_stop(&self) -> bool {
        self.votes.values().all(|&v| v == VoteChoice::Stop)
    }
}

/// Notifications produced by a successful action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum GameEvent {
    StateChanged,
    TurnAdvanced { round: u32, player: String },
    VoteOpened { round: u32 },
    VotesRevealed(VoteRound),
    Concluded,
    RoundLimitReached,
}

impl GameEvent {
    /// Wire kind: one of `state-changed`, `turn-advanced`, `vote-opened`,
    /// `concluded`.
    pub fn kind(&self) -> &'static str {
        match self {
            GameEvent::StateChanged | GameEvent::VotesRevealed(_) | GameEvent::RoundLimitReached => "state-changed",
            GameEvent::TurnAdvanced { .. } => "turn-advanced",
            GameEvent::VoteOpened { .. } => "vote-opened",
            GameEvent::Concluded => "concluded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Player<T> {
    pub id: String,
    pub role: String,
    pub group: Group<T>,
    pub coverage: Coverage,
}

#[derive(Debug, Clone)]
pub struct Game<T: Real> {
    config: GameConfig,
    eval_options: EvalOptions,
    players: Vec<Player<T>>,
    original: Table,
    base: SemModel<T>,
    committed: Intervention<T>,
    model: SemModel<T>,
    current: Table,
    staged: BTreeMap<Edge, T>,
    round: u32,
    rounds_played: u32,
    turn: usize,
    phase: TurnPhase,
    status: GameStatus,
    /// Whether any action other than a vote happened in this round.
    round_started: bool,
    seq: u64,
    moves: Vec<MoveRecord>,
    history: EdgeHistory,
    checkpoints: Vec<Checkpoint>,
    snapshots: Vec<MetricsSnapshot<T>>,
    ballots: BTreeMap<String, VoteChoice>,
    vote_rounds: Vec<VoteRound>,
    audit: Vec<AuditRecord>,
}

fn table_hash<T: Real>(model: &SemModel<T>, table: &Table) -> String {
    let mut h = Sha256::new();
    for (edge, beta) in model.effective_betas() {
        h.update(edge.to_string().as_bytes());
        h.update(beta.to_f64_lossy().to_bits().to_le_bytes());
    }
    h.update(table.to_csv_string().as_bytes());
    hex::encode(h.finalize())
}

fn to_f64_map<T: Real>(iv: &Intervention<T>) -> BTreeMap<Edge, f64> {
    iv.iter().map(|(e, d)| (e.clone(), d.to_f64_lossy())).collect()
}

impl<T: Real> Game<T> {
    /// Builds the model (discovery or DAG file, then SEM fit) and the
    /// initial metrics. Round 1 starts with the first player editing.
    pub fn new(config: GameConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let original = config.load_table()?;
        if original.column_index(&config.parity_column).is_none() {
            return Err(EngineError::invalid(
                "parity_column",
                format!("unknown column `{}`", config.parity_column),
            ));
        }
        let dag = config.build_dag(&original)?;
        let base = fit_sem::<T>(&dag, &original)?;
        let groups = config.build_groups::<T>(&original)?;
        let players = config
            .players
            .iter()
            .zip(groups)
            .map(|(p, group)| {
                Ok(Player {
                    id: p.id.clone(),
                    role: p.role.clone(),
                    coverage: group_coverage(&group, &original)?,
                    group,
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        let current = regenerate(&base, &original)?;
        let mut game = Game {
            eval_options: config.eval_options(),
            config,
            players,
            model: base.clone(),
            base,
            committed: Intervention::new(),
            original,
            current,
            staged: BTreeMap::new(),
            round: 1,
            rounds_played: 0,
            turn: 0,
            phase: TurnPhase::Editing,
            status: GameStatus::InProgress,
            round_started: false,
            seq: 0,
            moves: Vec::new(),
            history: EdgeHistory::new(),
            checkpoints: Vec::new(),
            snapshots: Vec::new(),
            ballots: BTreeMap::new(),
            vote_rounds: Vec::new(),
            audit: Vec::new(),
        };
        game.audit.push(AuditRecord::Config {
            config: game.config.clone(),
            scalar: std::any::type_name::<T>().to_string(),
        });
        game.record_checkpoint(None)?;
        Ok(game)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn players(&self) -> &[Player<T>] {
        &self.players
    }

    pub fn player(&self, id: &str) -> Option<&Player<T>> {
        self.players.iter().find(|p| p.id == id)
    }

    pub fn groups(&self) -> Vec<Group<T>> {
        self.players.iter().map(|p| p.group.clone()).collect()
    }

    pub fn status(&self) -> GameStatus {
        self.status
    }

    pub fn phase(&self) -> TurnPhase {
        self.phase
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// Rounds in which every player finished a turn.
    pub fn rounds_played(&self) -> u32 {
        self.rounds_played
    }

    /// The player allowed to edit, while a turn is running.
    pub fn current_player(&self) -> Option<&str> {
        match self.status {
            GameStatus::InProgress => Some(&self.players[self.turn].id),
            _ => None,
        }
    }

    pub fn original_table(&self) -> &Table {
        &self.original
    }

    pub fn table(&self) -> &Table {
        &self.current
    }

    /// The fitted model before any intervention.
    pub fn base_model(&self) -> &SemModel<T> {
        &self.base
    }

    pub fn model(&self) -> &SemModel<T> {
        &self.model
    }

    pub fn committed(&self) -> &Intervention<T> {
        &self.committed
    }

    pub fn staged(&self) -> &BTreeMap<Edge, T> {
        &self.staged
    }

    pub fn moves(&self) -> &[MoveRecord] {
        &self.moves
    }

    pub fn history(&self) -> &EdgeHistory {
        &self.history
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn snapshots(&self) -> &[MetricsSnapshot<T>] {
        &self.snapshots
    }

    pub fn latest_snapshot(&self) -> &MetricsSnapshot<T> {
        self.snapshots.last().expect("initial snapshot exists")
    }

    pub fn scores(&self) -> &ScoreBoard<T> {
        &self.latest_snapshot().scores
    }

    pub fn vote_rounds(&self) -> &[VoteRound] {
        &self.vote_rounds
    }

    /// Who has voted in the open ballot (choices stay hidden until all are in).
    pub fn voted(&self) -> Vec<&str> {
        self.ballots.keys().map(String::as_str).collect()
    }

    pub fn audit_records(&self) -> &[AuditRecord] {
        &self.audit
    }

    /// Number of actions accepted so far.
    pub fn sequence(&self) -> u64 {
        self.seq
    }

    /// Committed deltas overlaid with the current turn's staged ones.
    pub fn effective_intervention(&self) -> Intervention<T> {
        let mut iv = self.committed.clone();
        for (e, &d) in &self.staged {
            iv.set(e.clone(), d).expect("staged deltas are range-checked");
        }
        iv
    }

    /// Outcome counts if `changes` were applied on top of the committed and
    /// staged deltas. Leaves the game untouched.
    pub fn preview_outcome(&self, changes: &[(Edge, T)]) -> Result<OutcomeCounts, EngineError> {
        let mut iv = self.effective_intervention();
        for (e, d) in changes {
            iv.set(e.clone(), *d)?;
        }
        let model = apply_intervention(&self.base, &iv)?;
        let table = regenerate(&model, &self.original)?;
        Ok(compute_outcome(&table, &self.config.label)?)
    }

    pub fn propose_edge(&mut self, player: &str, edge: Edge, delta: f64) -> Result<Vec<GameEvent>, EngineError> {
        self.act(Action::Propose {
            player: player.to_string(),
            edge,
            delta,
        })
    }

    pub fn apply_turn(&mut self, player: &str) -> Result<Vec<GameEvent>, EngineError> {
        self.act(Action::Apply {
            player: player.to_string(),
        })
    }

    pub fn end_turn(&mut self, player: &str) -> Result<Vec<GameEvent>, EngineError> {
        self.act(Action::EndTurn {
            player: player.to_string(),
        })
    }

    pub fn call_vote(&mut self, player: &str) -> Result<Vec<GameEvent>, EngineError> {
        self.act(Action::CallVote {
            player: player.to_string(),
        })
    }

    pub fn cast_vote(&mut self, player: &str, choice: VoteChoice) -> Result<Vec<GameEvent>, EngineError> {
        self.act(Action::Vote {
            player: player.to_string(),
            choice,
        })
    }

    /// Validates and performs one action. A rejected action leaves the game
    /// unchanged.
    pub fn act(&mut self, action: Action) -> Result<Vec<GameEvent>, EngineError> {
        if self.player(action.player()).is_none() {
            return Err(EngineError::UnknownPlayer(action.player().to_string()));
        }
        match action {
            Action::Propose { player, edge, delta } => self.do_propose(player, edge, delta),
            Action::Apply { player } => self.do_apply(player),
            Action::EndTurn { player } => self.do_end_turn(player),
            Action::CallVote { player } => self.do_call_vote(player),
            Action::Vote { player, choice } => self.do_vote(player, choice),
        }
    }

    fn require_status(&self, expected: GameStatus, label: &'static str) -> Result<(), EngineError> {
        if self.status == expected {
            Ok(())
        } else {
            Err(EngineError::WrongStatus {
                expected: label,
                found: self.status,
            })
        }
    }

    fn require_turn(&self, player: &str) -> Result<(), EngineError> {
        self.require_status(GameStatus::InProgress, "in-progress")?;
        let expected = &self.players[self.turn].id;
        if expected != player {
            return Err(EngineError::NotYourTurn {
                expected: expected.clone(),
                found: player.to_string(),
            });
        }
        Ok(())
    }

    fn require_editing(&self) -> Result<(), EngineError> {
        if self.phase != TurnPhase::Editing {
            return Err(EngineError::WrongPhase {
                expected: "editing",
                found: self.phase,
            });
        }
        Ok(())
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn do_propose(&mut self, player: String, edge: Edge, delta: f64) -> Result<Vec<GameEvent>, EngineError> {
        self.require_turn(&player)?;
        self.require_editing()?;
        if !(-1.0..=1.0).contains(&delta) {
            return Err(EngineError::DeltaOutOfRange(delta));
        }
        if self.base.dag().edge_position(&edge).is_none() {
            return Err(EngineError::UnknownEdge(edge));
        }
        let previous = self
            .staged
            .get(&edge)
            .copied()
            .unwrap_or_else(|| self.committed.get(&edge))
            .to_f64_lossy();
        self.staged.insert(edge.clone(), T::of(delta));
        self.round_started = true;
        let record = MoveRecord {
            round: self.round,
            player,
            edge,
            previous,
            delta,
            timestamp: self.next_seq(),
        };
        self.audit.push(AuditRecord::Move(record.clone()));
        self.moves.push(record);
        Ok(vec![GameEvent::StateChanged])
    }

    fn do_apply(&mut self, player: String) -> Result<Vec<GameEvent>, EngineError> {
        self.require_turn(&player)?;
        self.require_editing()?;
        let mut committed = self.committed.clone();
        for (e, &d) in &self.staged {
            committed.set(e.clone(), d)?;
        }
        let model = apply_intervention(&self.base, &committed)?;
        let table = regenerate(&model, &self.original)?;

        let seq = self.next_seq();
        for (e, &d) in &self.staged {
            self.history.push(HistoryEntry {
                round: self.round,
                player: player.clone(),
                edge: e.clone(),
                previous: self.committed.get(e).to_f64_lossy(),
                delta: d.to_f64_lossy(),
            });
        }
        self.committed = committed;
        self.model = model;
        self.current = table;
        self.staged.clear();
        self.phase = TurnPhase::Applied;
        self.round_started = true;
        self.audit.push(AuditRecord::Apply {
            seq,
            round: self.round,
            player: player.clone(),
        });
        self.record_checkpoint(Some(player))?;
        Ok(vec![GameEvent::StateChanged])
    }

    fn do_end_turn(&mut self, player: String) -> Result<Vec<GameEvent>, EngineError> {
        self.require_turn(&player)?;
        match self.phase {
            TurnPhase::Applied => {}
            TurnPhase::Editing if self.staged.is_empty() => {}
            found => {
                return Err(EngineError::WrongPhase {
                    expected: "applied, or editing with nothing staged",
                    found,
                })
            }
        }
        let seq = self.next_seq();
        self.audit.push(AuditRecord::EndTurn {
            seq,
            round: self.round,
            player,
        });
        self.round_started = true;
        self.turn += 1;
        if self.turn == self.players.len() {
            self.rounds_played += 1;
            Ok(self.open_vote())
        } else {
            self.phase = TurnPhase::Editing;
            Ok(vec![GameEvent::TurnAdvanced {
                round: self.round,
                player: self.players[self.turn].id.clone(),
            }])
        }
    }

    fn open_vote(&mut self) -> Vec<GameEvent> {
        self.phase = TurnPhase::Ended;
        self.status = GameStatus::VotePending;
        self.ballots.clear();
        vec![GameEvent::VoteOpened { round: self.round }]
    }

    fn do_call_vote(&mut self, player: String) -> Result<Vec<GameEvent>, EngineError> {
        self.require_status(GameStatus::InProgress, "in-progress")?;
        if self.round_started || self.turn != 0 || !self.staged.is_empty() {
            return Err(EngineError::VoteNotAllowed);
        }
        let seq = self.next_seq();
        self.audit.push(AuditRecord::CallVote {
            seq,
            round: self.round,
            player,
        });
        Ok(self.open_vote())
    }

    fn do_vote(&mut self, player: String, choice: VoteChoice) -> Result<Vec<GameEvent>, EngineError> {
        self.require_status(GameStatus::VotePending, "vote-pending")?;
        if self.ballots.contains_key(&player) {
            return Err(EngineError::DoubleVote(player));
        }
        let seq = self.next_seq();
        self.audit.push(AuditRecord::Vote {
            seq,
            round: self.round,
            player: player.clone(),
            choice,
        });
        self.ballots.insert(player, choice);
        if self.ballots.len() < self.players.len() {
            return Ok(vec![GameEvent::StateChanged]);
        }

        let revealed = VoteRound {
            round: self.round,
            votes: std::mem::take(&mut self.ballots),
        };
        let stop = revealed.unanimous_stop();
        self.vote_rounds.push(revealed.clone());
        let mut events = vec![GameEvent::VotesRevealed(revealed)];
        if stop {
            self.status = GameStatus::Concluded;
            events.push(GameEvent::Concluded);
        } else if self.config.max_rounds.is_some_and(|m| self.rounds_played >= m) {
            self.status = GameStatus::RoundLimit;
            events.push(GameEvent::RoundLimitReached);
        } else {
            // A vote called before anyone moved does not use up the round.
            if self.turn == self.players.len() {
                self.round += 1;
            }
            self.turn = 0;
            self.phase = TurnPhase::Editing;
            self.status = GameStatus::InProgress;
            self.round_started = false;
            events.push(GameEvent::TurnAdvanced {
                round: self.round,
                player: self.players[0].id.clone(),
            });
        }
        Ok(events)
    }

    fn record_checkpoint(&mut self, player: Option<String>) -> Result<(), EngineError> {
        let index = self.checkpoints.len();
        let snapshot = self.compute_snapshot(index, player.clone())?;
        let checkpoint = Checkpoint {
            index,
            round: self.round,
            player,
            deltas: to_f64_map(&self.committed),
            hash: table_hash(&self.model, &self.current),
        };
        if index > 0 {
            self.audit.push(AuditRecord::Checkpoint {
                seq: self.seq,
                index,
                round: self.round,
                player: checkpoint.player.clone(),
                hash: checkpoint.hash.clone(),
            });
        }
        self.checkpoints.push(checkpoint);
        self.snapshots.push(snapshot);
        Ok(())
    }

    fn compute_snapshot(&self, index: usize, player: Option<String>) -> Result<MetricsSnapshot<T>, EngineError> {
        let label = &self.config.label;
        let outcome_original = match self.snapshots.first() {
            Some(s) => s.outcome_original.clone(),
            None => compute_outcome(&self.original, label)?,
        };
        let outcome = compute_outcome(&self.current, label)?;
        let groups = self.groups();
        let previous = self.snapshots.last().map(|s| &s.scores);
        let eval = match (self.snapshots.last(), self.checkpoints.last()) {
            // Same data as the previous checkpoint: reuse its evaluation.
            (Some(s), Some(c)) if c.hash == table_hash(&self.model, &self.current) => s.eval,
            _ => evaluate::<T>(&self.current, &self.eval_options)?,
        };
        Ok(MetricsSnapshot {
            index,
            round: self.round,
            player,
            disparity: compute_disparity(&groups, &outcome),
            scores: compute_scores(&groups, &outcome, previous),
            outcome_original,
            outcome,
            eval,
        })
    }

    pub fn original_eval(&self) -> EvalReport<T> {
        self.snapshots[0].eval
    }

    /// Original versus current evaluation.
    pub fn report(&self) -> ReportPair<T> {
        ReportPair {
            original: self.original_eval(),
            debiased: self.latest_snapshot().eval,
        }
    }

    /// The audit log as JSON lines.
    pub fn audit_log(&self) -> String {
        audit::to_jsonl(&self.audit)
    }

    /// Debiased table, audit log, per-checkpoint snapshots and the final
    /// report. Only a concluded game exports.
    pub fn export(&self) -> Result<ExportBundle<T>, EngineError> {
        if self.status != GameStatus::Concluded {
            return Err(EngineError::NotConcluded);
        }
        let mut snapshots = String::new();
        for s in &self.snapshots {
            snapshots.push_str(&serde_json::to_string(s)?);
            snapshots.push('\n');
        }
        let report = self.report();
        Ok(ExportBundle {
            table_csv: self.current.to_csv_string(),
            audit_log: self.audit_log(),
            snapshots,
            report_text: report.render_text(),
            report,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ExportBundle<T> {
    pub table_csv: String,
    pub audit_log: String,
    pub snapshots: String,
    pub report: ReportPair<T>,
    pub report_text: String,
}

impl<T: Real> ExportBundle<T> {
    pub const FILES: [&'static str; 5] = ["debiased.csv", "game.jsonl", "snapshots.jsonl", "report.txt", "report.json"];

    /// Writes the bundle into `dir` (created if needed).
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, EngineError> {
        std::fs::create_dir_all(dir)?;
        let contents = [
            self.table_csv.clone(),
            self.audit_log.clone(),
            self.snapshots.clone(),
            self.report_text.clone(),
            serde_json::to_string_pretty(&self.report)? + "\n",
        ];
        let mut out = Vec::new();
        for (name, body) in Self::FILES.iter().zip(contents) {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }
}
