//! Append-only audit log (JSON lines) and deterministic replay.

use serde::{Deserialize, Serialize};

use super::{Action, EngineError, Game, GameConfig, MoveRecord, VoteChoice};
use crate::scalar::Real;

/// One line of the audit log. The first line is always `config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum AuditRecord {
    Config {
        config: GameConfig,
        scalar: String,
    },
    Move(MoveRecord),
    Apply {
        seq: u64,
        round: u32,
        player: String,
    },
    EndTurn {
        seq: u64,
        round: u32,
        player: String,
    },
    CallVote {
        seq: u64,
        round: u32,
        player: String,
    },
    Vote {
        seq: u64,
        round: u32,
        player: String,
        choice: VoteChoice,
    },
    Checkpoint {
        seq: u64,
        index: usize,
        round: u32,
        player: Option<String>,
        hash: String,
    },
}

impl AuditRecord {
    /// The action this record replays, if any.
    pub fn action(&self) -> Option<Action> {
        Some(match self {
            AuditRecord::Move(m) => Action::Propose {
                player: m.player.clone(),
                edge: m.edge.clone(),
                delta: m.delta,
            },
            AuditRecord::Apply { player, .. } => Action::Apply { player: player.clone() },
            AuditRecord::EndTurn { player, .. } => Action::EndTurn { player: player.clone() },
            AuditRecord::CallVote { player, .. } => Action::CallVote { player: player.clone() },
            AuditRecord::Vote { player, choice, .. } => Action::Vote {
                player: player.clone(),
                choice: *choice,
            },
            AuditRecord::Config { .. } | AuditRecord::Checkpoint { .. } => return None,
        })
    }
}

pub fn to_jsonl(records: &[AuditRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("audit records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<AuditRecord>, EngineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EngineError::Replay {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Rebuilds a game from its audit log, checking every checkpoint hash.
pub fn replay<T: Real>(log: &str) -> Result<Game<T>, EngineError> {
    let records = parse_jsonl(log)?;
    let fail = |line: usize, message: String| EngineError::Replay { line, message };
    let (config, scalar) = match records.first() {
        Some(AuditRecord::Config { config, scalar }) => (config.clone(), scalar),
        _ => return Err(fail(1, "first record must be the config".into())),
    };
    if scalar != std::any::type_name::<T>() {
        return Err(fail(1, format!("log was written with scalar `{scalar}`")));
    }
    let mut game = Game::<T>::new(config)?;
    for (i, record) in records.iter().enumerate().skip(1) {
        let line = i + 1;
        if let Some(action) = record.action() {
            game.act(action).map_err(|e| fail(line, e.to_string()))?;
        }
        if let AuditRecord::Checkpoint { index, hash, .. } = record {
            match game.checkpoints().get(*index) {
                Some(c) if &c.hash == hash => {}
                Some(c) => return Err(fail(line, format!("checkpoint {index}: hash {} != {hash}", c.hash))),
                None => return Err(fail(line, format!("checkpoint {index} was not reproduced"))),
            }
        }
    }
    if game.audit_records() != records.as_slice() {
        return Err(fail(records.len(), "replayed log differs from the input".into()));
    }
    Ok(game)
}
