//! Game sessions with a write-ahead log per game.
//!
//! Layout under the data directory:
//!
//! ```text
//! <game-id>/log.jsonl       create, join and action records, fsynced in order
//! <game-id>/snapshot.json   state document, rewritten every few actions
//! ```
//!
//! The log is the source of truth. Opening a data directory replays every
//! log through the engine and checks each snapshot it passes.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use debias_core::causal::Edge;
use debias_core::engine::{Action, ExportBundle, Game, GameConfig, GameEvent, GameStatus, GameView, TurnPhase, VoteChoice};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::error::ServiceError;

pub const LOG_FILE: &str = "log.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 10;

/// An action as a client sends it; the acting player comes from the token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ActionRequest {
    Propose { edge: Edge, delta: f64 },
    Apply,
    EndTurn,
    CallVote,
    Vote { choice: VoteChoice },
}

impl ActionRequest {
    pub fn into_action(self, player: String) -> Action {
        match self {
            ActionRequest::Propose { edge, delta } => Action::Propose { player, edge, delta },
            ActionRequest::Apply => Action::Apply { player },
            ActionRequest::EndTurn => Action::EndTurn { player },
            ActionRequest::CallVote => Action::CallVote { player },
            ActionRequest::Vote { choice } => Action::Vote { player, choice },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub game_id: String,
    pub player_id: String,
    pub role: String,
    /// Opaque secret, sent back as `Authorization: Bearer <token>`.
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMessage {
    pub game_id: String,
    /// Per game, starting at 1, without gaps.
    pub sequence: u64,
    /// `state-changed`, `turn-advanced`, `vote-opened` or `concluded`.
    pub kind: String,
    /// Where to refetch the state document.
    pub snapshot: String,
    /// Engine action sequence the event belongs to.
    pub engine_sequence: u64,
    /// Engine event details; `None` for lobby events such as a join.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<GameEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub game_id: String,
    /// Engine action sequence after the action.
    pub sequence: u64,
    /// Last event sequence produced by the action.
    pub event_sequence: u64,
    pub status: GameStatus,
    pub phase: TurnPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum LogRecord {
    Create {
        game_id: String,
        config: GameConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<String>,
    },
    Join {
        player: String,
        role: String,
        token: String,
    },
    Action {
        player: String,
        request: ActionRequest,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SnapshotDoc {
    sequence: u64,
    event_sequence: u64,
    view: serde_json::Value,
}

struct SlotState {
    game: Game<f64>,
    /// player id -> token
    seats: BTreeMap<String, String>,
    /// idempotency key -> (request fingerprint, ack)
    acks: HashMap<String, (String, Ack)>,
    events: Vec<EventMessage>,
    log: Option<File>,
}

struct Slot {
    dir: PathBuf,
    state: Mutex<SlotState>,
    notify: watch::Sender<u64>,
}

impl Slot {
    fn lock(&self) -> MutexGuard<'_, SlotState> {
        self.state.lock().expect("game lock poisoned")
    }
}

struct Inner {
    data_dir: PathBuf,
    snapshot_every: u64,
    games: RwLock<BTreeMap<String, Arc<Slot>>>,
    /// create idempotency key -> game id
    creates: Mutex<HashMap<String, String>>,
}

/// All games of one data directory. Cheap to clone.
#[derive(Clone)]
pub struct GameService {
    inner: Arc<Inner>,
}

fn random_hex(bytes: usize) -> String {
    let mut rng = rand::rng();
    (0..bytes).map(|_| format!("{:02x}", rng.random::<u8>())).collect()
}

fn append(log: &mut Option<File>, record: &LogRecord) -> Result<(), ServiceError> {
    let file = log.as_mut().expect("live games have an open log");
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.sync_data()?;
    Ok(())
}

fn fingerprint(player: &str, request: &ActionRequest) -> String {
    format!("{player}:{}", serde_json::to_string(request).expect("requests serialize"))
}

impl SlotState {
    fn push_events(&mut self, game_id: &str, events: Vec<Option<GameEvent>>) -> u64 {
        let engine_sequence = self.game.sequence();
        for event in events {
            let sequence = self.events.len() as u64 + 1;
            self.events.push(EventMessage {
                game_id: game_id.to_string(),
                sequence,
                kind: event.as_ref().map_or("state-changed", GameEvent::kind).to_string(),
                snapshot: format!("/games/{game_id}/state"),
                engine_sequence,
                event,
            });
        }
        self.events.len() as u64
    }

    fn ack(&self, game_id: &str) -> Ack {
        Ack {
            game_id: game_id.to_string(),
            sequence: self.game.sequence(),
            event_sequence: self.events.len() as u64,
            status: self.game.status(),
            phase: self.game.phase(),
        }
    }

    /// Player id of an unclaimed `role`.
    fn seat_for(&self, role: &str) -> Result<String, ServiceError> {
        let player = self
            .game
            .players()
            .iter()
            .find(|p| p.role == role)
            .ok_or_else(|| ServiceError::UnknownRole(role.to_string()))?
            .id
            .clone();
        if self.seats.contains_key(&player) {
            return Err(ServiceError::RoleTaken(role.to_string()));
        }
        Ok(player)
    }

    fn join(&mut self, game_id: &str, role: &str, token: String) -> Result<SessionToken, ServiceError> {
        let player = self.seat_for(role)?;
        self.seats.insert(player.clone(), token.clone());
        Ok(SessionToken {
            game_id: game_id.to_string(),
            player_id: player,
            role: role.to_string(),
            token,
        })
    }

    fn player_for(&self, token: &str) -> Result<String, ServiceError> {
        self.seats
            .iter()
            .find(|(_, t)| t.as_str() == token)
            .map(|(p, _)| p.clone())
            .ok_or(ServiceError::Unauthorized)
    }

    /// Runs `request` on a copy of the game; the caller persists before
    /// swapping it in.
    fn trial(&self, player: &str, request: &ActionRequest) -> Result<(Game<f64>, Vec<GameEvent>), ServiceError> {
        let mut next = self.game.clone();
        let events = next.act(request.clone().into_action(player.to_string()))?;
        Ok((next, events))
    }

    fn commit(&mut self, game_id: &str, game: Game<f64>, events: Vec<GameEvent>, player: &str, request: &ActionRequest, key: Option<String>) -> Ack {
        self.game = game;
        self.push_events(game_id, events.into_iter().map(Some).collect());
        let ack = self.ack(game_id);
        if let Some(key) = key {
            self.acks.insert(key, (fingerprint(player, request), ack.clone()));
        }
        ack
    }

    fn snapshot(&self) -> Result<SnapshotDoc, ServiceError> {
        Ok(SnapshotDoc {
            sequence: self.game.sequence(),
            event_sequence: self.events.len() as u64,
            view: serde_json::to_value(self.game.view(None))?,
        })
    }
}

fn write_snapshot(dir: &Path, doc: &SnapshotDoc) -> Result<(), ServiceError> {
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let mut f = File::create(&tmp)?;
    f.write_all(serde_json::to_string(doc)?.as_bytes())?;
    f.sync_data()?;
    std::fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
    Ok(())
}

impl GameService {
    /// Opens (creating if needed) a data directory and recovers every game
    /// logged in it.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        Self::with_snapshot_interval(data_dir, DEFAULT_SNAPSHOT_EVERY)
    }

    pub fn with_snapshot_interval(data_dir: impl Into<PathBuf>, every: u64) -> Result<Self, ServiceError> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir)?;
        let service = GameService {
            inner: Arc::new(Inner {
                data_dir: data_dir.clone(),
                snapshot_every: every.max(1),
                games: RwLock::new(BTreeMap::new()),
                creates: Mutex::new(HashMap::new()),
            }),
        };
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&data_dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.join(LOG_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            service.recover(&dir)?;
        }
        Ok(service)
    }

    pub fn data_dir(&self) -> &Path {
        &self.inner.data_dir
    }

    pub fn game_ids(&self) -> Vec<String> {
        self.inner.games.read().expect("games lock").keys().cloned().collect()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        self.inner
            .games
            .read()
            .expect("games lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    fn install(&self, id: String, dir: PathBuf, state: SlotState) -> Arc<Slot> {
        let last = state.events.len() as u64;
        let slot = Arc::new(Slot {
            dir,
            state: Mutex::new(state),
            notify: watch::channel(last).0,
        });
        self.inner.games.write().expect("games lock").insert(id, slot.clone());
        slot
    }

    /// Validates `config`, builds the game and persists it. A repeated
    /// `key` returns the game created first.
    pub fn create_game(&self, config: GameConfig, key: Option<String>) -> Result<String, ServiceError> {
        let mut creates = self.inner.creates.lock().expect("create lock");
        if let Some(id) = key.as_ref().and_then(|k| creates.get(k)) {
            return Ok(id.clone());
        }
        let game = Game::<f64>::new(config.clone())?;
        let id = random_hex(8);
        let dir = self.inner.data_dir.join(&id);
        std::fs::create_dir_all(&dir)?;
        let mut log = Some(OpenOptions::new().create_new(true).append(true).open(dir.join(LOG_FILE))?);
        append(
            &mut log,
            &LogRecord::Create {
                game_id: id.clone(),
                config,
                key: key.clone(),
            },
        )?;
        let state = SlotState {
            game,
            seats: BTreeMap::new(),
            acks: HashMap::new(),
            events: Vec::new(),
            log,
        };
        write_snapshot(&dir, &state.snapshot()?)?;
        self.install(id.clone(), dir, state);
        if let Some(k) = key {
            creates.insert(k, id.clone());
        }
        log::info!("created game {id}");
        Ok(id)
    }

    pub fn join_game(&self, id: &str, role: &str) -> Result<SessionToken, ServiceError> {
        let slot = self.slot(id)?;
        let mut st = slot.lock();
        let player = st.seat_for(role)?;
        let token = random_hex(16);
        append(
            &mut st.log,
            &LogRecord::Join {
                player,
                role: role.to_string(),
                token: token.clone(),
            },
        )?;
        let session = st.join(id, role, token)?;
        let last = st.push_events(id, vec![None]);
        slot.notify.send_replace(last);
        Ok(session)
    }

    /// Applies one action for the token's player. The log record is durable
    /// before the new state becomes visible.
    pub fn submit(&self, id: &str, token: &str, request: ActionRequest, key: Option<String>) -> Result<Ack, ServiceError> {
        let slot = self.slot(id)?;
        let mut st = slot.lock();
        let player = st.player_for(token)?;
        if let Some((fp, ack)) = key.as_ref().and_then(|k| st.acks.get(k)) {
            return if *fp == fingerprint(&player, &request) {
                Ok(ack.clone())
            } else {
                Err(ServiceError::KeyReused(key.unwrap_or_default()))
            };
        }
        let (next, events) = st.trial(&player, &request)?;
        append(
            &mut st.log,
            &LogRecord::Action {
                player: player.clone(),
                request: request.clone(),
                key: key.clone(),
            },
        )?;
        let before = st.game.sequence();
        let ack = st.commit(id, next, events, &player, &request, key);
        let every = self.inner.snapshot_every;
        if ack.sequence / every > before / every {
            if let Err(e) = st.snapshot().and_then(|doc| write_snapshot(&slot.dir, &doc)) {
                // the log already holds the action; a stale snapshot is harmless
                log::warn!("snapshot for game {id} failed: {e}");
            }
        }
        slot.notify.send_replace(ack.event_sequence);
        Ok(ack)
    }

    pub fn view(&self, id: &str, edge: Option<&Edge>) -> Result<GameView<f64>, ServiceError> {
        Ok(self.slot(id)?.lock().game.view(edge))
    }

    pub fn export(&self, id: &str) -> Result<ExportBundle<f64>, ServiceError> {
        Ok(self.slot(id)?.lock().game.export()?)
    }

    /// Runs `f` with read access to the game.
    pub fn with_game<R>(&self, id: &str, f: impl FnOnce(&Game<f64>) -> R) -> Result<R, ServiceError> {
        Ok(f(&self.slot(id)?.lock().game))
    }

    /// Events with sequence `>= from`.
    pub fn events_from(&self, id: &str, from: u64) -> Result<Vec<EventMessage>, ServiceError> {
        let slot = self.slot(id)?;
        let st = slot.lock();
        let start = from.saturating_sub(1).min(st.events.len() as u64) as usize;
        Ok(st.events[start..].to_vec())
    }

    /// Receiver of the latest event sequence of a game.
    pub fn subscribe(&self, id: &str) -> Result<watch::Receiver<u64>, ServiceError> {
        Ok(self.slot(id)?.notify.subscribe())
    }

    fn recover(&self, dir: &Path) -> Result<(), ServiceError> {
        let path = dir.join(LOG_FILE);
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let corrupt = |line: usize, message: String| ServiceError::CorruptLog {
            game: name.clone(),
            line,
            message,
        };

        let mut records = Vec::new();
        let mut valid_len = 0u64;
        let mut reader = BufReader::new(File::open(&path)?);
        let mut buf = String::new();
        let mut line_no = 0;
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if !buf.ends_with('\n') {
                // a torn final write was never acknowledged
                log::warn!("game {name}: dropping incomplete last record at line {line_no}");
                break;
            }
            let record = serde_json::from_str::<LogRecord>(buf.trim_end()).map_err(|e| corrupt(line_no, e.to_string()))?;
            records.push(record);
            valid_len += n as u64;
        }

        let snapshot: Option<SnapshotDoc> = match std::fs::read_to_string(dir.join(SNAPSHOT_FILE)) {
            Ok(text) => Some(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };

        let mut iter = records.into_iter().enumerate();
        let (id, config, key) = match iter.next() {
            Some((_, LogRecord::Create { game_id, config, key })) => (game_id, config, key),
            _ => return Err(corrupt(1, "first record must create the game".into())),
        };
        let mut st = SlotState {
            game: Game::new(config).map_err(|e| corrupt(1, e.to_string()))?,
            seats: BTreeMap::new(),
            acks: HashMap::new(),
            events: Vec::new(),
            log: None,
        };
        let check = |st: &SlotState, line: usize| -> Result<(), ServiceError> {
            if let Some(doc) = &snapshot {
                if doc.sequence == st.game.sequence() && doc.event_sequence == st.events.len() as u64 {
                    let view = serde_json::to_value(st.game.view(None))?;
                    if view != doc.view {
                        return Err(corrupt(line, format!("state differs from snapshot at sequence {}", doc.sequence)));
                    }
                }
            }
            Ok(())
        };
        check(&st, 1)?;
        for (i, record) in iter {
            let line = i + 1;
            match record {
                LogRecord::Create { .. } => return Err(corrupt(line, "second create record".into())),
                LogRecord::Join { role, token, .. } => {
                    st.join(&id, &role, token).map_err(|e| corrupt(line, e.to_string()))?;
                    st.push_events(&id, vec![None]);
                }
                LogRecord::Action { player, request, key } => {
                    let (next, events) = st.trial(&player, &request).map_err(|e| corrupt(line, e.to_string()))?;
                    st.commit(&id, next, events, &player, &request, key);
                }
            }
            check(&st, line)?;
        }

        let file = OpenOptions::new().write(true).open(&path)?;
        file.set_len(valid_len)?;
        drop(file);
        st.log = Some(OpenOptions::new().append(true).open(&path)?);
        if let Some(k) = key {
            self.inner.creates.lock().expect("create lock").insert(k, id.clone());
        }
        log::info!(
            "recovered game {id}: sequence {}, {} events",
            st.game.sequence(),
            st.events.len()
        );
        self.install(id, dir.to_path_buf(), st);
        Ok(())
    }
}
