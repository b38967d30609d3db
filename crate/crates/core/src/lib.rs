//! Collaborative data debiasing: a causal model over a tabular dataset that
//! several stakeholders edit in turns until they vote to stop.

pub mod causal;
pub mod engine;
pub mod eval;
pub mod hiring;
pub mod metrics;
pub mod preferences;
pub mod scalar;
pub mod sim;
pub mod table;

pub use scalar::Real;
pub use table::{Table, TableError};

pub use causal::{Dag, Edge};
pub use engine::{Action, EngineError, GameConfig, GameStatus, VoteChoice};

/// Double-precision instantiations; the `32` variants use `f32`.
pub type Game = engine::Game<f64>;
pub type Game32 = engine::Game<f32>;
pub type SemModel = causal::SemModel<f64>;
pub type Intervention = causal::Intervention<f64>;
pub type Group = preferences::Group<f64>;
pub type EvalReport = eval::EvalReport<f64>;
pub type SimulationReport = sim::SimulationReport<f64>;
