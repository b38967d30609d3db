//! Causal model: DAG, discovery, linear SEM fitting, edge interventions and
//! regeneration of the debiased table.

pub mod ci;
pub mod dag;
mod latent;
pub mod ols;
pub mod pc;
pub mod sem;

use thiserror::Error;

pub use dag::{load_dag, Dag, DagFile, Edge};
pub use pc::{pc_discover, pc_discover_detailed, Alpha, PcResult};
pub use sem::{apply_intervention, fit_sem, fit_sem_with_betas, regenerate, Intervention, SemModel};

use crate::table::TableError;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("edge {0} would create a cycle")]
    Cycle(Edge),
    #[error("unknown edge {0}")]
    UnknownEdge(Edge),
    #[error("dag file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("need at least {required} rows for discovery, found {found}")]
    TooFewRows { found: usize, required: usize },
    #[error("delta {delta} for {edge} outside [-1, 1]")]
    DeltaOutOfRange { edge: Edge, delta: f64 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Table(#[from] TableError),
}
