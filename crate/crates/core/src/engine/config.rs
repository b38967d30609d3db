//! Game configuration document (JSON or TOML).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::causal::{load_dag, pc_discover, Alpha, Dag};
use crate::eval::{Algorithm, EvalOptions};
use crate::hiring;
use crate::preferences::{create_group, parse_group_file, preset, AttributeSelection, Group};
use crate::scalar::Real;
use crate::table::{CutRule, Table};

/// At most five stakeholders share a table.
pub const MAX_PLAYERS: usize = 5;
pub const DEFAULT_MAX_ROUNDS: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    /// The built-in hiring generator.
    Synthetic { seed: u64, rows: usize },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DagSource {
    /// Run PC discovery on the binarized table.
    #[default]
    Discover,
    /// A DAG file on disk.
    File(PathBuf),
    /// DAG file contents inline.
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub id: String,
    pub role: String,
    /// Explicit selections; when absent (and no group file) the role preset
    /// is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selections: Option<Vec<AttributeSelection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_file: Option<PathBuf>,
}

impl PlayerConfig {
    pub fn preset(id: impl Into<String>, role: impl Into<String>) -> Self {
        PlayerConfig {
            id: id.into(),
            role: role.into(),
            selections: None,
            group_file: None,
        }
    }

    pub fn with_selections(id: impl Into<String>, role: impl Into<String>, selections: Vec<AttributeSelection>) -> Self {
        PlayerConfig {
            id: id.into(),
            role: role.into(),
            selections: Some(selections),
            group_file: None,
        }
    }
}

fn default_alpha() -> f64 {
    Alpha::DEFAULT
}
fn default_fairness_k() -> usize {
    10
}
fn default_parity_column() -> String {
    "Gender".to_string()
}
fn default_test_fraction() -> f64 {
    0.25
}
fn default_max_rounds() -> Option<u32> {
    Some(DEFAULT_MAX_ROUNDS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub dataset: DatasetSource,
    pub label: String,
    /// Defaults to Age, Gender and Race for the synthetic dataset, none for CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitive: Option<Vec<String>>,
    /// Binarization rules; defaults to the hiring cuts for the synthetic dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<BTreeMap<String, CutRule>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub classifier: Algorithm,
    #[serde(default = "default_fairness_k")]
    pub fairness_k: usize,
    #[serde(default = "default_parity_column")]
    pub parity_column: String,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub players: Vec<PlayerConfig>,
    #[serde(default)]
    pub dag: DagSource,
    #[serde(default)]
    pub seed: u64,
    /// Safety limit on completed rounds; `None` disables it.
    #[serde(default = "default_max_rounds")]
    pub max_rounds: Option<u32>,
}

impl GameConfig {
    /// The synthetic hiring scenario with the expert DAG and one player per
    /// role preset, in preset order.
    pub fn hiring(seed: u64, rows: usize) -> Self {
        let roles = ["Hiring Agency", "Employer", "Manager", "Coworkers", "Union Rep."];
        GameConfig {
            dataset: DatasetSource::Synthetic { seed, rows },
            label: hiring::LABEL.to_string(),
            sensitive: None,
            cuts: None,
            alpha: Alpha::DEFAULT,
            classifier: Algorithm::default(),
            fairness_k: default_fairness_k(),
            parity_column: default_parity_column(),
            test_fraction: default_test_fraction(),
            players: roles
                .iter()
                .enumerate()
                .map(|(i, r)| PlayerConfig::preset(format!("p{}", i + 1), *r))
                .collect(),
            dag: DagSource::Text(hiring::HIRING_DAG.to_string()),
            seed,
            max_rounds: default_max_rounds(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        serde_json::from_str(text).map_err(|e| parse_error(&e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        toml::from_str(text).map_err(|e| parse_error(&e.to_string()))
    }

    /// Reads a `.toml` or JSON file; relative paths inside are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSource::Csv { path } = &mut self.dataset {
            fix(path);
        }
        if let DagSource::File(path) = &mut self.dag {
            fix(path);
        }
        for p in &mut self.players {
            if let Some(path) = &mut p.group_file {
                fix(path);
            }
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            algorithm: self.classifier.clone(),
            split_seed: self.seed,
            test_fraction: self.test_fraction,
            fairness_k: self.fairness_k,
            parity_column: self.parity_column.clone(),
        }
    }

    /// Structural checks that need no data.
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.players.is_empty() {
            return Err(EngineError::invalid("players", "at least one player is required"));
        }
        if self.players.len() > MAX_PLAYERS {
            return Err(EngineError::TooManyPlayers(self.players.len()));
        }
        let mut ids = BTreeSet::new();
        for p in &self.players {
            if p.id.trim().is_empty() {
                return Err(EngineError::invalid("players.id", "player id must not be empty"));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(EngineError::DuplicatePlayer(p.id.clone()));
            }
        }
        if self.label.trim().is_empty() {
            return Err(EngineError::invalid("label", "label column must be named"));
        }
        Alpha::new(self.alpha).map_err(|e| EngineError::invalid("alpha", e.to_string()))?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(EngineError::invalid("test_fraction", "must lie in (0, 1)"));
        }
        if self.fairness_k == 0 {
            return Err(EngineError::invalid("fairness_k", "must be at least 1"));
        }
        Ok(())
    }

    /// Loads (or generates) the dataset and binarizes it.
    pub fn load_table(&self) -> Result<Table, EngineError> {
        let (raw, default_sensitive, default_cuts) = match &self.dataset {
            DatasetSource::Synthetic { seed, rows } => (
                hiring::generate_hiring(*seed, *rows),
                hiring::SENSITIVE.iter().map(|s| s.to_string()).collect(),
                hiring::hiring_cuts(),
            ),
            DatasetSource::Csv { path } => {
                let sensitive: Vec<&str> = self.sensitive.iter().flatten().map(String::as_str).collect();
                (Table::load_csv(path, &self.label, &sensitive)?, Vec::new(), BTreeMap::new())
            }
        };
        let sensitive = self.sensitive.clone().unwrap_or(default_sensitive);
        let raw = if raw.label_name() != self.label || sensitive_differs(&raw, &sensitive) {
            raw.with_roles(&self.label, &sensitive)?
        } else {
            raw
        };
        let cuts = self.cuts.clone().unwrap_or(default_cuts);
        Ok(raw.binarize(&cuts)?)
    }

    pub fn build_dag(&self, table: &Table) -> Result<Dag, EngineError> {
        Ok(match &self.dag {
            DagSource::Discover => pc_discover(table, Alpha::new(self.alpha)?)?,
            DagSource::File(path) => load_dag(&std::fs::read_to_string(path)?, table)?.0,
            DagSource::Text(text) => load_dag(text, table)?.0,
        })
    }

    pub fn build_groups<T: Real>(&self, table: &Table) -> Result<Vec<Group<T>>, EngineError> {
        self.players
            .iter()
            .map(|p| {
                let group = match (&p.selections, &p.group_file) {
                    (Some(sel), _) => create_group(p.role.clone(), p.id.clone(), sel.clone())?,
                    (None, Some(path)) => parse_group_file::<T>(&std::fs::read_to_string(path)?)?.with_owner(p.id.clone()),
                    (None, None) => preset::<T>(&p.role)?.with_owner(p.id.clone()),
                };
                group.validate(table)?;
                Ok(group)
            })
            .collect()
    }
}

/// Names the offending field when serde reports a missing or unknown one.
fn parse_error(message: &str) -> EngineError {
    let field = ["missing field `", "unknown field `"]
        .iter()
        .find_map(|p| message.split_once(p))
        .and_then(|(_, rest)| rest.split_once('`'))
        .map(|(f, _)| f)
        .unwrap_or("config");
    EngineError::invalid(field, message.trim())
}

fn sensitive_differs(table: &Table, wanted: &[String]) -> bool {
    let have: BTreeSet<&str> = table.sensitive_columns().into_iter().collect();
    let want: BTreeSet<&str> = wanted.iter().map(String::as_str).collect();
    have != want
}
