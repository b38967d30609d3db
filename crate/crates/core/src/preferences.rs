//! Player groups: prioritized `(feature, value)` selections sharing a unit
//! care budget.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::table::{ColumnKind, Table};

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("a group needs at least one selection")]
    Empty,
    #[error("duplicate selection {0}")]
    Duplicate(AttributeSelection),
    #[error("selection {0} targets the label column")]
    OnLabel(AttributeSelection),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` is not binary")]
    NotBinary(String),
    #[error("cannot parse selection `{0}` (expected feature=0 or feature=1)")]
    BadSelection(String),
    #[error("group file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown role preset `{0}`")]
    UnknownPreset(String),
}

/// One prioritized attribute; serialized as `"feature=value"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AttributeSelection {
    pub feature: String,
    pub value: u8,
}

impl AttributeSelection {
    pub fn new(feature: impl Into<String>, value: u8) -> Self {
        AttributeSelection {
            feature: feature.into(),
            value,
        }
    }
}

impl fmt::Display for AttributeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.feature, self.value)
    }
}

impl FromStr for AttributeSelection {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (f, v) = s
            .split_once('=')
            .ok_or_else(|| GroupError::BadSelection(s.to_string()))?;
        let value = match v.trim() {
            "0" => 0,
            "1" => 1,
            _ => return Err(GroupError::BadSelection(s.to_string())),
        };
        let feature = f.trim();
        if feature.is_empty() {
            return Err(GroupError::BadSelection(s.to_string()));
        }
        Ok(AttributeSelection::new(feature, value))
    }
}

impl TryFrom<String> for AttributeSelection {
    type Error = GroupError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AttributeSelection> for String {
    fn from(s: AttributeSelection) -> String {
        s.to_string()
    }
}

/// A player's group. Care weights are uniform: `1 / selections.len()` each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Group<T> {
    pub name: String,
    pub owner: String,
    selections: Vec<AttributeSelection>,
    care: Vec<T>,
}

pub fn create_group<T: Real>(
    name: impl Into<String>,
    owner: impl Into<String>,
    selections: Vec<AttributeSelection>,
) -> Result<Group<T>, GroupError> {
    if selections.is_empty() {
        return Err(GroupError::Empty);
    }
    let mut seen = BTreeSet::new();
    for s in &selections {
        if !seen.insert(s.clone()) {
            return Err(GroupError::Duplicate(s.clone()));
        }
    }
    let n = selections.len();
    let each = T::one() / T::of_usize(n);
    Ok(Group {
        name: name.into(),
        owner: owner.into(),
        selections,
        care: vec![each; n],
    })
}

impl<T: Real> Group<T> {
    pub fn selections(&self) -> &[AttributeSelection] {
        &self.selections
    }

    pub fn care_weights(&self) -> &[T] {
        &self.care
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AttributeSelection, T)> {
        self.selections.iter().zip(self.care.iter().copied())
    }

    pub fn care_for(&self, feature: &str, value: u8) -> T {
        self.iter()
            .find(|(s, _)| s.feature == feature && s.value == value)
            .map(|(_, c)| c)
            .unwrap_or_else(T::zero)
    }

    /// Checks every selection against the table schema.
    pub fn validate(&self, table: &Table) -> Result<(), GroupError> {
        for s in &self.selections {
            let col = table
                .column(&s.feature)
                .ok_or_else(|| GroupError::UnknownFeature(s.feature.clone()))?;
            if s.feature == table.label_name() {
                return Err(GroupError::OnLabel(s.clone()));
            }
            if col.kind != ColumnKind::Binary {
                return Err(GroupError::NotBinary(s.feature.clone()));
            }
        }
        Ok(())
    }

    pub fn with_owner(mut self, owner: impl Into<String>) -> Self {
        self.owner = owner.into();
        self
    }

    /// Group-file text: `name:` and `owner:` header lines, then one
    /// `feature=value` per line.
    pub fn to_group_file(&self) -> String {
        let mut out = format!("name: {}\nowner: {}\n", self.name, self.owner);
        for s in &self.selections {
            out.push_str(&format!("{s}\n"));
        }
        out
    }
}

pub fn parse_group_file<T: Real>(text: &str) -> Result<Group<T>, GroupError> {
    let mut name = None;
    let mut owner = None;
    let mut selections = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("name:") {
            name = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("owner:") {
            owner = Some(rest.trim().to_string());
        } else {
            let sel = line.parse().map_err(|e: GroupError| GroupError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            selections.push(sel);
        }
    }
    let missing = |what: &str| GroupError::Parse {
        line: 0,
        message: format!("missing `{what}:` line"),
    };
    create_group(
        name.ok_or_else(|| missing("name"))?,
        owner.ok_or_else(|| missing("owner"))?,
        selections,
    )
}

/// Role presets for the hiring scenario, keyed by slug.
pub const PRESETS: [(&str, &str); 5] = [
    ("hiring-agency", include_str!("../presets/hiring-agency.group")),
    ("employer", include_str!("../presets/employer.group")),
    ("manager", include_str!("../presets/manager.group")),
    ("coworkers", include_str!("../presets/coworkers.group")),
    ("union-rep", include_str!("../presets/union-rep.group")),
];

/// Looks a preset up by slug (`union-rep`) or display name (`Union Rep.`).
pub fn preset<T: Real>(role: &str) -> Result<Group<T>, GroupError> {
    let norm = |s: &str| {
        s.chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase()
    };
    let wanted = norm(role);
    for (slug, text) in PRESETS {
        let g: Group<T> = parse_group_file(text)?;
        if norm(slug) == wanted || norm(&g.name) == wanted {
            return Ok(g);
        }
    }
    Err(GroupError::UnknownPreset(role.to_string()))
}

pub fn all_presets<T: Real>() -> Vec<Group<T>> {
    PRESETS
        .iter()
        .map(|(_, text)| parse_group_file(text).expect("bundled presets parse"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Fraction of rows matching each selection, in group order.
    pub per_selection: Vec<(AttributeSelection, f64)>,
    /// Fraction of rows inside the group: every selected feature matches one
    /// of its selected values.
    pub joint: f64,
}

pub fn group_coverage<T: Real>(group: &Group<T>, table: &Table) -> Result<Coverage, GroupError> {
    let rows = table.row_count();
    let frac = |c: usize| if rows == 0 { 0.0 } else { c as f64 / rows as f64 };
    let mut per_feature: BTreeMap<&str, BTreeSet<u8>> = BTreeMap::new();
    let mut per_selection = Vec::new();
    for s in group.selections() {
        let values = table
            .values(&s.feature)
            .map_err(|_| GroupError::UnknownFeature(s.feature.clone()))?;
        let hits = values.iter().filter(|&&x| x == f64::from(s.value)).count();
        per_selection.push((s.clone(), frac(hits)));
        per_feature.entry(&s.feature).or_default().insert(s.value);
    }
    let columns: Vec<(&[f64], &BTreeSet<u8>)> = per_feature
        .iter()
        .map(|(f, vals)| (table.values(f).expect("checked above"), vals))
        .collect();
    let joint_hits = (0..rows)
        .filter(|&r| {
            columns
                .iter()
                .all(|(col, vals)| vals.iter().any(|&v| col[r] == f64::from(v)))
        })
        .count();
    Ok(Coverage {
        per_selection,
        joint: frac(joint_hits),
    })
}

/// Display weight per feature and value: the care weight when selected, 0
/// (rendered gray) otherwise. Covers every non-label column of `table`.
pub fn priority_chart<T: Real>(group: &Group<T>, table: &Table) -> BTreeMap<String, [T; 2]> {
    let label = table.label_name();
    table
        .column_names()
        .filter(|&c| c != label)
        .map(|c| (c.to_string(), [group.care_for(c, 0), group.care_for(c, 1)]))
        .collect()
}
