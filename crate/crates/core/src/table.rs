//! Column-typed tabular data with one designated binary label column.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing header row")]
    MissingHeader,
    #[error("label column `{0}` not found")]
    MissingLabel(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row} has {found} fields, expected {expected}")]
    NonRectangular {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("label column `{column}` is not binary (found `{value}`)")]
    NonBinaryLabel { column: String, value: String },
    #[error("column `{0}` has no binarization rule")]
    MissingCut(String),
    #[error("rule `{rule}` cannot be applied to {kind} column `{column}`")]
    IncompatibleCut {
        column: String,
        kind: ColumnKind,
        rule: CutRule,
    },
    #[error("column `{0}` is categorical, expected numeric values")]
    NotNumeric(String),
    #[error("column `{column}` has {found} values, expected {expected}")]
    LengthMismatch {
        column: String,
        found: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Binary,
    Categorical,
    Numeric,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Binary => "binary",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Feature,
    Label,
    SensitiveFeature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
}

/// Rule mapping a raw column onto {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutRule {
    /// Numeric: `value > threshold` maps to 1.
    Above(f64),
    /// Categorical: membership maps to 1.
    OneOf(BTreeSet<String>),
}

impl fmt::Display for CutRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutRule::Above(t) => write!(f, "above {t}"),
            CutRule::OneOf(set) => {
                let items: Vec<&str> = set.iter().map(String::as_str).collect();
                write!(f, "one of {{{}}}", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnData {
    Numbers(Vec<f64>),
    Text(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Numbers(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }
}

/// Immutable table. Storage is column-major; row order is the order of
/// construction (file order for CSV input).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<ColumnSpec>,
    data: Vec<ColumnData>,
    rows: usize,
    cuts: BTreeMap<String, CutRule>,
}

fn is_binary_value(x: f64) -> bool {
    x == 0.0 || x == 1.0
}

fn infer_column(name: &str, raw: Vec<String>) -> (ColumnKind, ColumnData) {
    let parsed: Option<Vec<f64>> = raw.iter().map(|s| s.trim().parse::<f64>().ok()).collect();
    match parsed {
        Some(values) => {
            let kind = if values.iter().all(|&x| is_binary_value(x)) {
                ColumnKind::Binary
            } else {
                ColumnKind::Numeric
            };
            log::trace!("column {name}: inferred {kind}");
            (kind, ColumnData::Numbers(values))
        }
        None => (ColumnKind::Categorical, ColumnData::Text(raw)),
    }
}

fn role_for(name: &str, label: &str, sensitive: &BTreeSet<String>) -> Role {
    if name == label {
        Role::Label
    } else if sensitive.contains(name) {
        Role::SensitiveFeature
    } else {
        Role::Feature
    }
}

fn format_number(x: f64) -> String {
    format!("{x}")
}

impl Table {
    /// Builds a table from named numeric columns, inferring kinds.
    pub fn from_numeric_columns<S: AsRef<str>>(
        columns: Vec<(String, Vec<f64>)>,
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let raw = columns
            .into_iter()
            .map(|(name, values)| {
                let kind = if values.iter().all(|&x| is_binary_value(x)) {
                    ColumnKind::Binary
                } else {
                    ColumnKind::Numeric
                };
                (name, kind, ColumnData::Numbers(values))
            })
            .collect();
        Self::assemble(raw, label, sensitive)
    }

    /// Builds a table of binary columns.
    pub fn from_binary_columns<S: AsRef<str>>(
        columns: Vec<(String, Vec<u8>)>,
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let columns = columns
            .into_iter()
            .map(|(n, v)| (n, v.into_iter().map(f64::from).collect()))
            .collect();
        Self::from_numeric_columns(columns, label, sensitive)
    }

    /// Mixed construction used by the synthetic generator.
    pub(crate) fn from_mixed<S: AsRef<str>>(
        numeric: Vec<(String, Vec<f64>)>,
        text: Vec<(String, Vec<String>)>,
        order: &[&str],
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let mut pool: BTreeMap<String, (ColumnKind, ColumnData)> = BTreeMap::new();
        for (name, values) in numeric {
            let kind = if values.iter().all(|&x| is_binary_value(x)) {
                ColumnKind::Binary
            } else {
                ColumnKind::Numeric
            };
            pool.insert(name, (kind, ColumnData::Numbers(values)));
        }
        for (name, values) in text {
            pool.insert(name, (ColumnKind::Categorical, ColumnData::Text(values)));
        }
        let mut raw = Vec::with_capacity(order.len());
        for name in order {
            let (kind, data) = pool
                .remove(*name)
                .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
            raw.push((name.to_string(), kind, data));
        }
        Self::assemble(raw, label, sensitive)
    }

    fn assemble<S: AsRef<str>>(
        raw: Vec<(String, ColumnKind, ColumnData)>,
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let sensitive: BTreeSet<String> = sensitive.iter().map(|s| s.as_ref().to_string()).collect();
        let rows = raw.first().map(|c| c.2.len()).unwrap_or(0);
        let mut seen = BTreeSet::new();
        let mut columns = Vec::with_capacity(raw.len());
        let mut data = Vec::with_capacity(raw.len());
        for (name, kind, values) in raw {
            if !seen.insert(name.clone()) {
                return Err(TableError::DuplicateColumn(name));
            }
            if values.len() != rows {
                return Err(TableError::LengthMismatch {
                    column: name,
                    found: values.len(),
                    expected: rows,
                });
            }
            columns.push(ColumnSpec {
                role: role_for(&name, label, &sensitive),
                name,
                kind,
            });
            data.push(values);
        }
        for s in &sensitive {
            if !seen.contains(s) {
                return Err(TableError::UnknownColumn(s.clone()));
            }
        }
        let table = Table {
            columns,
            data,
            rows,
            cuts: BTreeMap::new(),
        };
        table.check_label(label)?;
        Ok(table)
    }

    fn check_label(&self, label: &str) -> Result<(), TableError> {
        let idx = self
            .column_index(label)
            .ok_or_else(|| TableError::MissingLabel(label.to_string()))?;
        match &self.data[idx] {
            ColumnData::Numbers(values) => {
                if let Some(bad) = values.iter().find(|&&x| !is_binary_value(x)) {
                    return Err(TableError::NonBinaryLabel {
                        column: label.to_string(),
                        value: format_number(*bad),
                    });
                }
            }
            ColumnData::Text(values) => {
                return Err(TableError::NonBinaryLabel {
                    column: label.to_string(),
                    value: values.first().cloned().unwrap_or_default(),
                });
            }
        }
        Ok(())
    }

    pub fn load_csv<S: AsRef<str>>(
        path: impl AsRef<Path>,
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, label, sensitive)
    }

    pub fn read_csv<R: Read, S: AsRef<str>>(
        reader: R,
        label: &str,
        sensitive: &[S],
    ) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(rec) => rec?,
            None => return Err(TableError::MissingHeader),
        };
        let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
        if !names.iter().any(|n| n == label) {
            return Err(TableError::MissingLabel(label.to_string()));
        }
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(TableError::NonRectangular {
                    row: i + 1,
                    found: rec.len(),
                    expected: names.len(),
                });
            }
            for (col, field) in raw.iter_mut().zip(rec.iter()) {
                col.push(field.to_string());
            }
        }
        let columns = names
            .into_iter()
            .zip(raw)
            .map(|(name, values)| {
                let (kind, data) = infer_column(&name, values);
                (name, kind, data)
            })
            .collect();
        Self::assemble(columns, label, sensitive)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for r in 0..self.rows {
            record.clear();
            for col in &self.data {
                record.push(match col {
                    ColumnData::Numbers(v) => format_number(v[r]),
                    ColumnData::Text(v) => v[r].clone(),
                });
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), TableError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.role == Role::Label)
            .expect("table invariant: exactly one label column")
    }

    pub fn label_name(&self) -> &str {
        &self.columns[self.label_index()].name
    }

    pub fn sensitive_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role == Role::SensitiveFeature)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Feature columns, i.e. every column but the label, in table order.
    pub fn feature_indices(&self) -> Vec<usize> {
        let label = self.label_index();
        (0..self.columns.len()).filter(|&i| i != label).collect()
    }

    /// Numeric view of column `idx`.
    pub fn values_at(&self, idx: usize) -> Result<&[f64], TableError> {
        match &self.data[idx] {
            ColumnData::Numbers(v) => Ok(v),
            ColumnData::Text(_) => Err(TableError::NotNumeric(self.columns[idx].name.clone())),
        }
    }

    pub fn values(&self, name: &str) -> Result<&[f64], TableError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
        self.values_at(idx)
    }

    pub fn text_values(&self, name: &str) -> Result<Vec<String>, TableError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
        Ok(match &self.data[idx] {
            ColumnData::Numbers(v) => v.iter().map(|&x| format_number(x)).collect(),
            ColumnData::Text(v) => v.clone(),
        })
    }

    pub fn label_values(&self) -> &[f64] {
        self.values_at(self.label_index())
            .expect("label column is binary")
    }

    pub fn is_all_binary(&self) -> bool {
        self.columns.iter().all(|c| c.kind == ColumnKind::Binary)
    }

    /// Binarization rules that produced this table, keyed by column.
    pub fn cuts(&self) -> &BTreeMap<String, CutRule> {
        &self.cuts
    }

    /// Human readable description of the cut for `column`, e.g. `Age: above 42 ⇒ 1`.
    pub fn cut_description(&self, column: &str) -> Option<String> {
        self.cuts.get(column).map(|rule| format!("{column}: {rule} ⇒ 1"))
    }

    /// Returns a copy with the numeric column `idx` replaced.
    pub fn with_column(&self, idx: usize, values: Vec<f64>) -> Result<Table, TableError> {
        if values.len() != self.rows {
            return Err(TableError::LengthMismatch {
                column: self.columns[idx].name.clone(),
                found: values.len(),
                expected: self.rows,
            });
        }
        let mut out = self.clone();
        let binary = values.iter().all(|&x| is_binary_value(x));
        out.columns[idx].kind = if binary {
            ColumnKind::Binary
        } else {
            ColumnKind::Numeric
        };
        out.data[idx] = ColumnData::Numbers(values);
        if out.columns[idx].role == Role::Label {
            out.check_label(&out.columns[idx].name.clone())?;
        }
        Ok(out)
    }

    /// Same data with a different label column and sensitive set.
    pub fn with_roles<S: AsRef<str>>(&self, label: &str, sensitive: &[S]) -> Result<Table, TableError> {
        let raw = self
            .columns
            .iter()
            .zip(&self.data)
            .map(|(c, d)| (c.name.clone(), c.kind, d.clone()))
            .collect();
        let mut out = Self::assemble(raw, label, sensitive)?;
        out.cuts = self.cuts.clone();
        Ok(out)
    }

    /// Maps every non-binary column onto {0, 1}. Binary columns pass through
    /// unless a rule is given for them.
    pub fn binarize(&self, cuts: &BTreeMap<String, CutRule>) -> Result<Table, TableError> {
        for name in cuts.keys() {
            if self.column_index(name).is_none() {
                return Err(TableError::UnknownColumn(name.clone()));
            }
        }
        let mut out = self.clone();
        for (idx, spec) in self.columns.iter().enumerate() {
            let rule = cuts.get(&spec.name);
            let values = match (&self.data[idx], rule) {
                (_, None) if spec.kind == ColumnKind::Binary => continue,
                (_, None) => return Err(TableError::MissingCut(spec.name.clone())),
                (ColumnData::Numbers(v), Some(CutRule::Above(t))) => v
                    .iter()
                    .map(|&x| if x > *t { 1.0 } else { 0.0 })
                    .collect::<Vec<f64>>(),
                (ColumnData::Text(v), Some(CutRule::OneOf(set))) => v
                    .iter()
                    .map(|x| if set.contains(x) { 1.0 } else { 0.0 })
                    .collect(),
                (_, Some(rule)) => {
                    return Err(TableError::IncompatibleCut {
                        column: spec.name.clone(),
                        kind: spec.kind,
                        rule: rule.clone(),
                    })
                }
            };
            out.columns[idx].kind = ColumnKind::Binary;
            out.data[idx] = ColumnData::Numbers(values);
            out.cuts.insert(spec.name.clone(), rule.cloned().expect("rule present"));
        }
        Ok(out)
    }
}
