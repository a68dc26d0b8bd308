//! Result tables: typed columns, CSV body and a JSON metadata sidecar.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnFormat {
    /// Separations, 4 decimals.
    Epsilon,
    /// Decibels, 2 decimals.
    Decibel,
    /// Probabilities and frequencies, 10 significant digits.
    Probability,
    /// Shortest round-trip representation.
    Float,
    Integer,
    Text,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub format: ColumnFormat,
}

impl Column {
    pub fn new(name: impl Into<String>, format: ColumnFormat) -> Self {
        Self { name: name.into(), format }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    /// The fully resolved configuration; feeding it back regenerates the table.
    pub config: RunConfig,
    pub inputs: Vec<InputFile>,
    pub columns: Vec<Column>,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

impl TableMeta {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
            inputs: Vec::new(),
            columns: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).expect("summary serializes"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
    }
}

/// `out.csv` → `out.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: TableMeta,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>, mut meta: TableMeta) -> Self {
        meta.columns = columns.clone();
        Self { columns, rows: Vec::new(), meta }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric column values (`NaN` for non-numeric cells).
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(v) => *v,
                    Cell::Int(v) => *v as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().zip(&self.columns).map(|(cell, col)| format_cell(cell, col.format)))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Writes the CSV to `path` and the metadata next to it.
    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        std::fs::write(path, self.to_csv()).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.meta.write(&sidecar_path(path))
    }
}

pub fn format_cell(cell: &Cell, format: ColumnFormat) -> String {
    match cell {
        Cell::Num(v) => format_number(*v, format),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Flag(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn format_number(v: f64, format: ColumnFormat) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    match format {
        ColumnFormat::Epsilon => format!("{v:.4}"),
        ColumnFormat::Decibel => format!("{v:.2}"),
        ColumnFormat::Probability => significant(v, 10),
        _ => shortest(v),
    }
}

fn significant(v: f64, digits: i32) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..10).contains(&mag) {
        format!("{:.*}", (digits - 1 - mag).max(0) as usize, v)
    } else {
        format!("{:.*e}", (digits - 1) as usize, v)
    }
}

fn shortest(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
