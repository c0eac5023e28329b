//! Artifacts and run manifests.
//!
//! Artifacts hold no timestamps or paths, so reruns with the same manifest
//! produce identical bytes. Numbers are written in shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => Value::from(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            // serde_json prints the shortest representation that parses back
            Cell::Num(v) => serde_json::to_string(v).expect("finite number"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub description: String,
}

pub fn col(name: &str, unit: &str, description: &str) -> Column {
    Column {
        name: name.into(),
        unit: unit.into(),
        description: description.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub schema_version: u32,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, schema_version: u32, columns: Vec<Column>) -> Self {
        Self {
            name: name.into(),
            schema_version,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        if let Some(bad) = row.iter().find(|c| matches!(c, Cell::Num(v) if !v.is_finite())) {
            panic!("non-finite value {bad:?} in table {}", self.name);
        }
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let to_err = |e: csv::Error| CliError::Config(format!("writing {}: {e}", self.name));
                w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(to_err)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv)).map_err(to_err)?;
                }
                Ok(w.into_inner().expect("in-memory writer"))
            }
            Format::Json => {
                let doc = serde_json::json!({
                    "schema_version": self.schema_version,
                    "columns": self.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
                    "rows": self.rows.iter()
                        .map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                });
                let mut out = serde_json::to_vec_pretty(&doc).expect("json");
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

/// A nested JSON document, written as JSON whatever the table format.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub schema_version: u32,
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Table(Table),
    Report(Report),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub kind: String,
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<Column>,
}

/// An input file the run depended on, with its content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEntry {
    /// As written in the config (relative to `base_dir`).
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub shots: u64,
    pub tool_version: String,
    pub timestamp: String,
    pub format: Format,
    /// Directory relative input paths were resolved against.
    pub base_dir: String,
    pub inputs: Vec<InputEntry>,
    pub artifacts: Vec<ArtifactEntry>,
    /// The canonical config the run used.
    pub config: String,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes the artifacts into `out` and returns their paths and manifest entries.
pub fn write_artifacts(out: &Path, artifacts: &[Artifact], format: Format) -> Result<(Vec<PathBuf>, Vec<ArtifactEntry>)> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut paths = Vec::new();
    let mut entries = Vec::new();
    for a in artifacts {
        let (file, bytes, entry) = match a {
            Artifact::Table(t) => {
                let ext = match format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let file = format!("{}.{ext}", t.name);
                let entry = ArtifactEntry {
                    file: file.clone(),
                    kind: "table".into(),
                    schema_version: t.schema_version,
                    columns: t.columns.clone(),
                };
                (file, t.render(format)?, entry)
            }
            Artifact::Report(r) => {
                let file = format!("{}.json", r.name);
                let mut bytes = serde_json::to_vec_pretty(&r.body).expect("json");
                bytes.push(b'\n');
                let entry = ArtifactEntry {
                    file: file.clone(),
                    kind: "report".into(),
                    schema_version: r.schema_version,
                    columns: Vec::new(),
                };
                (file, bytes, entry)
            }
        };
        let path = out.join(&file);
        write(&path, &bytes)?;
        paths.push(path);
        entries.push(entry);
    }
    Ok((paths, entries))
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = out.join(RunManifest::file_name(&manifest.command));
    let mut bytes = serde_json::to_vec_pretty(manifest).expect("json");
    bytes.push(b'\n');
    write(&path, &bytes)?;
    Ok(path)
}
