use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// One output cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    F(f64),
    I(usize),
    B(bool),
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Cell::F(v) if v.is_nan() => "NaN".into(),
            Cell::F(v) => format!("{v:.16e}"),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => u8::from(v).to_string(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(_) => Value::Null,
            Cell::I(v) => json!(v),
            Cell::B(v) => json!(v),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct Writer<'a> {
    dir: &'a Path,
    config: &'a RunConfig,
}

impl<'a> Writer<'a> {
    pub fn new(dir: &'a Path, config: &'a RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir, config })
    }

    fn sidecar(&self, stem: &str) -> Result<(), CliError> {
        let path = self.dir.join(format!("{stem}.meta.json"));
        let text = serde_json::to_string_pretty(self.config)? + "\n";
        fs::write(&path, text).map_err(io_err(&path))
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json` plus its sidecar.
    pub fn table(&self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.{}", self.config.format.extension()));
        match self.config.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&table.columns)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(|c| c.csv()))?;
                }
                w.flush().map_err(io_err(&path))?;
            }
            Format::Json => {
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(|c| c.json()).collect()))
                    .collect();
                let doc = json!({ "columns": table.columns, "rows": rows });
                fs::write(&path, serde_json::to_string(&doc)? + "\n").map_err(io_err(&path))?;
            }
        }
        self.sidecar(stem)?;
        Ok(path)
    }

    /// Writes a JSON document regardless of the table format.
    pub fn json(&self, stem: &str, doc: &Value) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(doc)? + "\n").map_err(io_err(&path))?;
        self.sidecar(stem)?;
        Ok(path)
    }
}

/// Finite floats as numbers, everything else as null.
pub fn num(v: f64) -> Value {
    Cell::F(v).json()
}
