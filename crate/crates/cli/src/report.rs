//! Report bundles: CSV tables written as they are produced, SVG plots, and a
//! JSON manifest naming the operation behind every column.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    /// Operation that produced the values.
    pub op: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns
                .iter()
                .map(|&(name, op)| Column {
                    name: name.into(),
                    op: op.into(),
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, op: impl Into<String>) {
        self.columns.push(Column {
            name: name.into(),
            op: op.into(),
        });
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Numeric column by name, NaN where a cell is not a number.
    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Num(v) => v,
                    Cell::Int(v) => v as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableEntry {
    pub file: String,
    pub rows: usize,
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    pub backend: &'static str,
    pub grid_budget_bytes: String,
    /// Canonical TOML of the effective configuration.
    pub config: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
    pub tables: Vec<TableEntry>,
    pub plots: Vec<String>,
    pub summary: Vec<String>,
}

/// Output directory being filled by one run. Tables hit the disk as soon as
/// they are added so a failed run keeps what it produced.
pub struct Bundle {
    dir: PathBuf,
    pub tables: Vec<TableEntry>,
    pub plots: Vec<String>,
    pub summary: Vec<String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            tables: Vec::new(),
            plots: Vec::new(),
            summary: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
    }

    pub fn add_table(&mut self, table: &Table) -> CliResult<()> {
        let file = table.file_name();
        self.write(&file, &table.to_csv())?;
        self.tables.push(TableEntry {
            file,
            rows: table.rows.len(),
            columns: table.columns.clone(),
        });
        Ok(())
    }

    pub fn add_plot(&mut self, name: &str, svg: &str) -> CliResult<()> {
        let file = format!("{name}.svg");
        self.write(&file, svg.as_bytes())?;
        self.plots.push(file);
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> CliResult<()> {
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        self.write("manifest.json", text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [1.4, 1.75, 0.35, 1e-300, -2.5e20, 1.0 / 3.0, 123456.789, 5e-5, 0.1 + 0.2] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_number(1.4), "1.4");
        assert_eq!(format_number(3.0), "3");
        assert_eq!(format_number(0.0), "0");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new("x", &[("n", "op_a"), ("v", "op_b")]);
        t.push(vec![3usize.into(), 1.4.into()]);
        t.push(vec![Cell::Empty, "a,b".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "n,v\n3,1.4\n,\"a,b\"\n");
    }
}
