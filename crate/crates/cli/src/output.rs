//! CSV tables and the summary JSON document.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use fredet::spectra::EigenEstimate;
use fredet::Complex64;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, w: impl Write) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| io_error(path, e))?;
        fs::write(path, buf).map_err(|e| io_error(path, e))
    }
}

/// Pushes `re` and `im` as two cells.
pub fn complex(row: &mut Vec<Cell>, z: Complex64) {
    row.push(Cell::Num(z.re));
    row.push(Cell::Num(z.im));
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub command: String,
    pub config: Value,
    pub slopes: Map<String, Value>,
    pub roots: Vec<Value>,
    pub residuals: Map<String, Value>,
}

impl Summary {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            slopes: Map::new(),
            roots: Vec::new(),
            residuals: Map::new(),
        }
    }

    pub fn to_json(&self, rows: Option<&Table>) -> Value {
        let mut v = json!({
            "command": self.command,
            "config": self.config,
            "slopes": self.slopes,
            "roots": self.roots,
            "residuals": self.residuals,
        });
        if let Some(t) = rows {
            v["rows"] = t.to_json();
        }
        v
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(&self.to_json(None)).expect("summary serializes");
        fs::write(path, text + "\n").map_err(|e| io_error(path, e))
    }
}

pub fn root_json(e: &EigenEstimate) -> Value {
    json!({
        "z_root": [e.z_root.re, e.z_root.im],
        "lambda": [e.lambda.re, e.lambda.im],
        "residual": e.residual,
        "mult_estimate": e.mult_estimate,
    })
}

pub fn roots_table(roots: &[EigenEstimate]) -> Table {
    let mut t = Table::new(&["z_re", "z_im", "lambda_re", "lambda_im", "residual", "mult_estimate"]);
    for e in roots {
        let mut row = Vec::new();
        complex(&mut row, e.z_root);
        complex(&mut row, e.lambda);
        row.push(e.residual.into());
        row.push(e.mult_estimate.into());
        t.push(row);
    }
    t
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Writes the table (CSV) or the summary with the rows attached (JSON) to
/// `out`, or to standard output.
pub fn emit(table: &Table, summary: &Summary, format: Format, out: Option<&Path>) -> CliResult<()> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => table.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &summary.to_json(Some(table))).expect("summary serializes");
            buf.push(b'\n');
        }
    }
    match out {
        Some(path) => fs::write(path, buf).map_err(|e| io_error(path, e)),
        None => io::stdout().write_all(&buf).map_err(|e| CliError::Io(e.to_string())),
    }
}
