//! CSV and JSON writers. Both embed the artifact version and the resolved
//! configuration.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tabular result with a summary block.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub summary: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Report {
            summary: Map::new(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: T) -> CliResult<()> {
        self.summary.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Serializes `report` in the configured format.
pub fn render(report: &Report, cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|r| Value::Object(report.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect();
            let doc = json!({
                "artifact": "wba-lab",
                "version": VERSION,
                "config": cfg,
                "summary": report.summary,
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            out.push(b'\n');
        }
        Format::Csv => {
            writeln!(out, "# wba-lab {VERSION}")?;
            writeln!(out, "# config: {}", serde_json::to_string(cfg)?)?;
            writeln!(out, "# summary: {}", serde_json::to_string(&report.summary)?)?;
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(&mut out);
            w.write_record(&report.columns)?;
            for r in &report.rows {
                w.write_record(r.iter().map(cell))?;
            }
            w.flush()?;
        }
    }
    Ok(out)
}

/// Writes the rendered report to the configured path or standard output.
pub fn emit(report: &Report, cfg: &RunConfig) -> CliResult<()> {
    let bytes = render(report, cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}
