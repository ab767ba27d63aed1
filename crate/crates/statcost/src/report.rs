//! Experiment reports: newline-delimited JSON records, a plain-text summary
//! table and optional `(x, y, series)` plot data.
//!
//! Record order is fixed: one `header` (carrying the resolved spec and the
//! artifact version), then `precheck` records, one `cell` record per grid
//! cell in grid order, `aggregate` records and a closing `summary`. Nothing
//! time- or machine-dependent is written, so re-running the embedded spec
//! reproduces the report byte for byte.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::experiments::ExperimentSpec;

pub const REPORT_FORMAT: &str = "statcost-report/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub coords: Value,
    pub seed: u64,
    pub outcome: Result<Value, String>,
}

impl CellRecord {
    pub fn new<T: Serialize>(coords: Value, seed: u64, result: CliResult<T>) -> Self {
        let outcome = result
            .and_then(|v| serde_json::to_value(v).map_err(CliError::from))
            .map_err(|e| e.to_string());
        CellRecord { coords, seed, outcome }
    }

    pub fn values(&self) -> Option<&Value> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = (0..cols)
                .map(|c| {
                    let cell = row.get(c).map(String::as_str).unwrap_or("");
                    format!("{cell:>w$}", w = width[c])
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

/// Everything an experiment kind produces, before framing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KindOutput {
    pub prechecks: Vec<Value>,
    pub cells: Vec<CellRecord>,
    pub aggregates: Vec<Value>,
    pub table: Table,
    pub plot: Vec<PlotPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub output: KindOutput,
}

fn tagged(kind: &str, value: &Value) -> Value {
    let mut v = value.clone();
    if let Value::Object(map) = &mut v {
        map.insert("record".into(), Value::String(kind.into()));
        v
    } else {
        json!({ "record": kind, "value": v })
    }
}

impl Report {
    pub fn failed_cells(&self) -> usize {
        self.output.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn cells(&self) -> &[CellRecord] {
        &self.output.cells
    }

    pub fn aggregates(&self) -> &[Value] {
        &self.output.aggregates
    }

    /// The aggregate record whose `aggregate` field equals `name`.
    pub fn aggregate(&self, name: &str) -> Option<&Value> {
        self.output.aggregates.iter().find(|a| a["aggregate"] == name)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        let header = json!({
            "record": "header",
            "format": REPORT_FORMAT,
            "version": VERSION,
            "spec": serde_json::to_value(&self.spec).expect("spec serializes"),
        });
        let _ = writeln!(out, "{header}");
        for p in &self.output.prechecks {
            let _ = writeln!(out, "{}", tagged("precheck", p));
        }
        for (index, c) in self.output.cells.iter().enumerate() {
            let mut rec = json!({
                "record": "cell",
                "index": index,
                "coords": c.coords,
                "seed": c.seed,
            });
            match &c.outcome {
                Ok(v) => {
                    rec["status"] = json!("ok");
                    rec["values"] = v.clone();
                }
                Err(e) => {
                    rec["status"] = json!("error");
                    rec["error"] = json!(e);
                }
            }
            let _ = writeln!(out, "{rec}");
        }
        for a in &self.output.aggregates {
            let _ = writeln!(out, "{}", tagged("aggregate", a));
        }
        let failed = self.failed_cells();
        let summary = json!({
            "record": "summary",
            "cells": self.output.cells.len(),
            "failed": failed,
            "status": if failed == 0 { "ok" } else { "errors" },
        });
        let _ = writeln!(out, "{summary}");
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = format!(
            "{} ({}): {} cells, {} failed\n",
            self.spec.name,
            self.spec.experiment.kind_name(),
            self.output.cells.len(),
            self.failed_cells()
        );
        out.push_str(&self.output.table.render());
        out
    }

    pub fn plot_tsv(&self) -> String {
        let mut out = String::from("x\ty\tseries\n");
        for p in &self.output.plot {
            let _ = writeln!(out, "{}\t{}\t{}", p.x, p.y, p.series);
        }
        out
    }
}

/// The resolved spec embedded in a report's header line.
pub fn embedded_spec(ndjson: &str) -> CliResult<ExperimentSpec> {
    let first = ndjson
        .lines()
        .next()
        .ok_or_else(|| CliError::Spec("empty report".into()))?;
    let header: Value = serde_json::from_str(first)?;
    if header["record"] != "header" {
        return Err(CliError::Spec("first report line is not a header record".into()));
    }
    Ok(serde_json::from_value(header["spec"].clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns_right() {
        let mut t = Table::new(["m", "rate"]);
        t.push(vec!["64".into(), "0.25".into()]);
        t.push(vec!["4096".into(), "0.01".into()]);
        assert_eq!(t.render(), "   m  rate\n  64  0.25\n4096  0.01\n");
    }
}
