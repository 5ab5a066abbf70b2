//! CSV, JSON and plot-data writers.
//!
//! Floats are written as `{:.16e}` so that a read-back reproduces them
//! bit for bit; missing values are empty cells (CSV) or `null` (JSON).

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::LabError;
use crate::sweep::{ResultRow, RunResult};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn header(run: &RunResult) -> Vec<String> {
    let mut h = vec!["point".to_owned()];
    h.extend(run.param_names.iter().cloned());
    h.extend(run.value_names.iter().map(|s| s.to_string()));
    h.extend(["dt", "steps", "nonconverged", "error"].map(String::from));
    h
}

pub fn render_csv(run: &RunResult) -> Result<String, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(run))?;
    for row in &run.rows {
        let mut rec = vec![row.point.to_string()];
        rec.extend(row.params.iter().map(|v| num(*v)));
        rec.extend(row.values.iter().map(|v| opt(*v)));
        rec.push(opt(row.dt));
        rec.push(row.steps.map(|s| s.to_string()).unwrap_or_default());
        rec.push(row.nonconverged.to_string());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(rec)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
}

/// Long-format plot data: one line per `(point, quantity, x)`.
pub fn render_plot_csv(run: &RunResult) -> Result<String, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut h = vec!["point".to_owned()];
    h.extend(run.param_names.iter().cloned());
    h.extend(["quantity", "x", "value"].map(String::from));
    w.write_record(h)?;
    for (point, s) in &run.series {
        let mut rec = vec![point.to_string()];
        rec.extend(run.rows[*point].params.iter().map(|v| num(*v)));
        rec.extend([s.quantity.to_owned(), num(s.x), num(s.y)]);
        w.write_record(rec)?;
    }
    // scans: each value column against the first swept parameter
    if let Some(first) = run.param_names.first() {
        for row in run.rows.iter().filter(|r| r.error.is_none()) {
            for (name, v) in run.value_names.iter().zip(&row.values) {
                if let Some(v) = v {
                    let mut rec = vec![row.point.to_string()];
                    rec.extend(row.params.iter().map(|p| num(*p)));
                    rec.extend([format!("{name}_vs_{first}"), num(row.params[0]), num(*v)]);
                    w.write_record(rec)?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn render_json(run: &RunResult) -> Result<String, LabError> {
    let rows: Vec<Value> = run
        .rows
        .iter()
        .map(|r| {
            let params: Map<String, Value> = run
                .param_names
                .iter()
                .cloned()
                .zip(r.params.iter().map(|v| finite(*v)))
                .collect();
            let values: Map<String, Value> = run
                .value_names
                .iter()
                .map(|s| s.to_string())
                .zip(r.values.iter().map(|v| v.map(finite).unwrap_or(Value::Null)))
                .collect();
            json!({
                "point": r.point,
                "params": params,
                "values": values,
                "dt": r.dt.map(finite),
                "steps": r.steps,
                "nonconverged": r.nonconverged,
                "error": r.error,
            })
        })
        .collect();
    let checks: Vec<Value> = run
        .checks
        .iter()
        .map(|c| json!({"name": c.name, "point": c.point, "passed": c.passed, "detail": c.detail}))
        .collect();
    let doc = json!({
        "scenario": run.kind.name(),
        "rows": rows,
        "checks": checks,
        "passed": run.failed_checks() == 0 && run.numerical_failures() == 0,
        "warnings": run.warnings,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| LabError::Io(e.to_string()))
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn write_all(run: &RunResult, dir: &Path, formats: &[Format], plot_data: bool) -> Result<Vec<PathBuf>, LabError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let stem = run.kind.name();
    for f in formats {
        let (path, body) = match f {
            Format::Csv => (dir.join(format!("{stem}.csv")), render_csv(run)?),
            Format::Json => (dir.join(format!("{stem}.json")), render_json(run)?),
        };
        std::fs::write(&path, body)?;
        written.push(path);
    }
    if plot_data {
        let path = dir.join(format!("{stem}_plot.csv"));
        std::fs::write(&path, render_plot_csv(run)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Parses a results CSV written by [`render_csv`] back into rows, given the
/// number of swept parameters.
pub fn read_csv(text: &str, param_count: usize) -> Result<Vec<ResultRow>, LabError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let width = r.headers()?.len();
    let value_count = width
        .checked_sub(param_count + 5)
        .ok_or_else(|| LabError::Io(format!("results CSV has only {width} columns")))?;
    let bad = |s: &str| LabError::Io(format!("unparsable cell {s:?}"));
    let float = |s: &str| -> Result<Option<f64>, LabError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(s))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let mut params = Vec::with_capacity(param_count);
        for i in 1..=param_count {
            params.push(float(cell(i))?.ok_or_else(|| bad(""))?);
        }
        let mut values = Vec::with_capacity(value_count);
        for i in 0..value_count {
            values.push(float(cell(1 + param_count + i))?);
        }
        let tail = 1 + param_count + value_count;
        let steps = cell(tail + 1);
        rows.push(ResultRow {
            point: cell(0).parse().map_err(|_| bad(cell(0)))?,
            params,
            values,
            dt: float(cell(tail))?,
            steps: if steps.is_empty() {
                None
            } else {
                Some(steps.parse().map_err(|_| bad(steps))?)
            },
            nonconverged: cell(tail + 2).parse().map_err(|_| bad(cell(tail + 2)))?,
            error: Some(cell(tail + 3).to_owned()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}
