//! CSV and JSON artifacts. Numbers are written with 17 significant digits
//! and LF line endings.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use fracorbit::forward::{TraceMeta, TraceSet};
use fracorbit::fracops::{SampledFunction, TimeGrid};

use crate::error::CliError;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(w)
}

/// Writes a header row and numeric rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Io(format!("{}: row {}: bad number `{s}`", path.display(), line + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Column name of the trace at `x`: `u(0.15)`, `u(0.1;-0.2)` for d > 1.
pub fn trace_column(x: &[f64]) -> String {
    let coords: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("u({})", coords.join(";"))
}

fn parse_trace_column(name: &str) -> Option<Vec<f64>> {
    let inner = name.strip_prefix("u(")?.strip_suffix(')')?;
    inner.split(';').map(|s| s.trim().parse().ok()).collect()
}

pub fn write_traces(path: &Path, data: &TraceSet<f64>) -> Result<(), CliError> {
    let mut header = vec!["t".to_string()];
    header.extend(data.points.iter().map(|p| trace_column(p)));
    let grid = data.grid();
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|m| {
            let mut r = vec![grid.node(m)];
            r.extend(data.traces.iter().map(|tr| tr.at(m)));
            r
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Uniform grid from a `t` column starting at 0.
fn uniform_grid(path: &Path, t: &[f64]) -> Result<TimeGrid<f64>, CliError> {
    if t.len() < 2 || t[0] != 0.0 {
        return Err(CliError::Io(format!(
            "{}: time column must start at 0 with >= 2 rows",
            path.display()
        )));
    }
    let n = t.len() - 1;
    let grid = TimeGrid::new(t[n], n)?;
    let tol = 1e-9 * grid.dt();
    if t.iter().enumerate().any(|(m, &v)| (v - grid.node(m)).abs() > tol) {
        return Err(CliError::Io(format!("{}: time column is not uniform", path.display())));
    }
    Ok(grid)
}

/// Reads a trace CSV written by [`write_traces`].
pub fn read_traces(path: &Path) -> Result<TraceSet<f64>, CliError> {
    let table = read_table(path)?;
    if table.header.first().map(String::as_str) != Some("t") {
        return Err(CliError::Io(format!("{}: first column must be `t`", path.display())));
    }
    let t = table.column("t").unwrap_or_default();
    let grid = uniform_grid(path, &t)?;
    let mut points = Vec::new();
    let mut traces = Vec::new();
    for (k, name) in table.header.iter().enumerate().skip(1) {
        let x = parse_trace_column(name)
            .ok_or_else(|| CliError::Io(format!("{}: column `{name}` is not of the form u(x)", path.display())))?;
        points.push(x);
        traces.push(SampledFunction::new(grid, table.rows.iter().map(|r| r[k]).collect())?);
    }
    Ok(TraceSet::new(points, traces, TraceMeta::default())?)
}

/// Reads an orbit CSV with columns t, gamma_1..d.
pub fn read_orbit_csv(path: &Path) -> Result<(TimeGrid<f64>, Vec<Vec<f64>>), CliError> {
    let table = read_table(path)?;
    if table.header.first().map(String::as_str) != Some("t") || table.header.len() < 2 {
        return Err(CliError::config(
            "orbit.path",
            format!("{}: expected columns t, gamma_1..d", path.display()),
        ));
    }
    let t = table.column("t").unwrap_or_default();
    let grid = uniform_grid(path, &t)?;
    let points = table.rows.iter().map(|r| r[1..].to_vec()).collect();
    Ok((grid, points))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
