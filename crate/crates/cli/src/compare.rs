//! Column-wise comparison of two run directories.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDiff {
    pub file: String,
    pub column: String,
    /// max |a − b| for numeric columns (NaN if only one side is NaN);
    /// 1 if any text cell differs
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompareReport {
    pub columns: Vec<ColumnDiff>,
}

impl CompareReport {
    pub fn get(&self, file: &str, column: &str) -> Option<f64> {
        self.columns
            .iter()
            .find(|c| c.file == file && c.column == column)
            .map(|c| c.max_abs_diff)
    }

    pub fn identical(&self) -> bool {
        self.columns.iter().all(|c| c.max_abs_diff == 0.0)
    }
}

fn csv_files(dir: &Path) -> Result<BTreeSet<String>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut out = BTreeSet::new();
    for e in entries {
        let name = e?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            out.insert(name);
        }
    }
    Ok(out)
}

fn read_cells(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

/// Compares every CSV present in both directories. The directories must
/// hold the same CSV files with identical headers and row counts.
pub fn compare(a: &Path, b: &Path) -> Result<CompareReport, CliError> {
    let fa = csv_files(a)?;
    let fb = csv_files(b)?;
    if fa != fb {
        return Err(CliError::Schema(format!("CSV files differ: {fa:?} vs {fb:?}")));
    }
    if fa.is_empty() {
        return Err(CliError::Schema(format!("no CSV files in {}", a.display())));
    }
    let mut columns = Vec::new();
    for file in &fa {
        let (ha, ra) = read_cells(&a.join(file))?;
        let (hb, rb) = read_cells(&b.join(file))?;
        if ha != hb {
            return Err(CliError::Schema(format!("{file}: headers differ: {ha:?} vs {hb:?}")));
        }
        if ra.len() != rb.len() {
            return Err(CliError::Schema(format!("{file}: {} rows vs {}", ra.len(), rb.len())));
        }
        for (k, name) in ha.iter().enumerate() {
            let mut diff = 0.0f64;
            for (x, y) in ra.iter().zip(&rb) {
                let d = match (x[k].parse::<f64>(), y[k].parse::<f64>()) {
                    (Ok(u), Ok(v)) if u == v || (u.is_nan() && v.is_nan()) => 0.0,
                    (Ok(u), Ok(v)) => (u - v).abs(),
                    _ if x[k] == y[k] => 0.0,
                    _ => 1.0,
                };
                if d.is_nan() || diff.is_nan() {
                    diff = f64::NAN;
                } else {
                    diff = diff.max(d);
                }
            }
            columns.push(ColumnDiff {
                file: file.clone(),
                column: name.clone(),
                max_abs_diff: diff,
            });
        }
    }
    Ok(CompareReport { columns })
}
