//! Plain-text CSV I/O: matrices are row-major with no header; datasets are
//! one sample per row, features first, a trailing integer label last.

use std::path::Path;

use ndarray::Array2;

use crate::ceml::Dataset;
use crate::error::{Error, Result};

fn parse_rows(text: &str, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "{what}: cannot parse {:?} at line {}, column {}",
                    field.trim(),
                    lineno + 1,
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{what}: non-finite value at line {}, column {}",
                    lineno + 1,
                    col + 1
                )));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidInput(format!(
                    "{what}: line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: no data rows")));
    }
    Ok(rows)
}

fn rows_to_array(rows: Vec<Vec<f64>>) -> Array2<f64> {
    let (r, c) = (rows.len(), rows[0].len());
    let mut out = Array2::zeros((r, c));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    out
}

/// Reads a dense matrix from headerless CSV.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)?;
    Ok(rows_to_array(parse_rows(&text, &path.display().to_string())?))
}

/// Writes a dense matrix as headerless CSV with 17 significant digits.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[[i, j]])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset: every row is features followed by one integer label.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_rows(&text, &path.display().to_string())?;
    let width = rows[0].len();
    if width < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: dataset rows need at least one feature and a label",
            path.display()
        )));
    }
    let mut features = Array2::zeros((rows.len(), width - 1));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let raw = row[width - 1];
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-9 || rounded < 0.0 {
            return Err(Error::InvalidInput(format!(
                "{}: label at line {} must be a nonnegative integer, got {raw}",
                path.display(),
                i + 1
            )));
        }
        labels.push(rounded as usize);
        for j in 0..width - 1 {
            features[[i, j]] = row[j];
        }
    }
    Dataset::new(features, labels)
}

/// Writes a dataset in the same layout `read_dataset_csv` expects.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    for i in 0..data.n() {
        for j in 0..data.dim() {
            out.push_str(&format!("{:.16e},", data.features()[[i, j]]));
        }
        out.push_str(&format!("{}\n", data.labels()[i]));
    }
    std::fs::write(path, out)?;
    Ok(())
}
