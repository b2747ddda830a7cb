//! CSV ingestion. Comma separated, header row, UTF-8, '.' decimals.
//! Rows keep their file order.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// Selected columns of an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n x m`.
    pub v: DMatrix<f64>,
    /// `n x k`.
    pub z: DMatrix<f64>,
    /// Cluster index per row, numbered by first appearance.
    pub clusters: Option<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.v.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> CliResult<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::Data(format!("column '{name}' not found in header")))
}

/// Reads the named columns from CSV bytes.
pub fn parse_dataset(bytes: &[u8], v_cols: &[String], z_cols: &[String], cluster: Option<&str>) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers().map_err(|e| CliError::Data(format!("header: {e}")))?.clone();
    let vi: Vec<usize> = v_cols.iter().map(|c| column_index(&headers, c)).collect::<CliResult<_>>()?;
    let zi: Vec<usize> = z_cols.iter().map(|c| column_index(&headers, c)).collect::<CliResult<_>>()?;
    let ci = cluster.map(|c| column_index(&headers, c)).transpose()?;

    let mut v_vals = Vec::new();
    let mut z_vals = Vec::new();
    let mut labels = std::collections::HashMap::new();
    let mut clusters = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |col: usize| -> CliResult<f64> {
            let text = record.get(col).unwrap_or("").trim();
            let x: f64 = text
                .parse()
                .map_err(|_| CliError::Data(format!("line {line}: column '{}': cannot parse '{text}'", &headers[col])))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::Data(format!("line {line}: column '{}': non-finite value", &headers[col])))
            }
        };
        for &c in &vi {
            v_vals.push(number(c)?);
        }
        for &c in &zi {
            z_vals.push(number(c)?);
        }
        if let Some(c) = ci {
            let label = record.get(c).unwrap_or("").trim().to_string();
            if label.is_empty() {
                return Err(CliError::Data(format!("line {line}: empty cluster label")));
            }
            let next = labels.len();
            clusters.push(*labels.entry(label).or_insert(next));
        }
    }
    let n = v_vals.len() / vi.len().max(1);
    Ok(Dataset {
        v: DMatrix::from_row_slice(n, vi.len(), &v_vals),
        z: DMatrix::from_row_slice(n, zi.len(), &z_vals),
        clusters: ci.map(|_| clusters),
    })
}

pub fn read_dataset(path: &Path, v_cols: &[String], z_cols: &[String], cluster: Option<&str>) -> CliResult<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_dataset(&bytes, v_cols, z_cols, cluster)
}
