//! Tables and histograms, with CSV and JSON serialisation.

use serde::{Deserialize, Serialize};

use crate::error::{RankError, Result};

/// Rejection frequency of one method on one design cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub design: String,
    pub n: usize,
    pub delta: f64,
    pub method: String,
    pub tuning: String,
    pub rate: f64,
    /// `sqrt(rate (1 - rate) / R)`.
    pub se: f64,
    #[serde(rename = "R")]
    pub replications: usize,
}

impl RejectionRow {
    pub fn new(design: String, n: usize, delta: f64, method: String, tuning: String, hits: usize, replications: usize) -> Self {
        let rate = hits as f64 / replications as f64;
        let se = (rate * (1.0 - rate) / replications as f64).sqrt();
        Self { design, n, delta, method, tuning, rate, se, replications }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

pub const REJECTION_HEADER: [&str; 8] = ["design", "n", "delta", "method", "tuning", "rate", "se", "R"];
pub const HISTOGRAM_HEADER: [&str; 8] = ["design", "n", "delta", "estimator", "rank", "count", "percent", "R"];

/// Output format of the emitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

fn ser_err(e: impl std::fmt::Display) -> RankError {
    RankError::Serialization(e.to_string())
}

// Fields are formatted and parsed by hand: Rust's float Display is the
// shortest text that parses back to the same value, while the csv crate's
// own float parser can be off in the last place.
fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(ser_err)?;
    for row in rows {
        w.write_record(&row).map_err(ser_err)?;
    }
    w.into_inner().map_err(ser_err)
}

fn read_csv(header: &[&str], bytes: &[u8]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(bytes);
    let found: Vec<String> = r.headers().map_err(ser_err)?.iter().map(String::from).collect();
    if found != header {
        return Err(RankError::Serialization(format!("unexpected header {found:?}")));
    }
    r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(ser_err)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| RankError::Serialization(format!("line {line}: bad field {i}")))
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| RankError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl RejectionTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let rows = self.rows.iter().map(|r| {
            vec![
                r.design.clone(),
                r.n.to_string(),
                r.delta.to_string(),
                r.method.clone(),
                r.tuning.clone(),
                r.rate.to_string(),
                r.se.to_string(),
                r.replications.to_string(),
            ]
        });
        write_csv(&REJECTION_HEADER, rows)
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let rows = read_csv(&REJECTION_HEADER, bytes)?
            .iter()
            .map(|rec| {
                Ok(RejectionRow {
                    design: field(rec, 0)?,
                    n: field(rec, 1)?,
                    delta: field(rec, 2)?,
                    method: field(rec, 3)?,
                    tuning: field(rec, 4)?,
                    rate: field(rec, 5)?,
                    se: field(rec, 6)?,
                    replications: field(rec, 7)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self).map_err(ser_err)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(ser_err)
    }

    pub fn emit(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &std::path::Path, format: Format) -> Result<()> {
        write_file(path, &self.emit(format)?)
    }

    /// Row for `(method, tuning)`, if present.
    pub fn find(&self, method: &str, tuning: &str) -> Option<&RejectionRow> {
        self.rows.iter().find(|r| r.method == method && r.tuning == tuning)
    }
}

/// Distribution of an estimated rank over `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankHistogram {
    pub design: String,
    pub n: usize,
    pub delta: f64,
    pub estimator: String,
    pub counts: Vec<usize>,
    pub replications: usize,
}

impl RankHistogram {
    /// Percent of replications at each rank; sums to 100.
    pub fn percentages(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| 100.0 * c as f64 / self.replications as f64).collect()
    }

    /// Fraction of replications with estimate `rank`.
    pub fn fraction(&self, rank: usize) -> f64 {
        self.counts.get(rank).copied().unwrap_or(0) as f64 / self.replications as f64
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.percentages()
            .into_iter()
            .enumerate()
            .map(|(rank, percent)| {
                vec![
                    self.design.clone(),
                    self.n.to_string(),
                    self.delta.to_string(),
                    self.estimator.clone(),
                    rank.to_string(),
                    self.counts[rank].to_string(),
                    percent.to_string(),
                    self.replications.to_string(),
                ]
            })
            .collect()
    }
}

/// CSV with one line per (histogram, rank).
pub fn histograms_to_csv(hists: &[RankHistogram]) -> Result<Vec<u8>> {
    write_csv(&HISTOGRAM_HEADER, hists.iter().flat_map(RankHistogram::csv_rows))
}

/// Inverse of [`histograms_to_csv`]; ranks of one histogram must be
/// contiguous and start at 0.
pub fn histograms_from_csv(bytes: &[u8]) -> Result<Vec<RankHistogram>> {
    let mut out: Vec<RankHistogram> = Vec::new();
    for rec in read_csv(&HISTOGRAM_HEADER, bytes)? {
        let rank: usize = field(&rec, 4)?;
        let count: usize = field(&rec, 5)?;
        if rank == 0 {
            out.push(RankHistogram {
                design: field(&rec, 0)?,
                n: field(&rec, 1)?,
                delta: field(&rec, 2)?,
                estimator: field(&rec, 3)?,
                counts: vec![count],
                replications: field(&rec, 7)?,
            });
        } else {
            let last = out
                .last_mut()
                .filter(|h| h.counts.len() == rank)
                .ok_or_else(|| RankError::Serialization(format!("rank {rank} out of sequence")))?;
            last.counts.push(count);
        }
    }
    Ok(out)
}

pub fn histograms_to_json(hists: &[RankHistogram]) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(hists).map_err(ser_err)
}

pub fn histograms_from_json(bytes: &[u8]) -> Result<Vec<RankHistogram>> {
    serde_json::from_slice(bytes).map_err(ser_err)
}

pub fn emit_histograms(hists: &[RankHistogram], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => histograms_to_csv(hists),
        Format::Json => histograms_to_json(hists),
    }
}

pub fn write_histograms(hists: &[RankHistogram], path: &std::path::Path, format: Format) -> Result<()> {
    write_file(path, &emit_histograms(hists, format)?)
}
