//! Bucketed learning-curve summaries read back from experiment CSVs.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "episode,length,return,success,baseline";

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CsvRow {
    pub episode: usize,
    pub length: usize,
    #[serde(rename = "return")]
    pub total_return: f64,
    pub success: u8,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    pub first_episode: usize,
    pub count: usize,
    pub mean_length: f64,
    /// Population variance.
    pub variance_length: f64,
}

pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header `{CSV_HEADER}`") });
    }
    let mut rows = Vec::new();
    for result in reader.deserialize::<CsvRow>() {
        let row = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, msg: e.to_string() }
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn bucket_lengths(lengths: &[(usize, usize)], bucket: usize) -> Result<Vec<Bucket>> {
    if bucket == 0 {
        return Err(Error::config("bucket size must be positive"));
    }
    Ok(lengths
        .chunks(bucket)
        .map(|chunk| {
            let values: Vec<f64> = chunk.iter().map(|&(_, l)| l as f64).collect();
            let (mean_length, variance_length) = mean_and_variance(&values);
            Bucket { first_episode: chunk[0].0, count: chunk.len(), mean_length, variance_length }
        })
        .collect())
}

/// Per-bucket mean and variance of episode length.
pub fn summarize(path: &Path, bucket: usize) -> Result<Vec<Bucket>> {
    let rows = read_rows(path)?;
    let lengths: Vec<(usize, usize)> = rows.iter().map(|r| (r.episode, r.length)).collect();
    bucket_lengths(&lengths, bucket)
}
