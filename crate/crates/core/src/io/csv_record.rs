use std::path::Path;

use super::Record;
use crate::error::{Error, Result};

/// Reads a single-channel record from a CSV file of `index,value` or
/// `value` lines. A non-numeric first line is treated as a header row.
pub fn load_csv(path: &Path, sampling_rate_hz: f64) -> Result<Record> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, sampling_rate_hz)
}

pub fn parse_csv(text: &str, sampling_rate_hz: f64) -> Result<Record> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut samples = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(n as u64 + 1, |p| p.line());
        let field = match row.len() {
            1 => &row[0],
            2 => &row[1],
            k => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 1 or 2 fields, found {k}"),
                })
            }
        };
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite sample {v}"),
                })
            }
            Err(_) if n == 0 && looks_like_header(&row) => continue,
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("CSV file contains no samples".into()));
    }
    Record::single(sampling_rate_hz, "csv", samples)
}

fn looks_like_header(row: &csv::StringRecord) -> bool {
    row.iter()
        .all(|f| !f.is_empty() && f.parse::<f64>().is_err())
}
