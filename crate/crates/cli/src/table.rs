//! Small CSV helpers shared by every stage.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// A fully read CSV file with a checked header.
pub struct Table {
    pub path: PathBuf,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    /// 1-based line number of a data row in the source file.
    pub fn line(&self, row: usize) -> usize {
        row + 2
    }

    pub fn text<'r>(&self, row: usize, record: &'r csv::StringRecord, col: usize) -> Result<&'r str> {
        record
            .get(col)
            .ok_or_else(|| CliError::data(&self.path, format!("line {}: missing column {}", self.line(row), col + 1)))
    }

    pub fn number(&self, row: usize, record: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
        let raw = self.text(row, record, col)?;
        parse_finite(raw).ok_or_else(|| {
            CliError::data(
                &self.path,
                format!("line {}: {name} `{raw}` is not a finite number", self.line(row)),
            )
        })
    }
}

pub fn parse_finite(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads `path`, requiring exactly the given header.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(CliError::data(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
        ));
    }
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok(Table {
        path: path.to_path_buf(),
        rows,
    })
}

pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::data(path, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 45.07, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn parse_finite_rejects_nan_and_inf() {
        assert_eq!(parse_finite("1.5"), Some(1.5));
        assert_eq!(parse_finite("NaN"), None);
        assert_eq!(parse_finite("inf"), None);
        assert_eq!(parse_finite("abc"), None);
    }
}
