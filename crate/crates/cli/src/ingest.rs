//! Long-format hourly series: `hour,<key>,value`, one row per hour and key.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::table::{num, parse_finite, write_table};

/// Reads a dense series of `hours` values per key.
///
/// The middle header names the key (`zone`, `plant`, ...). Missing hours,
/// duplicates, hours outside `0..hours` and non-finite values are errors;
/// nothing is filled in.
pub fn ingest_timeseries(path: &Path, hours: usize) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::data(path, format!("{other:?}")),
        })?;
    let header = reader
        .headers()
        .map_err(|e| CliError::data(path, e.to_string()))?
        .clone();
    if header.len() != 3 || &header[0] != "hour" || &header[2] != "value" {
        return Err(CliError::data(
            path,
            format!("expected header `hour,<key>,value`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let key_name = header[1].to_string();

    let mut slots: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| CliError::data(path, format!("line {line}: {e}")))?;
        if record.len() != 3 {
            return Err(CliError::data(path, format!("line {line}: expected 3 fields, found {}", record.len())));
        }
        let key = &record[1];
        let hour: usize = record[0]
            .parse()
            .map_err(|_| CliError::data(path, format!("line {line}: hour `{}` is not a whole number", &record[0])))?;
        if hour >= hours {
            return Err(CliError::data(
                path,
                format!("line {line}: hour {hour} of {key_name} `{key}` is outside 0..{hours}"),
            ));
        }
        let value = parse_finite(&record[2]).ok_or_else(|| {
            CliError::data(
                path,
                format!(
                    "line {line}: value `{}` at hour {hour} of {key_name} `{key}` is not a finite number",
                    &record[2]
                ),
            )
        })?;
        let series = slots.entry(key.to_string()).or_insert_with(|| vec![None; hours]);
        if series[hour].replace(value).is_some() {
            return Err(CliError::data(
                path,
                format!("line {line}: duplicate hour {hour} for {key_name} `{key}`"),
            ));
        }
    }
    if slots.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }

    let mut out = BTreeMap::new();
    for (key, series) in slots {
        let missing: Vec<usize> = series.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(t, _)| t).collect();
        if let Some(&first) = missing.first() {
            return Err(CliError::data(
                path,
                format!(
                    "{key_name} `{key}` is missing hour {first} ({} of {hours} hours missing)",
                    missing.len()
                ),
            ));
        }
        out.insert(key, series.into_iter().map(|v| v.expect("checked")).collect());
    }
    Ok(out)
}

/// Writes series key by key, hours ascending.
pub fn write_timeseries(path: &Path, key_name: &str, series: &BTreeMap<String, Vec<f64>>) -> Result<()> {
    let rows = series
        .iter()
        .flat_map(|(key, values)| values.iter().enumerate().map(move |(t, &v)| vec![t.to_string(), key.clone(), num(v)]));
    write_table(path, &["hour", key_name, "value"], rows)
}
