//! Reading observations and writing estimates.
//!
//! Input is CSV (one observation per row, column chosen by header name or
//! zero-based index, header detected automatically) or JSON lines of the
//! form `{"x": value}`. Estimates are written as JSON `{grid, values, meta}`
//! or as TSV with a `# meta` comment line followed by `x<TAB>fhat`.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{Dataset, DensityEstimate};
use crate::error::{Error, Result};
use crate::numfmt::sci;

/// Which CSV column holds the observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    /// Digits select by index, anything else by header name.
    pub fn parse(s: &str) -> Self {
        s.parse()
            .map(Column::Index)
            .unwrap_or_else(|_| Column::Name(s.to_string()))
    }
}

impl Default for Column {
    fn default() -> Self {
        Column::Index(0)
    }
}

pub fn read_csv<R: Read>(reader: R, column: &Column) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::EmptyDataset),
    };
    let index = match column {
        Column::Index(i) => *i,
        Column::Name(name) => first
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("no column named '{name}' in the header")))?,
    };
    let field = |rec: &csv::StringRecord, line: usize| -> Result<f64> {
        let raw = rec
            .get(index)
            .ok_or_else(|| Error::Parse(format!("line {line}: missing column {index}")))?;
        raw.parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {line}: '{raw}' is not a number")))
    };
    let mut values = Vec::new();
    // a first row whose selected field is not numeric is a header
    let header = matches!(column, Column::Name(_)) || field(&first, 1).is_err();
    if !header {
        values.push(field(&first, 1)?);
    }
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        values.push(field(&rec, i + 2)?);
    }
    Dataset::new(values)
}

#[derive(Deserialize)]
struct JsonObservation {
    x: f64,
}

pub fn read_jsonl<R: Read>(mut reader: R) -> Result<Dataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let obs: JsonObservation =
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        values.push(obs.x);
    }
    Dataset::new(values)
}

/// Dispatches on the extension: `.jsonl`/`.json` are JSON lines, anything else CSV.
pub fn read_dataset(path: &Path, column: &Column) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => read_jsonl(file),
        _ => read_csv(file, column),
    }
}

pub fn estimate_to_json(est: &DensityEstimate) -> Result<String> {
    Ok(serde_json::to_string_pretty(est)?)
}

pub fn estimate_to_tsv(est: &DensityEstimate) -> Result<String> {
    let mut out = format!("# meta {}\nx\tfhat\n", serde_json::to_string(&est.meta)?);
    for (x, v) in est.grid.iter().zip(&est.values) {
        let _ = writeln!(out, "{}\t{}", sci(*x), sci(*v));
    }
    Ok(out)
}
