//! Reading the CSV tables the toolkit consumes.
//!
//! Numeric tables have a header row, `#` comment lines are skipped and every
//! error names the offending column.

use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::node::{AtomOutcome, Basis};
use crate::polarization::PbsPort;

/// Numeric columns keyed by header name.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: HashMap<String, Vec<f64>>,
    rows: usize,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Schema { column: name.into(), reason: "missing from the header".into() })
    }

    pub fn optional(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }
}

fn reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(src)
}

/// Reads a table whose header must contain `required` and may contain
/// `optional`. Any other column is a schema error.
pub fn read_table<R: Read>(src: R, required: &[&str], optional: &[&str]) -> Result<Table> {
    let mut rdr = reader(src);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::Schema { column: required.first().copied().unwrap_or("").into(), reason: "no header row".into() });
    }
    for h in &headers {
        if !required.contains(&h.as_str()) && !optional.contains(&h.as_str()) {
            let expected = required.iter().chain(optional).copied().collect::<Vec<_>>().join(", ");
            return Err(Error::Schema { column: h.clone(), reason: format!("unexpected column; expected {expected}") });
        }
    }
    for r in required {
        if !headers.iter().any(|h| h == r) {
            return Err(Error::Schema { column: (*r).into(), reason: "missing from the header".into() });
        }
    }
    let mut columns: HashMap<String, Vec<f64>> = headers.iter().map(|h| (h.clone(), Vec::new())).collect();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // Header is line 1 of the data.
        let line = i + 2;
        if record.len() != headers.len() {
            let column = headers.get(record.len()).unwrap_or(&headers[0]).clone();
            return Err(Error::Schema {
                column,
                reason: format!("row {line} has {} fields, the header has {}", record.len(), headers.len()),
            });
        }
        for (h, cell) in headers.iter().zip(record.iter()) {
            let v: f64 = cell.parse().map_err(|_| Error::Schema {
                column: h.clone(),
                reason: format!("row {line}: `{cell}` is not a number"),
            })?;
            columns.get_mut(h).expect("column created from header").push(v);
        }
        rows += 1;
    }
    Ok(Table { columns, rows })
}

/// One row of a trials table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRow {
    pub trial_id: u64,
    pub herald: PbsPort,
    pub basis: Basis,
    pub delay_us: f64,
    pub outcome: Option<AtomOutcome>,
}

pub const TRIAL_COLUMNS: [&str; 7] =
    ["trial_id", "write_time_us", "herald", "herald_time_us", "basis", "delay_us", "outcome"];

/// Reads a table written by [`crate::sequencer::write_trials_csv`].
pub fn read_trials_csv<R: Read>(src: R) -> Result<Vec<TrialRow>> {
    let mut rdr = reader(src);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema { column: name.into(), reason: "missing from the header".into() })
    };
    let [id, _, herald, _, basis, delay, outcome] = TRIAL_COLUMNS.map(index);
    let (id, herald, basis, delay, outcome) = (id?, herald?, basis?, delay?, outcome?);
    let bad = |column: &str, line: usize, cell: &str| Error::Schema {
        column: column.into(),
        reason: format!("row {line}: unexpected value `{cell}`"),
    };
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let cell = |k: usize| record.get(k).unwrap_or("");
        rows.push(TrialRow {
            trial_id: cell(id).parse().map_err(|_| bad("trial_id", line, cell(id)))?,
            herald: match cell(herald) {
                "T" => PbsPort::Transmit,
                "R" => PbsPort::Reflect,
                other => return Err(bad("herald", line, other)),
            },
            basis: match cell(basis) {
                "z" => Basis::Z,
                "x" => Basis::X,
                other => return Err(bad("basis", line, other)),
            },
            delay_us: cell(delay).parse().map_err(|_| bad("delay_us", line, cell(delay)))?,
            outcome: match cell(outcome) {
                "down" => Some(AtomOutcome::Down),
                "up" => Some(AtomOutcome::Up),
                "none" => None,
                other => return Err(bad("outcome", line, other)),
            },
        });
    }
    Ok(rows)
}
