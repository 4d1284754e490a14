//! CSV and JSON artifact writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::signal::RegimeFlags;
use crate::trace::{ProbabilityTrace, TimeGrid};

/// Shortest round-trip text, switching to exponent form for very small or large values.
fn fmt(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Column-major table to CSV with a header row. Refuses non-finite values.
pub(crate) fn write_columns(path: &Path, headers: &[String], columns: &[&[f64]]) -> Result<()> {
    ensure(headers.len() == columns.len(), || "header and column counts differ".into())?;
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invariant("table columns differ in length"));
    }
    for (h, c) in headers.iter().zip(columns) {
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::invariant(format!("non-finite value in column `{h}` at row {i}")));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => Error::io(path, err),
        other => Error::invariant(format!("csv: {other:?}")),
    };
    w.write_record(headers).map_err(io_err)?;
    let mut record = Vec::with_capacity(columns.len());
    for i in 0..rows {
        record.clear();
        record.extend(columns.iter().map(|c| fmt(c[i])));
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a trace written by `simulate`: first column time, second column probability.
pub fn read_trace_csv(path: &Path) -> Result<ProbabilityTrace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(err) => Error::io(path, err),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    })?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("{} row {}: {e}", path.display(), i + 1)))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .ok_or_else(|| Error::invalid(format!("row {} has fewer than two columns", i + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("row {}: {e}", i + 1)))
        };
        times.push(num(0)?);
        values.push(num(1)?);
    }
    let grid = TimeGrid::from_times(times)?;
    ProbabilityTrace::new(&grid, values, RegimeFlags::empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for v in [0.0, 1.0, -2.5e-9, 123456.789, 1e300, 0.1 + 0.2] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
    }
}
