//! Row-streaming CSV and JSON tables, and an index-ordered parallel sweep.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde_json::Value;

use crate::error::CliError;

/// Output encoding of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
    Missing,
}

impl Cell {
    /// Shortest decimal that round-trips to the same double; empty when missing.
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    /// Non-finite numbers become `null`.
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Flag(b) => Value::from(*b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

enum Sink {
    Csv(csv::Writer<File>),
    Json { out: BufWriter<File>, first: bool },
}

/// A table written row by row and flushed after every row, so partial
/// sweeps leave readable output behind.
pub struct TableWriter {
    columns: Vec<&'static str>,
    sink: Sink,
}

impl TableWriter {
    /// Creates `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
    pub fn create(dir: &Path, stem: &str, columns: &[&'static str], format: Format) -> Result<Self, CliError> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let file = File::create(&path)?;
        let sink = match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(file);
                w.write_record(columns)?;
                w.flush()?;
                Sink::Csv(w)
            }
            Format::Json => {
                let mut out = BufWriter::new(file);
                out.write_all(b"[")?;
                Sink::Json { out, first: true }
            }
        };
        Ok(Self {
            columns: columns.to_vec(),
            sink,
        })
    }

    /// Appends one row; its length must match the header.
    pub fn row(&mut self, cells: Vec<Cell>) -> Result<(), CliError> {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        match &mut self.sink {
            Sink::Csv(w) => {
                w.write_record(cells.iter().map(Cell::to_csv))?;
                w.flush()?;
            }
            Sink::Json { out, first } => {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(&cells)
                    .map(|(c, v)| (c.to_string(), v.to_json()))
                    .collect();
                if !*first {
                    out.write_all(b",")?;
                }
                *first = false;
                out.write_all(b"\n")?;
                serde_json::to_writer(&mut *out, &obj).map_err(std::io::Error::from)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    /// Closes the table.
    pub fn finish(self) -> Result<(), CliError> {
        match self.sink {
            Sink::Csv(mut w) => w.flush()?,
            Sink::Json { mut out, .. } => {
                out.write_all(b"\n]\n")?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

/// Writes a serializable value as pretty JSON to `<dir>/<name>`.
pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Evaluates `work(i)` for `i in 0..count` on up to `threads` workers and
/// hands results to `sink` strictly in index order as soon as each prefix
/// is complete. A sink error stops the remaining work.
pub fn ordered_sweep<T, W, S>(count: usize, threads: usize, work: W, mut sink: S) -> Result<(), CliError>
where
    T: Send,
    W: Fn(usize) -> T + Sync,
    S: FnMut(usize, T) -> Result<(), CliError>,
{
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, count.max(1)) {
            let tx = tx.clone();
            let (next, abort, work) = (&next, &abort, &work);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count || abort.load(Ordering::Relaxed) {
                    break;
                }
                if tx.send((i, work(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emit = 0;
        for (i, value) in rx {
            pending.insert(i, value);
            while let Some(value) = pending.remove(&emit) {
                if let Err(e) = sink(emit, value) {
                    abort.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                emit += 1;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_emits_in_index_order() {
        let mut seen = Vec::new();
        ordered_sweep(
            50,
            4,
            |i| {
                std::thread::sleep(std::time::Duration::from_micros(((50 - i) * 20) as u64));
                i * i
            },
            |i, v| {
                seen.push((i, v));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, (0..50).map(|i| (i, i * i)).collect::<Vec<_>>());
    }

    #[test]
    fn sink_errors_stop_the_sweep() {
        let r = ordered_sweep(100, 2, |i| i, |i, _| if i == 3 { Err(CliError::Usage("stop".into())) } else { Ok(()) });
        assert!(r.is_err());
    }

    #[test]
    fn cells_format_as_shortest_round_trip() {
        assert_eq!(Cell::Num(0.1).to_csv(), "0.1");
        assert_eq!(Cell::Num(2.5e-14).to_csv(), "2.5e-14");
        assert_eq!(Cell::Num(1.0 / 3.0).to_csv().parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(Cell::Missing.to_csv(), "");
        assert_eq!(Cell::Num(f64::NAN).to_json(), Value::Null);
    }
}
