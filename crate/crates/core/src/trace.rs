//! Per-iteration trace rows and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 9] = [
    "iter",
    "fq",
    "gq",
    "objective",
    "metric",
    "eta",
    "alpha",
    "beta",
    "elapsed_ms",
];

/// Formats a real with 17 significant digits, which round-trips any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub function_queries: u64,
    pub gradient_queries: u64,
    pub objective: f64,
    /// `None` on iterations off the metric cadence.
    pub metric: Option<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub elapsed_ms: u64,
}

impl TraceRow {
    fn to_record(&self) -> [String; 9] {
        [
            self.iter.to_string(),
            self.function_queries.to_string(),
            self.gradient_queries.to_string(),
            format_real(self.objective),
            self.metric.map(format_real).unwrap_or_default(),
            format_real(self.eta),
            format_real(self.alpha),
            format_real(self.beta),
            self.elapsed_ms.to_string(),
        ]
    }
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace written by [`write_trace`]. A header other than
/// [`TRACE_HEADER`] is a schema error.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::config(format!(
            "trace schema mismatch: header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != TRACE_HEADER.len() {
            return Err(Error::config("trace schema mismatch: wrong field count"));
        }
        let metric = match rec[4].trim() {
            "" => None,
            s => Some(field(s)?),
        };
        rows.push(TraceRow {
            iter: field(&rec[0])?,
            function_queries: field(&rec[1])?,
            gradient_queries: field(&rec[2])?,
            objective: field(&rec[3])?,
            metric,
            eta: field(&rec[5])?,
            alpha: field(&rec[6])?,
            beta: field(&rec[7])?,
            elapsed_ms: field(&rec[8])?,
        });
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("trace schema mismatch: bad field {s:?}")))
}
