//! Per-iteration solver records and their CSV encoding.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::sets::SetSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub objective: String,
    pub set: SetSpec,
    pub params: Value,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Cumulative oracle calls after this row's iterate was evaluated.
    pub oracle_calls: u64,
    pub f_value: f64,
    pub gap: Option<f64>,
    pub bound: Option<f64>,
    pub iterate_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub rows: Vec<TraceRow>,
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub final_gap: Option<f64>,
    /// Total oracle calls of the run, including any made after the last row.
    pub oracle_calls: u64,
    pub failure: Option<String>,
}

pub const CSV_COLUMNS: &str = "iter,oracle_calls,f,gap,bound";

/// 17 significant digits: enough for an exact f64 round trip.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Trace {
            header,
            rows: Vec::new(),
            final_point: Vec::new(),
            final_value: f64::NAN,
            final_gap: None,
            oracle_calls: 0,
            failure: None,
        }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.oracle_calls = self.oracle_calls.max(row.oracle_calls);
        self.rows.push(row);
    }

    pub fn finish(&mut self, point: Vec<f64>, value: f64, gap: Option<f64>, calls: u64) {
        self.final_point = point;
        self.final_value = value;
        self.final_gap = gap;
        self.oracle_calls = calls;
    }

    pub fn calls_strictly_increasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].oracle_calls > w[0].oracle_calls)
    }

    /// Worst `gap - bound` over rows carrying both (negative when the
    /// envelope holds everywhere).
    pub fn worst_bound_excess(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| Some(r.gap? - r.bound?))
            .reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = serde_json::to_string(&self.header).map_err(std::io::Error::other)?;
        writeln!(w, "# config: {header}")?;
        writeln!(w, "{CSV_COLUMNS}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iter,
                r.oracle_calls,
                fmt_float(r.f_value),
                fmt_opt(r.gap),
                fmt_opt(r.bound)
            )?;
        }
        match &self.failure {
            Some(msg) => writeln!(w, "# failure: {}", msg.replace('\n', " "))?,
            None => {
                let result = json!({
                    "final_value": fmt_float(self.final_value),
                    "final_gap": fmt_opt(self.final_gap),
                    "oracle_calls": self.oracle_calls,
                    "final_point_norm": fmt_float(crate::linalg::norm(&self.final_point)),
                });
                writeln!(w, "# result: {result}")?;
            }
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is UTF-8")
    }
}
