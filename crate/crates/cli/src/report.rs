//! The versioned JSON report and CSV emitters.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use transquad::{Verdict, VectorValue};

pub const SCHEMA: &str = "transquad.report";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// The requested result was decided on certified or declared grounds.
    Certified,
    /// Budgets ran out or only heuristic answers were available.
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::Inconclusive => 2,
        }
    }

    pub fn of(v: Verdict) -> Self {
        if v.is_certified() {
            Status::Certified
        } else {
            Status::Inconclusive
        }
    }
}

/// `{schema, version, subcommand, input, status, result, notes}`; keys are emitted in sorted order
/// and no timings are recorded, so identical runs give identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: u32,
    pub subcommand: &'static str,
    pub input: Value,
    pub status: Status,
    pub result: Value,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(subcommand: &'static str, input: Value) -> Self {
        Report { schema: SCHEMA, version: VERSION, subcommand, input, status: Status::Inconclusive, result: json!({}), notes: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn verdict(v: Verdict) -> Value {
    serde_json::to_value(v).expect("verdict serializes")
}

/// `{kind, coords, tail_bound, residual}`.
pub fn value(v: &VectorValue<f64>, residual: f64) -> Value {
    json!({
        "kind": v.kind(),
        "coords": v.coords().iter().map(|x| num(*x)).collect::<Vec<_>>(),
        "tail_bound": num(v.tail_bound()),
        "residual": num(residual),
    })
}

/// A JSON number, or the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn fmt(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Rows of strings with a header.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory CSV");
        String::from_utf8(buf).expect("UTF-8 CSV")
    }
}

/// Column names `prefix_1 … prefix_d`, plus `tail_bound` for c₀ values.
pub fn coord_header(prefix: &str, sample: &VectorValue<f64>) -> Vec<String> {
    let mut h: Vec<String> = (1..=sample.coords().len()).map(|i| format!("{prefix}_{i}")).collect();
    if matches!(sample, VectorValue::TruncCZero { .. }) {
        h.push("tail_bound".into());
    }
    h
}

pub fn coord_cells(v: &VectorValue<f64>) -> Vec<String> {
    let mut c: Vec<String> = v.coords().iter().map(|x| fmt(*x)).collect();
    if let VectorValue::TruncCZero { tail, .. } = v {
        c.push(fmt(*tail));
    }
    c
}
