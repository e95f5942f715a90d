//! Machine-readable check reports shared by the command-line driver.

use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// One check: what was measured, against what, and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub id: String,
    pub params: Value,
    pub value: Value,
    pub target: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Record {
    pub fn new(
        id: impl Into<String>,
        params: Value,
        value: Value,
        target: Value,
        tolerance: Option<f64>,
        pass: bool,
    ) -> Record {
        Record { id: id.into(), params, value, target, tolerance, pass }
    }

    /// A failed record carrying an error message as its value.
    pub fn error(id: impl Into<String>, params: Value, message: impl Into<String>) -> Record {
        Record::new(id, params, json!({ "error": message.into() }), Value::Null, None, false)
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub records: Vec<Record>,
    pub pass: bool,
    pub elapsed_ms: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: BTreeMap<String, String>) -> Report {
        Report { command: command.into(), config, records: Vec::new(), pass: true, elapsed_ms: None }
    }

    pub fn push(&mut self, r: Record) {
        self.pass &= r.pass;
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = Record>) {
        for r in rs {
            self.push(r);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `id  value  target  tolerance  pass` lines with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tvalue\ttarget\ttolerance\tpass\n");
        for r in &self.records {
            let tol = r.tolerance.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.id, r.value, r.target, tol, r.pass));
        }
        out
    }
}
