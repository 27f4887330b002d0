// SPDX-License-Identifier: Apache-2.0

//! Report emission as canonical JSON or flat CSV.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Pure computation with no verdict.
    Computed,
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Computed | Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub body: Value,
    pub table: Option<Table>,
    pub outcome: Outcome,
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Scalar top-level fields of a JSON object as a `key,value` table.
fn scalar_table(body: &Value) -> Table {
    let mut t = Table::new(&["key", "value"]);
    if let Value::Object(map) = body {
        for (k, v) in map {
            let cell = match v {
                Value::String(s) => s.clone(),
                Value::Number(_) | Value::Bool(_) => v.to_string(),
                _ => continue,
            };
            t.push(vec![k.clone(), cell]);
        }
    }
    t
}

pub fn render(report: &Report, format: Format) -> Result<String, String> {
    match format {
        Format::Json => {
            let mut s = bergman_core::json::to_canonical_string(&report.body).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let owned;
            let table = match &report.table {
                Some(t) => t,
                None => {
                    owned = scalar_table(&report.body);
                    &owned
                }
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header).map_err(|e| e.to_string())?;
            for row in &table.rows {
                w.write_record(row).map_err(|e| e.to_string())?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }
    }
}

pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), String> {
    let text = render(report, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_keys_are_sorted() {
        let r = Report {
            body: json!({"verdict": "match", "c": 0.5, "checks": []}),
            table: None,
            outcome: Outcome::Pass,
        };
        let s = render(&r, Format::Json).unwrap();
        assert!(s.find("\"c\"").unwrap() < s.find("\"checks\"").unwrap());
        assert!(s.contains("\"verdict\": \"match\""));
    }

    #[test]
    fn csv_falls_back_to_scalars() {
        let r = Report {
            body: json!({"verdict": "match", "c": 0.5, "checks": []}),
            table: None,
            outcome: Outcome::Pass,
        };
        let s = render(&r, Format::Csv).unwrap();
        assert_eq!(s, "key,value\nc,0.5\nverdict,match\n");
    }
}
