//! Experiment reports and their deterministic serialization.
//!
//! Floating-point numbers are written with 17 significant digits in
//! scientific notation (`6.6666666666666663e-1`), so a report round-trips
//! bit-exactly and two runs can be compared byte for byte. Object keys are
//! emitted in sorted order.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

/// Name of the only report field excluded from determinism guarantees.
pub const WALL_TIME_FIELD: &str = "wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEqual,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = ">=")]
    GreaterEqual,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Less => "<",
            Comparison::LessEqual => "<=",
            Comparison::Greater => ">",
            Comparison::GreaterEqual => ">=",
        }
    }

    pub fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Comparison::Less => measured < threshold,
            Comparison::LessEqual => measured <= threshold,
            Comparison::Greater => measured > threshold,
            Comparison::GreaterEqual => measured >= threshold,
        }
    }
}

/// A pass/fail check with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// Signed distance to the threshold, positive when passing.
    pub margin: f64,
    /// Unasserted diagnostics are recorded but do not fail the experiment.
    pub asserted: bool,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let margin = match comparison {
            Comparison::Less | Comparison::LessEqual => threshold - measured,
            Comparison::Greater | Comparison::GreaterEqual => measured - threshold,
        };
        Self {
            name: name.into(),
            measured,
            threshold,
            comparison,
            passed: comparison.holds(measured, threshold),
            margin,
            asserted: true,
        }
    }

    pub fn reported_only(mut self) -> Self {
        self.asserted = false;
        self
    }
}

/// Column-labelled numeric table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub tables: Vec<CurveTable>,
    pub diagnostics: Vec<Diagnostic>,
    pub observations: BTreeMap<String, Value>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            config,
            tables: Vec::new(),
            diagnostics: Vec::new(),
            observations: BTreeMap::new(),
            passed: true,
            wall_time_s: 0.0,
        }
    }

    pub fn check(&mut self, diagnostic: Diagnostic) {
        self.diagnostics.push(diagnostic);
        self.passed = self.diagnostics.iter().all(|d| d.passed || !d.asserted);
    }

    pub fn observe(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.observations.insert(name.to_string(), v);
    }

    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&CurveTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report is serializable")
    }

    pub fn to_json(&self) -> String {
        to_json_string(&self.to_value())
    }

    /// JSON with the wall-time field removed, for reproducibility checks.
    pub fn to_json_without_wall_time(&self) -> String {
        let mut v = self.to_value();
        if let Value::Object(map) = &mut v {
            map.remove(WALL_TIME_FIELD);
        }
        to_json_string(&v)
    }
}

/// 17 significant digits, `.` separator, lowercase `e` exponent.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(format_float(2.0 / 3.0), "6.6666666666666663e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        assert_eq!(format_float(-1234.5), "-1.2345000000000000e3");
        let v: f64 = format_float(0.1).parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn json_is_sorted_and_parseable() {
        let mut r = ExperimentReport::new("demo", serde_json::json!({"b": 1.5, "a": 2}));
        r.check(Diagnostic::new("x", 0.5, Comparison::Less, 1.0));
        r.observe("missing", Option::<f64>::None);
        r.wall_time_s = 0.25;
        let s = r.to_json();
        assert!(s.contains("\"config\":{\"a\":2,\"b\":1.5000000000000000e0}"));
        let parsed: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["diagnostics"][0]["comparison"], "<");
        assert_eq!(parsed["observations"]["missing"], Value::Null);
        assert!(!r.to_json_without_wall_time().contains(WALL_TIME_FIELD));
        assert!(r.passed);
    }

    #[test]
    fn failed_assertions_fail_report_but_reported_ones_do_not() {
        let mut r = ExperimentReport::new("demo", Value::Null);
        r.check(Diagnostic::new("info", 10.0, Comparison::Less, 1.0).reported_only());
        assert!(r.passed);
        let d = Diagnostic::new("hard", 10.0, Comparison::LessEqual, 1.0);
        assert_eq!(d.margin, -9.0);
        r.check(d);
        assert!(!r.passed);
        assert_eq!(r.diagnostics.len(), 2);
    }

    #[test]
    fn csv_layout() {
        let mut t = CurveTable::new("survival", &["t", "p"]);
        t.push(vec![0.0, 1.0]);
        t.push(vec![0.25, 0.5]);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "t,p\n0.0000000000000000e0,1.0000000000000000e0\n2.5000000000000000e-1,5.0000000000000000e-1\n"
        );
        assert_eq!(t.column("p"), Some(vec![1.0, 0.5]));
    }
}
