//! Report records and their CSV and JSON encodings.

use std::io::Write;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One grid point: its parameters and measurements, both sides of the
/// comparison, and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub params: Vec<(&'static str, Value)>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(params: Vec<(&'static str, Value)>, lhs: Complex64, rhs: Complex64, tolerance: f64) -> Self {
        let abs_diff = (lhs - rhs).norm();
        Record {
            params,
            lhs,
            rhs,
            abs_diff,
            tolerance,
            pass: abs_diff <= tolerance,
        }
    }

    pub fn real(params: Vec<(&'static str, Value)>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Record::new(params, Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0), tolerance)
    }

    /// Adds a further requirement to the verdict.
    pub fn also(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }

    fn columns(&self) -> Vec<(&'static str, Value)> {
        let mut cols = self.params.clone();
        cols.extend([
            ("lhs_re", num(self.lhs.re)),
            ("lhs_im", num(self.lhs.im)),
            ("rhs_re", num(self.rhs.re)),
            ("rhs_im", num(self.rhs.im)),
            ("abs_diff", num(self.abs_diff)),
            ("tolerance", num(self.tolerance)),
            ("pass", Value::Bool(self.pass)),
        ]);
        cols
    }
}

/// A float as JSON, with non-finite values spelled out as strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub records: Vec<Record>,
    /// Command-specific measurements that do not fit the row schema.
    pub details: Value,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    fn summary(&self) -> Value {
        json!({
            "records": self.records.len(),
            "failed": self.failures(),
            "pass": self.passed(),
        })
    }

    pub fn write(&self, config: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        match config.format {
            Format::Json => self.write_json(config, out),
            Format::Csv => self.write_csv(config, out),
        }
    }

    fn write_json(&self, config: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| Value::Object(r.columns().into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>()))
            .collect();
        let doc = json!({
            "tool": "cslb",
            "version": VERSION,
            "command": config.command,
            "config": config,
            "summary": self.summary(),
            "records": records,
            "details": self.details,
        });
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out)
    }

    fn write_csv(&self, config: &RunConfig, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# cslb {VERSION} {}", config.command.name())?;
        writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
        writeln!(out, "# summary: {}", self.summary())?;
        if !self.details.is_null() {
            writeln!(out, "# details: {}", self.details)?;
        }
        let mut w = csv::Writer::from_writer(out);
        if let Some(first) = self.records.first() {
            w.write_record(first.columns().iter().map(|(k, _)| *k))?;
        }
        for r in &self.records {
            w.write_record(r.columns().iter().map(|(_, v)| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            }))?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_and_columns() {
        let r = Record::real(vec![("n", json!(3))], 1.0, 1.0 + 1e-12, 1e-10);
        assert!(r.pass);
        assert!(!r.clone().also(false).pass);
        let names: Vec<_> = r.columns().iter().map(|c| c.0).collect();
        assert_eq!(names[0], "n");
        assert_eq!(names.last(), Some(&"pass"));
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }
}
