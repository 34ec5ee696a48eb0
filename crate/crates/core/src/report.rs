//! Verification reports: a deterministic record section plus wall-clock
//! timings kept apart so that reruns can be compared byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GeomError, Result};

/// Version of the JSON layout documented in `docs/report-schema.json`.
pub const SCHEMA_VERSION: &str = "lagfib-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A recorded disagreement with a stated claim that does not fail the run.
    Finding,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Finding => "finding",
        }
    }
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Stated by the mathematics being checked.
    Claimed,
    /// Immediate from the definitions.
    Trivial,
    /// Computed independently here (an oracle or a derivation).
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub value: Value,
    pub basis: Basis,
}

/// One check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// Short statement of the claim under test.
    pub anchor: String,
    pub status: Status,
    /// Residual, count or structured outcome.
    pub value: Value,
    pub expected: Expected,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        status: Status,
        value: Value,
        expected: Value,
        basis: Basis,
    ) -> Self {
        Record {
            name: name.into(),
            anchor: anchor.into(),
            status,
            value,
            expected: Expected {
                value: expected,
                basis,
            },
            note: None,
        }
    }

    /// Pass iff `residual ≤ tol`. Non-finite residuals fail.
    pub fn residual(
        name: impl Into<String>,
        anchor: impl Into<String>,
        residual: f64,
        tol: f64,
        basis: Basis,
    ) -> Self {
        let ok = residual.is_finite() && residual <= tol;
        Record::new(
            name,
            anchor,
            Status::from_bool(ok),
            num(residual),
            Value::String(format!("<= {tol:e}")),
            basis,
        )
    }

    /// Pass iff `got == want`.
    pub fn count(
        name: impl Into<String>,
        anchor: impl Into<String>,
        got: i64,
        want: i64,
        basis: Basis,
    ) -> Self {
        Record::new(
            name,
            anchor,
            Status::from_bool(got == want),
            Value::from(got),
            Value::from(want),
            basis,
        )
    }

    /// A check that could not be carried out.
    pub fn error(
        name: impl Into<String>,
        anchor: impl Into<String>,
        err: &GeomError,
        basis: Basis,
    ) -> Self {
        Record::new(name, anchor, Status::Fail, Value::Null, Value::Null, basis)
            .with_note(err.to_string())
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format!("{x}")))
}

/// The part of a report that depends only on the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub schema: String,
    pub tool_version: String,
    pub config: Value,
    /// Sorted by name.
    pub records: Vec<Record>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    /// Per task, keyed `suite/model`.
    pub tasks: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub report: ReportBody,
    pub timings: Timings,
}

impl VerificationReport {
    pub fn new(config: Value, mut records: Vec<Record>, timings: Timings) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        VerificationReport {
            report: ReportBody {
                schema: SCHEMA_VERSION.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                records,
            },
            timings,
        }
    }

    pub fn passed(&self) -> bool {
        self.report.records.iter().all(|r| r.status != Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.report
            .records
            .iter()
            .filter(|r| r.status == status)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The deterministic section alone.
    pub fn deterministic_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeomError::Config(format!("report: {e}")))
    }

    /// Fixed-width table, one row per record.
    pub fn to_table(&self) -> String {
        let width = self
            .report
            .records
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<7}  {:<24}  expected",
            "check", "status", "value"
        );
        for r in &self.report.records {
            let value = short(&r.value);
            let _ = writeln!(
                out,
                "{:<width$}  {:<7}  {:<24}  {}",
                r.name,
                r.status.as_str(),
                value,
                short(&r.expected.value)
            );
        }
        let _ = writeln!(
            out,
            "{} pass, {} fail, {} finding in {:.1} s",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Finding),
            self.timings.total_ms / 1000.0
        );
        out
    }
}

fn short(v: &Value) -> String {
    let s = match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.3e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    };
    if s.chars().count() > 40 {
        let cut: String = s.chars().take(37).collect();
        format!("{cut}...")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_sort_and_round_trip() {
        let recs = vec![
            Record::count("b", "two", 2, 2, Basis::Trivial),
            Record::residual("a", "small", 1e-9, 1e-6, Basis::Derived),
            Record::residual("c", "nan", f64::NAN, 1.0, Basis::Derived),
        ];
        let r = VerificationReport::new(Value::Null, recs, Timings::default());
        assert_eq!(r.report.records[0].name, "a");
        assert!(!r.passed());
        let back = VerificationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.deterministic_json(), r.deterministic_json());
    }
}
