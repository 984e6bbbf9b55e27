//! Tabular experiment results and their CSV form.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    /// Measured but not judged.
    Info,
    /// The inputs did not meet the experiment's preconditions.
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Inconclusive => "inconclusive",
        }
    }

    pub fn judge(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub values: Vec<f64>,
    pub tolerance: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub metadata: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>, tolerance: f64, status: Status) {
        self.rows.push(Row {
            label: label.into(),
            values,
            tolerance,
            status,
        });
    }

    /// Row that passes when `measured <= tolerance`; `measured` is appended to `values`
    /// only if the caller includes it.
    pub fn check(&mut self, label: impl Into<String>, values: Vec<f64>, measured: f64, tolerance: f64) {
        let ok = measured.is_finite() && measured <= tolerance;
        self.push(label, values, tolerance, Status::judge(ok));
    }

    pub fn info(&mut self, label: impl Into<String>, values: Vec<f64>) {
        self.push(label, values, f64::NAN, Status::Info);
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn outcome(&self) -> Outcome {
        if self.rows.iter().any(|r| r.status == Status::Inconclusive) {
            Outcome::Inconclusive
        } else if self.rows.iter().any(|r| r.status == Status::Fail) {
            Outcome::Fail
        } else {
            Outcome::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome() == Outcome::Pass
    }

    pub fn first_failure(&self) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| matches!(r.status, Status::Fail | Status::Inconclusive))
    }

    /// Marks every judged row inconclusive (e.g. an ambiguous spectral input).
    pub fn mark_inconclusive(&mut self) {
        for r in &mut self.rows {
            if matches!(r.status, Status::Pass | Status::Fail) {
                r.status = Status::Inconclusive;
            }
        }
    }

    /// `label,<columns>,tolerance,pass` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",tolerance,pass\n");
        for r in &self.rows {
            out.push_str(&r.label);
            for i in 0..self.columns.len() {
                out.push(',');
                out.push_str(&format_float(r.values.get(i).copied().unwrap_or(f64::NAN)));
            }
            let _ = writeln!(out, ",{},{}", format_float(r.tolerance), r.status.as_str());
        }
        out
    }

    pub fn metadata_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}
