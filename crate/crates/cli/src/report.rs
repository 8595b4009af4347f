//! The report emitted by every experiment run: a config echo, one line per
//! check, experiment-specific payloads, and wall-clock time. JSON is the
//! canonical format; CSV flattens the check table for spreadsheets.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub paper_anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    /// A check asserting `lhs <= rhs` within `tol`.
    pub fn upper(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            paper_anchor: anchor.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs + tol,
        }
    }

    /// A check asserting `lhs >= rhs` within `tol`.
    pub fn lower(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            paper_anchor: anchor.to_string(),
            lhs,
            rhs,
            margin: lhs - rhs,
            pass: lhs >= rhs - tol,
        }
    }

    /// A check asserting `|lhs - rhs| <= tol`.
    pub fn equal(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            paper_anchor: anchor.to_string(),
            lhs,
            rhs,
            margin: -(lhs - rhs).abs(),
            pass: (lhs - rhs).abs() <= tol,
        }
    }

    /// A reported value with no pass condition.
    pub fn value(name: &str, anchor: &str, lhs: f64) -> Self {
        Check {
            name: name.to_string(),
            paper_anchor: anchor.to_string(),
            lhs,
            rhs: f64::NAN,
            margin: f64::NAN,
            pass: true,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub artifact_version: String,
    pub experiment: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub witnesses: Value,
    pub wall_ms: u64,
}

impl Report {
    pub fn new(experiment: &str, config: Value) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            config,
            checks: Vec::new(),
            witnesses: Value::Null,
            wall_ms: 0,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,check,paper_anchor,lhs,rhs,margin,pass\n");
        for check in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&self.experiment),
                csv_field(&check.name),
                csv_field(&check.paper_anchor),
                check.lhs,
                check.rhs,
                check.margin,
                check.pass
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
