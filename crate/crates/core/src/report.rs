//! JSON check records.

use std::collections::BTreeMap;

use serde::Serialize;

/// Where a threshold comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Exact identity of the construction.
    Exact,
    /// Analytic value of the configuration.
    Analytic,
    /// Discretization budget fixed from a convergence study.
    Calibrated,
    /// Set by the user.
    Configured,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub provenance: Provenance,
}

impl Check {
    pub fn at_most(check: impl Into<String>, value: f64, threshold: f64, provenance: Provenance) -> Check {
        Check {
            check: check.into(),
            value,
            threshold,
            pass: value <= threshold,
            provenance,
        }
    }

    pub fn at_least(check: impl Into<String>, value: f64, threshold: f64, provenance: Provenance) -> Check {
        Check {
            check: check.into(),
            value,
            threshold,
            pass: value >= threshold,
            provenance,
        }
    }

    pub fn flag(check: impl Into<String>, pass: bool, provenance: Provenance) -> Check {
        let v = if pass { 1.0 } else { 0.0 };
        Check {
            check: check.into(),
            value: v,
            threshold: 1.0,
            pass,
            provenance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub fixture: String,
    pub parameters: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(subcommand: &str, fixture: &str) -> Report {
        Report {
            tool: "capvar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            fixture: fixture.into(),
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_report() {
        let mut r = Report::new("verify", "plane-pair");
        r.push(Check::at_most("a", 1.0, 2.0, Provenance::Exact));
        assert!(r.pass);
        r.push(Check::at_least("b", 1.0, 2.0, Provenance::Analytic));
        assert!(!r.pass);
        assert!(r.to_json().contains("\"provenance\": \"analytic\""));
    }
}
