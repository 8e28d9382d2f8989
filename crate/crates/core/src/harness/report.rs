use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Comparison a check applies between its value and bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    LessThan,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, relation: Relation::AtMost }
    }

    pub fn less_than(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, relation: Relation::LessThan }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, relation: Relation::AtLeast }
    }

    /// NaN values always fail.
    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.bound,
            Relation::LessThan => self.value < self.bound,
            Relation::AtLeast => self.value >= self.bound,
        }
    }

    /// `CHECK name PASS|FAIL value bound`.
    pub fn line(&self) -> String {
        format!(
            "CHECK {} {} {:.6e} {:.6e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.value,
            self.bound
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioReport {
    pub label: String,
    pub checks: Vec<Check>,
    /// Reported without a pass/fail verdict.
    pub measurements: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Set when the run stopped early; outputs written so far are partial.
    pub aborted: Option<String>,
}

impl ScenarioReport {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), ..Default::default() }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push((name.into(), value));
    }

    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        for (name, v) in &self.measurements {
            let _ = writeln!(out, "# measured {name} = {v:.10e}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        if let Some(msg) = &self.aborted {
            let _ = writeln!(out, "# ABORTED (outputs are partial): {msg}");
        }
        for c in &self.checks {
            let _ = writeln!(out, "{}", c.line());
        }
        out
    }

    pub(crate) fn write(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}
