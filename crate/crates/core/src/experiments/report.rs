use crate::model::McEstimate;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of one experiment run.
///
/// `values` holds derived scalars (fitted constants, ESS, quantiles) that are
/// not Monte Carlo means. `runtime_seconds` is wall time and is the only
/// field that differs between identical runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Vec<(String, String)>,
    pub estimates: Vec<(String, McEstimate)>,
    pub values: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        ExperimentReport { name: name.to_string(), config: Vec::new(), estimates: Vec::new(), values: Vec::new(), checks: Vec::new(), runtime_seconds: 0.0 }
    }

    pub fn echo(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn estimate(&mut self, label: impl Into<String>, e: McEstimate) {
        self.estimates.push((label.into(), e));
    }

    pub fn value(&mut self, label: impl Into<String>, v: f64) {
        self.values.push((label.into(), v));
    }

    pub fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { label: label.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get_estimate(&self, label: &str) -> Option<&McEstimate> {
        self.estimates.iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }

    pub fn get_value(&self, label: &str) -> Option<f64> {
        self.values.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }

    pub fn get_check(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }
}

/// `a <= b` up to `z` combined standard errors.
pub(crate) fn le_within(a: &McEstimate, b: &McEstimate, z: f64) -> bool {
    a.mean - b.mean <= z * a.stderr.hypot(b.stderr)
}
