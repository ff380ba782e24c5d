//! Outcome records shared by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::Element;

/// Worst-case sample of a check, with the elements that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    pub residual: f64,
    pub elements: BTreeMap<String, Vec<[f64; 2]>>,
}

impl Witness {
    pub fn new(description: impl Into<String>, residual: f64) -> Self {
        Witness { description: description.into(), residual, elements: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, e: &Element) -> Self {
        self.elements.insert(name.to_string(), e.coords().iter().map(|z| [z.re, z.im]).collect());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Negative control: the check is meant to fail.
    pub expected_fail: bool,
    pub trials: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub witness: Option<Witness>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// Whether the outcome is the intended one.
    pub fn ok(&self) -> bool {
        self.passed != self.expected_fail
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn with_metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn negative_control(mut self) -> Self {
        self.expected_fail = true;
        self
    }

    pub fn summary_line(&self) -> String {
        let verdict = match (self.passed, self.expected_fail) {
            (true, false) => "PASS",
            (false, true) => "PASS (expected failure)",
            (true, true) => "FAIL (control did not fail)",
            (false, false) => "FAIL",
        };
        format!(
            "{verdict:<28} {:<44} trials={:<5} max_residual={:.3e} threshold={:.3e}",
            self.name, self.trials, self.max_residual, self.threshold
        )
    }
}

/// Running maximum of a residual over trials.
#[derive(Debug, Clone)]
pub struct Tracker {
    name: String,
    threshold: f64,
    trials: usize,
    max: f64,
    witness: Option<Witness>,
    metrics: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tracker {
    pub fn new(name: impl Into<String>, threshold: f64) -> Self {
        Tracker {
            name: name.into(),
            threshold,
            trials: 0,
            max: 0.0,
            witness: None,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn trial(&mut self) {
        self.trials += 1;
    }

    /// Records a residual; the witness is only built when it is a new maximum.
    /// NaN counts as infinitely bad.
    pub fn record(&mut self, residual: f64, witness: impl FnOnce() -> Witness) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.max || (self.witness.is_none() && r == self.max && r > 0.0) {
            self.max = r;
            let mut w = witness();
            w.residual = r;
            self.witness = Some(w);
        }
    }

    /// Keeps the maximum of a named metric.
    pub fn metric_max(&mut self, key: &str, value: f64) {
        let slot = self.metrics.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        if value > *slot || value.is_nan() {
            *slot = if value.is_nan() { f64::INFINITY } else { value };
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn finish(self) -> CheckReport {
        let passed = self.max <= self.threshold;
        self.finish_with(passed)
    }

    pub fn finish_with(self, passed: bool) -> CheckReport {
        CheckReport {
            name: self.name,
            passed,
            expected_fail: false,
            trials: self.trials,
            max_residual: self.max,
            threshold: self.threshold,
            witness: self.witness,
            metrics: self.metrics,
            notes: self.notes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_keeps_worst_case() {
        let mut t = Tracker::new("demo", 1.0);
        for r in [0.1, 0.7, 0.3] {
            t.trial();
            t.record(r, || Witness::new(format!("r={r}"), r));
        }
        let rep = t.finish();
        assert!(rep.passed && rep.ok());
        assert_eq!(rep.trials, 3);
        assert_eq!(rep.max_residual, 0.7);
        assert_eq!(rep.witness.unwrap().description, "r=0.7");
    }

    #[test]
    fn nan_fails_and_negative_controls_invert() {
        let mut t = Tracker::new("nan", 1.0);
        t.record(f64::NAN, || Witness::new("nan", 0.0));
        let rep = t.finish();
        assert!(!rep.passed);
        assert!(rep.clone().negative_control().ok());
    }
}
