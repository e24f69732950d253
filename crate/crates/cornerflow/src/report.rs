//! Structured pass/fail entries for the verification commands.

use serde::{Deserialize, Serialize};

/// One quantitative check: a fitted value against an expected one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub fitted: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
    /// Free-form context: fit window, sampling density, etc.
    pub detail: String,
}

impl CheckEntry {
    /// Builds an entry, deciding `passed` from `|fitted - expected| <= tolerance`.
    pub fn new(
        name: impl Into<String>,
        fitted: f64,
        expected: f64,
        tolerance: f64,
        samples: usize,
        detail: impl Into<String>,
    ) -> Self {
        CheckEntry {
            name: name.into(),
            fitted,
            expected,
            tolerance,
            passed: (fitted - expected).abs() <= tolerance && fitted.is_finite(),
            samples,
            detail: detail.into(),
        }
    }

    /// An entry whose pass condition is an upper bound rather than a target.
    pub fn bounded(
        name: impl Into<String>,
        fitted: f64,
        bound: f64,
        samples: usize,
        detail: impl Into<String>,
    ) -> Self {
        CheckEntry {
            name: name.into(),
            fitted,
            expected: bound,
            tolerance: 0.0,
            passed: fitted <= bound && fitted.is_finite(),
            samples,
            detail: detail.into(),
        }
    }
}

/// A collection of checks, printable as a table and serializable to JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifierReport {
    pub entries: Vec<CheckEntry>,
}

impl VerifierReport {
    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

impl std::fmt::Display for VerifierReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<44} {:>14} {:>14} {:>10}  {}",
            "check", "fitted", "expected", "tol", "status"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<44} {:>14.6e} {:>14.6e} {:>10.1e}  {}",
                e.name,
                e.fitted,
                e.expected,
                e.tolerance,
                if e.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_and_fail_logic() {
        assert!(CheckEntry::new("a", 1.001, 1.0, 0.01, 3, "").passed);
        assert!(!CheckEntry::new("b", 1.1, 1.0, 0.01, 3, "").passed);
        assert!(!CheckEntry::new("c", f64::NAN, 1.0, 0.01, 3, "").passed);
        assert!(CheckEntry::bounded("d", 0.5, 1.0, 3, "").passed);
        assert!(!CheckEntry::bounded("e", 2.0, 1.0, 3, "").passed);
    }

    #[test]
    fn report_serializes() {
        let mut r = VerifierReport::default();
        r.push(CheckEntry::new("slope", 0.667, 2.0 / 3.0, 1e-3, 10, "window 1e-12..1e-10"));
        assert!(r.all_passed());
        let json = serde_json::to_string(&r).unwrap();
        let back: VerifierReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.entries.len(), 1);
        assert!(format!("{r}").contains("PASS"));
    }
}
