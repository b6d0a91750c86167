//! Check reports: the uniform result record every verification emits.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Outcome of one residual check over a batch of sample points.
/// `pass` holds exactly when `max_residual <= tolerance`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub patch: String,
    pub tolerance: f64,
    pub seed: u64,
    pub points: usize,
    /// Max |residual| per sample point, in draw order.
    pub per_point: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
    /// Free-form diagnostics (slopes, sub-residuals, notes on failures).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn from_per_point(
        name: impl Into<String>,
        patch: impl Into<String>,
        tolerance: f64,
        seed: u64,
        per_point: Vec<f64>,
    ) -> CheckReport {
        let max_residual = per_point.iter().copied().fold(0.0f64, f64::max);
        CheckReport {
            name: name.into(),
            patch: patch.into(),
            tolerance,
            seed,
            points: per_point.len(),
            per_point,
            max_residual,
            pass: max_residual <= tolerance,
            notes: BTreeMap::new(),
        }
    }

    /// Report for a check that could not run; recorded as failed with the
    /// error text attached.
    pub fn failed_with_error(
        name: impl Into<String>,
        patch: impl Into<String>,
        tolerance: f64,
        seed: u64,
        err: &crate::error::Error,
    ) -> CheckReport {
        let mut r = CheckReport::from_per_point(name, patch, tolerance, seed, Vec::new());
        r.pass = false;
        r.max_residual = f64::INFINITY;
        r.notes.insert("error".to_string(), err.to_string());
        r
    }

    pub fn with_note(mut self, key: impl Into<String>, value: impl Into<String>) -> CheckReport {
        self.notes.insert(key.into(), value.into());
        self
    }

    /// One fixed-width summary line.
    pub fn line(&self) -> String {
        format!(
            "{:<34} {:>12.3e}  tol {:>9.1e}  pts {:>4}  {}",
            self.name,
            self.max_residual,
            self.tolerance,
            self.points,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_max_at_most_tolerance() {
        let r = CheckReport::from_per_point("t", "p", 1e-9, 42, vec![1e-10, 5e-10]);
        assert!(r.pass);
        assert_eq!(r.max_residual, 5e-10);
        let r = CheckReport::from_per_point("t", "p", 1e-9, 42, vec![1e-10, 2e-9]);
        assert!(!r.pass);
    }

    #[test]
    fn json_round_trip_preserves_fields() {
        let r = CheckReport::from_per_point("t", "p", 1e-9, 7, vec![1e-12])
            .with_note("detail", "x");
        let s = serde_json::to_string(&r).unwrap();
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.name, "t");
        assert_eq!(back.seed, 7);
        assert_eq!(back.notes["detail"], "x");
    }
}
