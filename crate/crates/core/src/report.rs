//! Pass/fail records for numerical checks.

use serde::{Deserialize, Serialize};

/// Outcome of one tolerance check: `pass` iff `max_residual ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        CheckReport {
            check: check.into(),
            max_residual,
            tolerance,
            // NaN residuals fail.
            pass: max_residual <= tolerance,
        }
    }

    /// A check whose residual could not be computed.
    pub fn failed(check: impl Into<String>) -> Self {
        CheckReport { check: check.into(), max_residual: f64::NAN, tolerance: 0.0, pass: false }
    }
}

/// Largest element, propagating NaN as a failure signal.
pub fn max_residual(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}
