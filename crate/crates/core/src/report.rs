use serde::{Deserialize, Serialize};

/// Outcome of checking one inequality over many samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest value of `lhs - rhs` seen; negative when every sample has slack.
    pub max_violation: f64,
    pub tolerance: f64,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        InequalityReport {
            name: name.into(),
            samples: 0,
            violations: 0,
            max_violation: f64::NEG_INFINITY,
            tolerance,
        }
    }

    /// Record `lhs <= rhs + tolerance`.
    pub fn record(&mut self, lhs: f64, rhs: f64) {
        let v = lhs - rhs;
        self.samples += 1;
        if v > self.max_violation || v.is_nan() {
            self.max_violation = v;
        }
        if !(v <= self.tolerance) {
            self.violations += 1;
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    pub fn merge(&mut self, other: &InequalityReport) {
        self.samples += other.samples;
        self.violations += other.violations;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
        }
    }
}
