//! Empirical checks of the equilibration bounds. Each verifier computes the
//! bound, the matching Monte Carlo or time-sampled quantity, and reports both
//! as [`BoundCheck`]s.

mod counterexamples;
mod identities;
mod stats;
mod theorems;

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

pub use counterexamples::{
    diagonal_counterexample, spin_bath_counterexample, DiagonalReport, SpinBathReport, SPIN_BATH_SLACK,
};
pub use identities::{
    haar_pair_moment, haar_pair_moment_check, haar_pair_moment_closed_form, subadditivity_and_bath_checks,
    subadditivity_checks_from, swap_trace_identity_check, SubadditivityInputs, MIN_MOMENT_TRIALS,
};
pub use stats::{ks_statistic, mean_and_standard_error};
pub use theorems::{
    delta_quantity, theorem1_check, theorem2_statistics, theorem3_statistics, theorem4_report, theorem4_tail,
    Theorem1Report, Theorem2Summary, Theorem3Summary, Theorem4Report, MIN_STAT_TRIALS, MIN_TORUS_SAMPLES,
    STANDARD_ERROR_ALLOWANCE,
};

/// Constants in the concentration bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    /// `(ln 2)² / (72π³)`, effective-dimension tail.
    pub c: f64,
    /// `2 / (9π³)`, equilibrium-state tail.
    pub c_prime: f64,
    /// `1 / (128π²)`, torus tail.
    pub c_double_prime: f64,
}

impl ConstantsTable {
    pub fn new() -> Self {
        let pi3 = PI * PI * PI;
        Self {
            c: LN_2 * LN_2 / (72.0 * pi3),
            c_prime: 2.0 / (9.0 * pi3),
            c_double_prime: 1.0 / (128.0 * PI * PI),
        }
    }
}

impl Default for ConstantsTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Whether the bound caps the empirical value from above or below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Upper,
    Lower,
}

/// One bound against one empirical value. `margin` is positive on the safe
/// side in both senses, so `satisfied ⇔ margin ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub label: String,
    pub empirical: f64,
    pub bound: f64,
    pub sense: Sense,
    pub satisfied: bool,
    pub margin: f64,
    /// Must hold in every run; a failure is a defect, not data.
    pub guaranteed: bool,
    /// Probability bound ≥ 1, so the check carries no information.
    pub vacuous: bool,
    pub metadata: BTreeMap<String, String>,
}

impl BoundCheck {
    fn build(label: impl Into<String>, empirical: f64, bound: f64, sense: Sense) -> Self {
        let margin = match sense {
            Sense::Upper => bound - empirical,
            Sense::Lower => empirical - bound,
        };
        Self {
            label: label.into(),
            empirical,
            bound,
            sense,
            satisfied: margin >= 0.0,
            margin,
            guaranteed: true,
            vacuous: false,
            metadata: BTreeMap::new(),
        }
    }

    /// `empirical ≤ bound`.
    pub fn upper(label: impl Into<String>, empirical: f64, bound: f64) -> Self {
        Self::build(label, empirical, bound, Sense::Upper)
    }

    /// `empirical ≥ bound`.
    pub fn lower(label: impl Into<String>, empirical: f64, bound: f64) -> Self {
        Self::build(label, empirical, bound, Sense::Lower)
    }

    /// Upper check on an observed frequency against a probability bound;
    /// statistical, and flagged vacuous when the bound is at least 1.
    pub fn tail(label: impl Into<String>, frequency: f64, bound: f64) -> Self {
        let mut check = Self::upper(label, frequency, bound);
        check.guaranteed = false;
        check.vacuous = bound >= 1.0;
        check
    }

    pub fn informational(mut self) -> Self {
        self.guaranteed = false;
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Guaranteed and violated.
    pub fn is_failure(&self) -> bool {
        self.guaranteed && !self.satisfied
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_closed_forms() {
        let t = ConstantsTable::new();
        let pi = std::f64::consts::PI;
        let ln2 = 2f64.ln();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(t.c, ln2.powi(2) / (72.0 * pi.powi(3))) <= 1e-15);
        assert!(rel(t.c_prime, 2.0 / (9.0 * pi.powi(3))) <= 1e-15);
        assert!(rel(t.c_double_prime, 1.0 / (128.0 * pi.powi(2))) <= 1e-15);
        assert!((t.c - 2.15e-4).abs() < 0.01e-4);
    }

    #[test]
    fn margins_and_senses() {
        let u = BoundCheck::upper("u", 0.3, 0.5);
        assert!(u.satisfied && (u.margin - 0.2).abs() < 1e-15);
        let v = BoundCheck::upper("v", 0.6, 0.5);
        assert!(!v.satisfied && v.margin < 0.0 && v.is_failure());
        let l = BoundCheck::lower("l", 40.0, 32.0);
        assert!(l.satisfied && l.margin == 8.0);
        let edge = BoundCheck::upper("e", 1.0, 1.0);
        assert!(edge.satisfied && edge.margin == 0.0);
        let t = BoundCheck::tail("t", 0.0, 1.9);
        assert!(t.vacuous && !t.guaranteed && t.satisfied);
        assert!(!BoundCheck::upper("x", 2.0, 1.0).informational().is_failure());
    }
}
