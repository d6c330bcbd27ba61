use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confidence-width schedule `β_t = B + sqrt(2(γ_{t−1} + log(2/δ)))`.
///
/// `γ_{t−1}` is supplied by the caller; learners pass the realized information
/// gain of the points observed so far. A schedule built with
/// [`ConfidenceSchedule::constant`] ignores `γ` and returns a fixed width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSchedule {
    pub rkhs_bound: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
}

impl ConfidenceSchedule {
    pub fn new(rkhs_bound: f64, delta: f64) -> Result<Self> {
        let s = Self {
            rkhs_bound,
            delta,
            fixed: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(beta: f64) -> Result<Self> {
        let s = Self {
            rkhs_bound: 0.0,
            delta: 0.5,
            fixed: Some(beta),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.fixed {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::config("beta", format!("fixed beta must be nonnegative, got {b}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(
                "delta",
                format!("confidence delta must lie in (0, 1), got {}", self.delta),
            ));
        }
        if !(self.rkhs_bound.is_finite() && self.rkhs_bound >= 0.0) {
            return Err(Error::config(
                "rkhs_bound",
                format!("RKHS bound must be nonnegative, got {}", self.rkhs_bound),
            ));
        }
        Ok(())
    }

    pub fn beta(&self, info_gain_prev: f64) -> Result<f64> {
        self.validate()?;
        if !(info_gain_prev.is_finite() && info_gain_prev >= 0.0) {
            return Err(Error::input(format!(
                "information gain must be nonnegative, got {info_gain_prev}"
            )));
        }
        if let Some(b) = self.fixed {
            return Ok(b);
        }
        Ok(self.rkhs_bound + (2.0 * (info_gain_prev + (2.0 / self.delta).ln())).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_value() {
        let delta = 2.0 / std::f64::consts::E.powi(2);
        let s = ConfidenceSchedule::new(1.0, delta).unwrap();
        assert!((s.beta(0.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn calculator_value() {
        let s = ConfidenceSchedule::new(2.0, 0.1).unwrap();
        // 2 + sqrt(2 (5 + ln 20)) = 5.99893...
        let b = s.beta(5.0).unwrap();
        assert!((b - (2.0 + (2.0 * (5.0 + 20f64.ln())).sqrt())).abs() < 1e-14);
        assert!((b - 5.998933).abs() < 1e-6);
    }

    #[test]
    fn constant_ignores_gain() {
        let s = ConfidenceSchedule::constant(0.7).unwrap();
        assert_eq!(s.beta(0.0).unwrap(), 0.7);
        assert_eq!(s.beta(40.0).unwrap(), 0.7);
        assert!(ConfidenceSchedule::constant(-1.0).is_err());
    }

    #[test]
    fn delta_domain() {
        assert!(matches!(
            ConfidenceSchedule::new(0.0, 2.0),
            Err(Error::Config { .. })
        ));
        assert!(ConfidenceSchedule::new(0.0, 0.0).is_err());
        assert!(ConfidenceSchedule::new(0.0, 1.0).is_err());
    }

    #[test]
    fn monotone_in_info_gain() {
        let s = ConfidenceSchedule::new(1.0, 0.05).unwrap();
        let mut prev = 0.0;
        for g in [0.0, 0.1, 1.0, 3.0, 10.0] {
            let b = s.beta(g).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }
}
