//! Reception rates and rate fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible total rate; keeps `N = 1/r̃ - 1 ≥ 1`.
pub const MAX_TOTAL_RATE: f64 = 0.5;

/// Per-emission reception rates from the P and Q sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates", into = "RawRates")]
pub struct RateSpec {
    r_p: f64,
    r_q: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    r_p: f64,
    r_q: f64,
}

impl TryFrom<RawRates> for RateSpec {
    type Error = Error;
    fn try_from(raw: RawRates) -> Result<Self> {
        RateSpec::new(raw.r_p, raw.r_q)
    }
}

impl From<RateSpec> for RawRates {
    fn from(r: RateSpec) -> Self {
        RawRates { r_p: r.r_p, r_q: r.r_q }
    }
}

impl RateSpec {
    /// Both rates non-negative and finite with `r_p + r_q ≤ 1/2`.
    /// A zero total is allowed here (free particle); the discrete sampler rejects it.
    pub fn new(r_p: f64, r_q: f64) -> Result<Self> {
        if !(r_p.is_finite() && r_q.is_finite()) || r_p < 0.0 || r_q < 0.0 {
            return Err(Error::RateOutOfRange(format!("r_p={r_p}, r_q={r_q}")));
        }
        if r_p + r_q > MAX_TOTAL_RATE {
            return Err(Error::RateOutOfRange(format!(
                "total rate {} exceeds {MAX_TOTAL_RATE}",
                r_p + r_q
            )));
        }
        Ok(Self { r_p, r_q })
    }

    pub fn one_sided_q(r_q: f64) -> Result<Self> {
        Self::new(0.0, r_q)
    }

    pub fn zero() -> Self {
        Self { r_p: 0.0, r_q: 0.0 }
    }

    pub fn r_p(&self) -> f64 {
        self.r_p
    }

    pub fn r_q(&self) -> f64 {
        self.r_q
    }

    /// `r̃ = r_q + r_p`.
    pub fn total(&self) -> f64 {
        self.r_q + self.r_p
    }

    /// `r = r_q - r_p`.
    pub fn difference(&self) -> f64 {
        self.r_q - self.r_p
    }

    /// Probability that a reception comes from the Q side.
    pub fn prob_q(&self) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| self.r_q / total)
    }

    /// Mean proper-time quantum between receptions, `dτ = 1/(2r̃)`.
    pub fn proper_time_step(&self) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| 1.0 / (2.0 * total))
    }
}

/// Reception rates as a function of position in 1+1 spacetime.
///
/// Implementations must be reentrant; integrators call them from any thread.
pub trait RateField {
    fn rates_at(&self, t: f64, x: f64) -> Result<RateSpec>;
}

impl<F: RateField + ?Sized> RateField for &F {
    fn rates_at(&self, t: f64, x: f64) -> Result<RateSpec> {
        (**self).rates_at(t, x)
    }
}

/// The same rates everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRates(pub RateSpec);

impl RateField for ConstantRates {
    fn rates_at(&self, _t: f64, _x: f64) -> Result<RateSpec> {
        Ok(self.0)
    }
}

/// Rates affine in `t` and `x`:
/// `r_p = p0 + p_t t + p_x x`, `r_q = q0 + q_t t + q_x x`.
///
/// Evaluation fails wherever the result leaves the admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRates {
    pub p0: f64,
    #[serde(default)]
    pub p_t: f64,
    #[serde(default)]
    pub p_x: f64,
    pub q0: f64,
    #[serde(default)]
    pub q_t: f64,
    #[serde(default)]
    pub q_x: f64,
}

impl RateField for LinearRates {
    fn rates_at(&self, t: f64, x: f64) -> Result<RateSpec> {
        let r_p = self.p0 + self.p_t * t + self.p_x * x;
        let r_q = self.q0 + self.q_t * t + self.q_x * x;
        RateSpec::new(r_p, r_q).map_err(|e| match e {
            Error::RateOutOfRange(msg) => Error::RateOutOfRange(format!("{msg} at (t={t}, x={x})")),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let r = RateSpec::new(0.05, 0.2).unwrap();
        assert!((r.total() - 0.25).abs() < 1e-15);
        assert!((r.difference() - 0.15).abs() < 1e-15);
        assert!((r.prob_q().unwrap() - 0.8).abs() < 1e-15);
        assert!((r.proper_time_step().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(RateSpec::zero().prob_q(), None);
    }

    #[test]
    fn range_checks() {
        assert!(RateSpec::new(-0.1, 0.2).is_err());
        assert!(RateSpec::new(0.3, 0.3).is_err());
        assert!(RateSpec::new(0.25, 0.25).is_ok());
        assert!(RateSpec::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn json_is_validated() {
        let ok: RateSpec = serde_json::from_str(r#"{"r_p": 0.0, "r_q": 0.01}"#).unwrap();
        assert_eq!(ok.r_q(), 0.01);
        let err = serde_json::from_str::<RateSpec>(r#"{"r_p": 0.4, "r_q": 0.4}"#).unwrap_err();
        assert!(err.to_string().contains("exceeds"));
    }

    #[test]
    fn linear_field_reports_position_of_violation() {
        let f = LinearRates { p0: 0.0, p_t: 0.0, p_x: 0.0, q0: 0.1, q_t: 0.0, q_x: 0.01 };
        assert!(f.rates_at(0.0, 10.0).is_ok());
        let err = f.rates_at(0.0, 50.0).unwrap_err();
        assert!(err.to_string().contains("x=50"));
    }
}
