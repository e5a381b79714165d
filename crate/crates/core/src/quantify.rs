//! Interval quantification.
//!
//! An interval on a particle chain is seen by the two observer chains as
//! lengths `dp` (P side) and `dq` (Q side). With `N_p` subintervals of length
//! `k` on P and `N_q` of length `1/k` on Q:
//!
//! ```text
//! dp = N_p k      dq = N_q / k
//! dτ² = dp dq = N_p N_q
//! dt = (dp + dq) / 2      dx = (dp - dq) / 2
//! v = (k - 1/k) / (k + 1/k)
//! ```
//!
//! Chain length is rest-frame time, `k_q = 1/k_p`, and each atomic interval
//! between distinguishable events is `δτ = 1/2`. Units have `c = 1`.

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exact::{ratio, Scalar};

/// Length of an atomic interval between distinguishable events.
pub const ATOMIC_INTERVAL: f64 = 0.5;

/// Exact [`ATOMIC_INTERVAL`].
pub fn atomic_interval_exact() -> BigRational {
    ratio(1, 2)
}

/// A particle-chain interval as projected onto the P and Q observers.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<T> {
    dp: T,
    dq: T,
}

/// Time, space and proper-time increments of an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeIncrement<T> {
    pub dt: T,
    pub dx: T,
    pub dtau_sq: T,
}

impl<T: Scalar> SpacetimeIncrement<T> {
    pub fn dtau(&self) -> f64 {
        self.dtau_sq.as_f64().sqrt()
    }
}

fn check_k<T: Scalar>(k: &T) -> Result<()> {
    if *k <= T::zero() {
        return Err(Error::NonPositiveK(k.to_string()));
    }
    Ok(())
}

impl<T: Scalar> Interval<T> {
    /// `dp = N_p k`, `dq = N_q / k`. Counts may be effective (half-integer) values.
    pub fn from_counts(n_p: T, n_q: T, k: &T) -> Result<Self> {
        check_k(k)?;
        for n in [&n_p, &n_q] {
            if *n < T::zero() {
                return Err(Error::NegativeCount(n.to_string()));
            }
        }
        Ok(Self {
            dp: n_p * k.clone(),
            dq: n_q / k.clone(),
        })
    }

    pub fn from_lengths(dp: T, dq: T) -> Result<Self> {
        for len in [&dp, &dq] {
            if *len < T::zero() {
                return Err(Error::NegativeLength(len.to_string()));
            }
        }
        Ok(Self { dp, dq })
    }

    pub fn dp(&self) -> &T {
        &self.dp
    }

    pub fn dq(&self) -> &T {
        &self.dq
    }

    /// `dτ² = dp dq`.
    pub fn proper_time_sq(&self) -> T {
        self.dp.clone() * self.dq.clone()
    }

    pub fn to_spacetime(&self) -> SpacetimeIncrement<T> {
        let two = T::from_count(2);
        SpacetimeIncrement {
            dt: (self.dp.clone() + self.dq.clone()) / two.clone(),
            dx: (self.dp.clone() - self.dq.clone()) / two,
            dtau_sq: self.proper_time_sq(),
        }
    }
}

/// Convenience wrapper over [`Interval::from_counts`] for whole counts.
pub fn interval_from_counts<T: Scalar>(n_p: u64, n_q: u64, k: &T) -> Result<Interval<T>> {
    Interval::from_counts(T::from_count(n_p), T::from_count(n_q), k)
}

pub fn proper_time_sq<T: Scalar>(interval: &Interval<T>) -> T {
    interval.proper_time_sq()
}

pub fn to_spacetime<T: Scalar>(interval: &Interval<T>) -> SpacetimeIncrement<T> {
    interval.to_spacetime()
}

/// `v = (k - 1/k) / (k + 1/k)`; exact in rational mode.
pub fn velocity_from_k<T: Scalar>(k: &T) -> Result<T> {
    check_k(k)?;
    let inv = T::one() / k.clone();
    Ok((k.clone() - inv.clone()) / (k.clone() + inv))
}

/// Inverse of [`velocity_from_k`]: `k = sqrt((1 + v) / (1 - v))`.
pub fn k_from_velocity(v: f64) -> Result<f64> {
    if !(v.abs() < 1.0) {
        return Err(Error::VelocityOutOfRange(v));
    }
    Ok(((1.0 + v) / (1.0 - v)).sqrt())
}

/// Exact inverse for rational velocities whose `k` is rational.
///
/// In floating point the inverse loses about `k²` ulps as `|v| → 1`; here
/// `k² = (1 + v)/(1 - v)` is formed exactly and its square root taken on
/// numerator and denominator.
pub fn k_from_velocity_exact(v: &BigRational) -> Result<BigRational> {
    let one = BigRational::from_integer(1.into());
    if !(v.abs() < one) {
        return Err(Error::VelocityOutOfRange(v.as_f64()));
    }
    let k_sq = (one.clone() + v) / (one - v);
    let (num, den) = (k_sq.numer().sqrt(), k_sq.denom().sqrt());
    let k = BigRational::new(num, den);
    if &k * &k != k_sq {
        return Err(Error::InvalidParameter(format!("k² = {k_sq} is not a rational square")));
    }
    Ok(k)
}

/// Rapidity `φ = ln k = atanh v`.
pub fn rapidity_from_k(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::NonPositiveK(k.to_string()));
    }
    Ok(k.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use proptest::prelude::*;

    #[test]
    fn counts_to_lengths() {
        let rest = interval_from_counts(3, 3, &1.0).unwrap();
        assert_eq!((*rest.dp(), *rest.dq()), (3.0, 3.0));

        let moving = interval_from_counts(2, 2, &ratio(2, 1)).unwrap();
        assert_eq!(moving.dp(), &ratio(4, 1));
        assert_eq!(moving.dq(), &ratio(1, 1));

        let edge = interval_from_counts(0, 5, &1.0).unwrap();
        assert_eq!((*edge.dp(), *edge.dq()), (0.0, 5.0));
    }

    #[test]
    fn non_positive_k_is_a_domain_error() {
        assert!(matches!(
            interval_from_counts(1, 1, &0.0),
            Err(Error::NonPositiveK(_))
        ));
        assert!(interval_from_counts(1, 1, &ratio(-1, 2)).is_err());
        assert!(velocity_from_k(&0.0).is_err());
        assert!(Interval::from_counts(-1.0, 1.0, &1.0).is_err());
    }

    #[test]
    fn proper_time_examples() {
        for k in [ratio(1, 3), ratio(1, 1), ratio(7, 2)] {
            let i = interval_from_counts(3, 3, &k).unwrap();
            assert_eq!(i.proper_time_sq(), ratio(9, 1));
        }
        let null = interval_from_counts(0, 7, &1.0).unwrap();
        assert_eq!(null.proper_time_sq(), 0.0);
        let i = Interval::from_lengths(4.0, 1.0).unwrap();
        assert_eq!(proper_time_sq(&i), 4.0);
    }

    #[test]
    fn spacetime_examples() {
        let s = Interval::from_lengths(3.0, 3.0).unwrap().to_spacetime();
        assert_eq!((s.dt, s.dx, s.dtau()), (3.0, 0.0, 3.0));

        let s = to_spacetime(&Interval::from_lengths(ratio(4, 1), ratio(1, 1)).unwrap());
        assert_eq!(s.dt, ratio(5, 2));
        assert_eq!(s.dx, ratio(3, 2));
        assert_eq!(s.dtau(), 2.0);

        let s = Interval::from_lengths(1.0, 0.0).unwrap().to_spacetime();
        assert_eq!((s.dt, s.dx, s.dtau()), (0.5, 0.5, 0.0));
    }

    #[test]
    fn velocity_examples() {
        assert_eq!(velocity_from_k(&1.0).unwrap(), 0.0);
        assert_eq!(velocity_from_k(&ratio(2, 1)).unwrap(), ratio(3, 5));
        assert!((k_from_velocity(0.8).unwrap() - 3.0).abs() < 1e-15);
        assert!(k_from_velocity(1.0).is_err());
        assert!(k_from_velocity(-1.5).is_err());
        assert!(k_from_velocity(f64::NAN).is_err());
    }

    #[test]
    fn atomic_interval_is_half() {
        assert_eq!(atomic_interval_exact(), ratio(1, 2));
        assert_eq!(ATOMIC_INTERVAL, 0.5);
    }

    proptest! {
        #[test]
        fn k_cancels_in_proper_time(n_p in 0u64..1000, n_q in 0u64..1000, num in 1i64..10_000, den in 1i64..10_000) {
            let k = ratio(num, den);
            let i = interval_from_counts(n_p, n_q, &k).unwrap();
            prop_assert_eq!(i.proper_time_sq(), ratio((n_p * n_q) as i64, 1));
        }

        #[test]
        fn velocity_round_trip_exact(num in 1i64..=1_000_000, den in 1i64..=1_000_000) {
            let k = ratio(num, den);
            prop_assume!(k >= ratio(1, 1000) && k <= ratio(1000, 1));
            let back = k_from_velocity_exact(&velocity_from_k(&k).unwrap()).unwrap();
            prop_assert_eq!(back, k);
        }

        // Conditioning of the float inverse grows like k²; 1e-12 holds on [1/20, 20].
        #[test]
        fn velocity_round_trip_float(log_k in -(20f64.ln())..20f64.ln()) {
            let k = log_k.exp();
            let back = k_from_velocity(velocity_from_k(&k).unwrap()).unwrap();
            prop_assert!((back - k).abs() <= 1e-12 * k);
        }

        #[test]
        fn velocity_is_increasing(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            prop_assume!(a < b);
            prop_assert!(velocity_from_k(&a).unwrap() <= velocity_from_k(&b).unwrap());
        }

        #[test]
        fn interval_identity_float(dp in 1e-9f64..1e3, dq in 1e-9f64..1e3) {
            let s = Interval::from_lengths(dp, dq).unwrap().to_spacetime();
            let lhs = s.dtau_sq;
            let rhs = s.dt * s.dt - s.dx * s.dx;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (s.dt * s.dt));
        }
    }
}
