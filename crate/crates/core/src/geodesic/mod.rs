//! Continuum layer.
//!
//! Between receptions the mean observer increments depend only on the rates
//! and the current `k`. Their second differences, divided by `dτ²`, give
//! equations of geodesic form in 1+1 dimensions:
//!
//! ```text
//! d²t/dτ² = dR̃/dτ · dt/dτ + dR/dτ · dx/dτ
//! d²x/dτ² = dR̃/dτ · dx/dτ + dR/dτ · dt/dτ
//! dR̃/dτ = r̃² / (2(1 - r̃) dτ)       dR/dτ = r/dτ · (1 + r̃/(2(1 - r̃)))
//! ```
//!
//! Christoffel symbols use the convention `ẍᵃ + Γᵃ_bc ẋᵇ ẋᶜ = 0`, so each
//! symbol is the negative of the matching coefficient in the expanded form
//! of the equations above.

mod integrate;
mod potential;

pub use integrate::{
    integrate, Forcing, Integration, IntegrationConfig, PotentialForcing, RateForcing, WorldlineStart,
};
pub use potential::{
    central_partials, PotentialField, PotentialPartials, QuadraticSinePotential, WavePotential,
    DEFAULT_FD_STEP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Scalar;
use crate::rates::RateSpec;

/// Tolerance on `ṫ² - ẋ² - 1` above which [`geodesic_rhs`] logs a warning.
pub const NORM_WARN_TOL: f64 = 1e-6;

fn positive_total(r_p: f64, r_q: f64) -> Result<RateSpec> {
    let rates = RateSpec::new(r_p, r_q)?;
    if !(rates.total() > 0.0) {
        return Err(Error::RateOutOfRange("total rate must be positive".into()));
    }
    Ok(rates)
}

fn positive_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::NonPositiveK(k.to_string()));
    }
    Ok(())
}

/// Mean observer increments over one inter-reception interval.
pub fn mean_increments(r_p: f64, r_q: f64, k: f64) -> Result<(f64, f64)> {
    let rates = positive_total(r_p, r_q)?;
    positive_k(k)?;
    let total = rates.total();
    let scale = 1.0 / (2.0 * total * (1.0 - total));
    let dp = scale * (1.0 - 2.0 * r_p + r_p * total) * k;
    let dq = scale * (1.0 - 2.0 * r_q + r_q * total) / k;
    Ok((dp, dq))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseIncrements {
    pub dtau: f64,
    pub dt: f64,
    pub dx: f64,
}

/// `dτ = 1/(2r̃₀)`, `dt, dx = dτ/2 · (k ± 1/k)`.
pub fn base_increments(k: f64, total0: f64) -> Result<BaseIncrements> {
    positive_k(k)?;
    if !(total0 > 0.0 && total0 <= crate::rates::MAX_TOTAL_RATE) {
        return Err(Error::RateOutOfRange(format!("r̃₀ = {total0}")));
    }
    let dtau = 1.0 / (2.0 * total0);
    Ok(BaseIncrements {
        dtau,
        dt: 0.5 * dtau * (k + 1.0 / k),
        dx: 0.5 * dtau * (k - 1.0 / k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondIncrements {
    pub ddt: f64,
    pub ddx: f64,
}

/// Second increments with the rates held at their local values (`r̃ ≈ r̃₀`).
pub fn second_increments(k: f64, r_p: f64, r_q: f64) -> Result<SecondIncrements> {
    let rates = positive_total(r_p, r_q)?;
    positive_k(k)?;
    let total = rates.total();
    let diff = rates.difference();
    let a = total / (8.0 * (1.0 - total));
    let b = diff / (4.0 * total) * (1.0 + total / (2.0 * (1.0 - total)));
    let (sum, dif) = (k + 1.0 / k, k - 1.0 / k);
    Ok(SecondIncrements {
        ddt: a * sum + b * dif,
        ddx: a * dif + b * sum,
    })
}

/// Second increments before the continuity approximation, with the previous
/// interval's total rate `r̃₀` kept separate from the current `r̃`.
pub fn second_increments_unsimplified(k: f64, r_p: f64, r_q: f64, total0: f64) -> Result<SecondIncrements> {
    let rates = positive_total(r_p, r_q)?;
    positive_k(k)?;
    if !(total0 > 0.0) {
        return Err(Error::RateOutOfRange(format!("r̃₀ = {total0}")));
    }
    let total = rates.total();
    let fp = 1.0 - 2.0 * r_p + r_p * total;
    let fq = 1.0 - 2.0 * r_q + r_q * total;
    let c = 1.0 / (total * (1.0 - total));
    let inv = 1.0 / k;
    Ok(SecondIncrements {
        ddt: 0.25 * (c * (fp * k + fq * inv) - (k + inv) / total0),
        ddx: 0.25 * (c * (fp * k - fq * inv) - (k - inv) / total0),
    })
}

/// The two rate-potential derivatives along the worldline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialRates {
    /// `dR̃/dτ`
    pub tilde: f64,
    /// `dR/dτ`
    pub diff: f64,
}

/// `dR̃/dτ` and `dR/dτ` for explicit `r̃`, `r` and `dτ`.
pub fn rate_potential_derivatives(total: f64, diff: f64, dtau: f64) -> Result<PotentialRates> {
    if !(0.0..=crate::rates::MAX_TOTAL_RATE).contains(&total) || diff.abs() > total {
        return Err(Error::RateOutOfRange(format!("r̃ = {total}, r = {diff}")));
    }
    if !(dtau > 0.0) {
        return Err(Error::InvalidParameter(format!("dτ must be positive, got {dtau}")));
    }
    Ok(PotentialRates {
        tilde: total * total / (2.0 * (1.0 - total) * dtau),
        diff: diff / dtau * (1.0 + total / (2.0 * (1.0 - total))),
    })
}

/// Which terms of the potential derivatives to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialOrder {
    /// Both coefficients in full.
    #[default]
    Full,
    /// First order in the rates: `dR̃/dτ → 0`, `dR/dτ → r/dτ`. This is the
    /// truncation whose constant-rate solution is exact hyperbolic motion.
    Leading,
}

/// Potential derivatives at the given rates with `dτ = 1/(2r̃)` substituted,
/// which stays finite for a vanishing field.
pub fn potential_rates(rates: &RateSpec, order: PotentialOrder) -> PotentialRates {
    let total = rates.total();
    let diff = rates.difference();
    match order {
        PotentialOrder::Full => PotentialRates {
            tilde: total.powi(3) / (1.0 - total),
            diff: 2.0 * total * diff * (1.0 + total / (2.0 * (1.0 - total))),
        },
        PotentialOrder::Leading => PotentialRates {
            tilde: 0.0,
            diff: 2.0 * total * diff,
        },
    }
}

/// `ṫ² - ẋ² - 1`.
pub fn norm_defect(u_t: f64, u_x: f64) -> f64 {
    u_t * u_t - u_x * u_x - 1.0
}

/// Right-hand side of the geodesic-form equations (first-equality form).
///
/// Logs a warning when the velocity is off the unit hyperboloid by more than
/// [`NORM_WARN_TOL`]; the result is still returned.
pub fn geodesic_rhs(u_t: f64, u_x: f64, p: PotentialRates) -> (f64, f64) {
    let defect = norm_defect(u_t, u_x);
    if defect.abs() > NORM_WARN_TOL {
        log::warn!("proper velocity off the unit hyperboloid by {defect:e}");
    }
    geodesic_rhs_unchecked(u_t, u_x, p)
}

pub(crate) fn geodesic_rhs_unchecked(u_t: f64, u_x: f64, p: PotentialRates) -> (f64, f64) {
    (p.tilde * u_t + p.diff * u_x, p.tilde * u_x + p.diff * u_t)
}

/// Christoffel-symbol analogues, indexed `Γ^a_bc` with `0 = t`, `1 = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels<T> {
    pub t_tt: T,
    pub t_tx: T,
    pub t_xx: T,
    pub x_tt: T,
    pub x_tx: T,
    pub x_xx: T,
}

/// Symbols from the partials of `R̃` and `R`.
pub fn christoffels<T: Scalar>(p: &PotentialPartials<T>) -> Christoffels<T> {
    let two = T::from_count(2);
    Christoffels {
        t_tt: -p.tilde_t.clone(),
        t_tx: -(p.tilde_x.clone() + p.diff_t.clone()) / two.clone(),
        t_xx: -p.diff_x.clone(),
        x_tt: -p.diff_t.clone(),
        x_tx: -(p.tilde_t.clone() + p.diff_x.clone()) / two,
        x_xx: -p.tilde_x.clone(),
    }
}

impl<T: Scalar> Christoffels<T> {
    /// `(2Γ⁰₀₁ - (Γ¹₀₀ + Γ¹₁₁), 2Γ¹₀₁ - (Γ⁰₀₀ + Γ⁰₁₁))`; both vanish when the
    /// coordinate conditions hold.
    pub fn coordinate_residuals(&self) -> (T, T) {
        let two = T::from_count(2);
        (
            two.clone() * self.t_tx.clone() - (self.x_tt.clone() + self.x_xx.clone()),
            two * self.x_tx.clone() - (self.t_tt.clone() + self.t_xx.clone()),
        )
    }

    /// `-Γᵃ_bc uᵇ uᶜ` for both components.
    pub fn acceleration(&self, u_t: T, u_x: T) -> (T, T) {
        let two = T::from_count(2);
        let tt = u_t.clone() * u_t.clone();
        let tx = two * u_t * u_x.clone();
        let xx = u_x.clone() * u_x;
        (
            -(self.t_tt.clone() * tt.clone() + self.t_tx.clone() * tx.clone() + self.t_xx.clone() * xx.clone()),
            -(self.x_tt.clone() * tt + self.x_tx.clone() * tx + self.x_xx.clone() * xx),
        )
    }
}

pub fn coordinate_conditions_residual<T: Scalar>(gamma: &Christoffels<T>) -> (T, T) {
    gamma.coordinate_residuals()
}

/// Everything derived from the potentials at one point of a worldline.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialDerivatives {
    pub along: PotentialRates,
    pub partials: PotentialPartials<f64>,
    pub christoffels: Christoffels<f64>,
}

impl PotentialDerivatives {
    /// Total derivatives follow from the partials by the chain rule along `(u_t, u_x)`.
    pub fn from_partials(partials: PotentialPartials<f64>, u_t: f64, u_x: f64) -> Self {
        let along = PotentialRates {
            tilde: partials.tilde_t * u_t + partials.tilde_x * u_x,
            diff: partials.diff_t * u_t + partials.diff_x * u_x,
        };
        let christoffels = christoffels(&partials);
        Self {
            along,
            partials,
            christoffels,
        }
    }

    /// Partials from `field` (analytic when available, else central differences with step `h`).
    pub fn at<F: PotentialField + ?Sized>(field: &F, t: f64, x: f64, u_t: f64, u_x: f64, h: f64) -> Result<Self> {
        let partials = match field.analytic_partials(t, x) {
            Some(p) => p,
            None => central_partials(field, t, x, h)?,
        };
        Ok(Self::from_partials(partials, u_t, u_x))
    }
}

/// Constants of a hyperbolic worldline
/// `t = C₁ sinh(aτ + φ₀) + C₂`, `x = C₁ cosh(aτ + φ₀) + C₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub phi0: f64,
    pub acceleration: f64,
}

impl HyperbolicParams {
    pub fn new(acceleration: f64, c1: f64, c2: f64, c3: f64, phi0: f64) -> Result<Self> {
        if !(acceleration > 0.0 && acceleration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "proper acceleration must be positive, got {acceleration}"
            )));
        }
        Ok(Self {
            c1,
            c2,
            c3,
            phi0,
            acceleration,
        })
    }

    /// Unit-normalized worldline (`C₁ = 1/a`) through `(t0, x0)` at `τ = 0`.
    pub fn anchored(acceleration: f64, phi0: f64, t0: f64, x0: f64) -> Result<Self> {
        let mut p = Self::new(acceleration, 0.0, 0.0, 0.0, phi0)?;
        p.c1 = 1.0 / acceleration;
        p.c2 = t0 - p.c1 * phi0.sinh();
        p.c3 = x0 - p.c1 * phi0.cosh();
        Ok(p)
    }

    /// Anchored worldline for constant rates, with `a = dR/dτ` at `order`.
    /// At leading order and one-sided rates this is `a = 2r_q²`.
    pub fn for_constant_rates(rates: &RateSpec, order: PotentialOrder, phi0: f64, t0: f64, x0: f64) -> Result<Self> {
        Self::anchored(potential_rates(rates, order).diff, phi0, t0, x0)
    }

    pub fn rapidity(&self, tau: f64) -> f64 {
        self.acceleration * tau + self.phi0
    }

    pub fn position(&self, tau: f64) -> (f64, f64) {
        let phi = self.rapidity(tau);
        (self.c1 * phi.sinh() + self.c2, self.c1 * phi.cosh() + self.c3)
    }

    pub fn velocity(&self, tau: f64) -> (f64, f64) {
        let phi = self.rapidity(tau);
        let s = self.c1 * self.acceleration;
        (s * phi.cosh(), s * phi.sinh())
    }

    pub fn point(&self, tau: f64) -> crate::trajectory::TrajectoryPoint {
        let (t, x) = self.position(tau);
        crate::trajectory::TrajectoryPoint::from_rapidity(tau, t, x, self.rapidity(tau))
    }
}

pub fn hyperbolic_solution(params: &HyperbolicParams, tau: f64) -> (f64, f64) {
    params.position(tau)
}

/// Closed-form worldline for constant rates from a start point: hyperbolic
/// when `dR/dτ ≠ 0` (mirrored in `x` when it is negative), straight otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantRateWorldline {
    Inertial(WorldlineStart),
    Hyperbolic { params: HyperbolicParams, mirrored: bool },
}

impl ConstantRateWorldline {
    pub fn new(rates: &RateSpec, order: PotentialOrder, start: WorldlineStart) -> Result<Self> {
        let a = potential_rates(rates, order).diff;
        Ok(if a == 0.0 {
            Self::Inertial(start)
        } else if a > 0.0 {
            Self::Hyperbolic {
                params: HyperbolicParams::anchored(a, start.phi0, start.t0, start.x0)?,
                mirrored: false,
            }
        } else {
            Self::Hyperbolic {
                params: HyperbolicParams::anchored(-a, -start.phi0, start.t0, -start.x0)?,
                mirrored: true,
            }
        })
    }

    /// Signed proper acceleration, `dφ/dτ`.
    pub fn acceleration(&self) -> f64 {
        match self {
            Self::Inertial(_) => 0.0,
            Self::Hyperbolic { params, mirrored } => {
                if *mirrored {
                    -params.acceleration
                } else {
                    params.acceleration
                }
            }
        }
    }

    pub fn rapidity(&self, tau: f64) -> f64 {
        match self {
            Self::Inertial(s) => s.phi0,
            Self::Hyperbolic { params, mirrored } => {
                let phi = params.rapidity(tau);
                if *mirrored {
                    -phi
                } else {
                    phi
                }
            }
        }
    }

    pub fn position(&self, tau: f64) -> (f64, f64) {
        match self {
            Self::Inertial(s) => (s.t0 + tau * s.phi0.cosh(), s.x0 + tau * s.phi0.sinh()),
            Self::Hyperbolic { params, mirrored } => {
                let (t, x) = params.position(tau);
                (t, if *mirrored { -x } else { x })
            }
        }
    }

    pub fn point(&self, tau: f64) -> crate::trajectory::TrajectoryPoint {
        let (t, x) = self.position(tau);
        crate::trajectory::TrajectoryPoint::from_rapidity(tau, t, x, self.rapidity(tau))
    }
}

/// Result of maximizing `N_p (N' - N_p)` over `N_p ∈ {0..N'}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremumCheck {
    pub argmax: Vec<u64>,
    pub value: u64,
    /// Second difference at each maximizer.
    pub second_differences: Vec<i64>,
}

/// Brute-force maximization of `dτ² = N_p (N' - N_p)`.
pub fn proper_time_extremum_check(gap: u64) -> Result<ExtremumCheck> {
    if gap < 2 {
        return Err(Error::InvalidParameter(format!("gap must be at least 2, got {gap}")));
    }
    let f = |n: u64| n * (gap - n);
    let value = (0..=gap).map(f).max().unwrap_or(0);
    let argmax: Vec<u64> = (0..=gap).filter(|&n| f(n) == value).collect();
    let second_differences = argmax
        .iter()
        .map(|&n| f(n + 1) as i64 - 2 * f(n) as i64 + f(n - 1) as i64)
        .collect();
    Ok(ExtremumCheck {
        argmax,
        value,
        second_differences,
    })
}
