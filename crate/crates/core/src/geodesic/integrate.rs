//! Fixed-step RK4 for the geodesic-form equations.

use serde::{Deserialize, Serialize};

use super::{
    geodesic_rhs_unchecked, norm_defect, potential_rates, PotentialDerivatives, PotentialField, PotentialOrder,
    PotentialRates, NORM_WARN_TOL,
};
use crate::error::{Error, Result};
use crate::rates::RateField;
use crate::trajectory::TrajectoryPoint;

/// Supplies `dR̃/dτ` and `dR/dτ` at a point of the worldline.
pub trait Forcing: Sync {
    fn along(&self, t: f64, x: f64, u_t: f64, u_x: f64) -> Result<PotentialRates>;
}

/// Potential derivatives from local reception rates.
#[derive(Debug, Clone, Copy)]
pub struct RateForcing<F> {
    pub field: F,
    pub order: PotentialOrder,
}

impl<F: RateField + Sync> Forcing for RateForcing<F> {
    fn along(&self, t: f64, x: f64, _u_t: f64, _u_x: f64) -> Result<PotentialRates> {
        Ok(potential_rates(&self.field.rates_at(t, x)?, self.order))
    }
}

/// Potential derivatives from explicit potentials by the chain rule.
#[derive(Debug, Clone, Copy)]
pub struct PotentialForcing<'a, P: ?Sized> {
    pub field: &'a P,
    pub fd_step: f64,
}

impl<P: PotentialField + ?Sized> Forcing for PotentialForcing<'_, P> {
    fn along(&self, t: f64, x: f64, u_t: f64, u_x: f64) -> Result<PotentialRates> {
        Ok(PotentialDerivatives::at(self.field, t, x, u_t, u_x, self.fd_step)?.along)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldlineStart {
    pub t0: f64,
    pub x0: f64,
    pub phi0: f64,
}

impl Default for WorldlineStart {
    fn default() -> Self {
        Self { t0: 0.0, x0: 0.0, phi0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub tau_span: f64,
    pub step: f64,
    /// Integrate rapidity instead of the two velocity components, which keeps
    /// the velocity on the unit hyperboloid exactly.
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub points: Vec<TrajectoryPoint>,
    pub max_norm_defect: f64,
    /// Set when the forcing failed part way; `points` ends at the last good step.
    pub halted: Option<Error>,
}

impl Integration {
    pub fn diagnostic(&self) -> Option<String> {
        self.halted.as_ref().map(|e| {
            let tau = self.points.last().map_or(0.0, |p| p.tau);
            format!("integration stopped after tau={tau}: {e}")
        })
    }
}

#[derive(Clone, Copy)]
struct State {
    t: f64,
    x: f64,
    // Either (u_t, u_x) or (φ, unused) depending on the mode.
    a: f64,
    b: f64,
}

impl State {
    fn add(self, d: State, h: f64) -> State {
        State {
            t: self.t + h * d.t,
            x: self.x + h * d.x,
            a: self.a + h * d.a,
            b: self.b + h * d.b,
        }
    }
}

fn derivative<F: Forcing + ?Sized>(forcing: &F, s: State, rapidity_form: bool) -> Result<State> {
    if rapidity_form {
        let (u_t, u_x) = (s.a.cosh(), s.a.sinh());
        let p = forcing.along(s.t, s.x, u_t, u_x)?;
        // dφ/dτ = u_t a_x - u_x a_t; the R̃ term is parallel to u and cancels,
        // leaving dR/dτ. Forming the difference numerically loses everything
        // once cosh φ is large.
        Ok(State {
            t: u_t,
            x: u_x,
            a: p.diff,
            b: 0.0,
        })
    } else {
        let p = forcing.along(s.t, s.x, s.a, s.b)?;
        let (acc_t, acc_x) = geodesic_rhs_unchecked(s.a, s.b, p);
        Ok(State { t: s.a, x: s.b, a: acc_t, b: acc_x })
    }
}

fn rk4_step<F: Forcing + ?Sized>(forcing: &F, s: State, h: f64, rapidity_form: bool) -> Result<State> {
    let k1 = derivative(forcing, s, rapidity_form)?;
    let k2 = derivative(forcing, s.add(k1, h / 2.0), rapidity_form)?;
    let k3 = derivative(forcing, s.add(k2, h / 2.0), rapidity_form)?;
    let k4 = derivative(forcing, s.add(k3, h), rapidity_form)?;
    Ok(State {
        t: s.t + h / 6.0 * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t),
        x: s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        a: s.a + h / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
        b: s.b + h / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b),
    })
}

fn sample(tau: f64, s: State, rapidity_form: bool) -> TrajectoryPoint {
    if rapidity_form {
        TrajectoryPoint::from_rapidity(tau, s.t, s.x, s.a)
    } else {
        TrajectoryPoint::from_velocity(tau, s.t, s.x, s.a, s.b)
    }
}

/// Integrates from `τ = 0` to `tau_span`, shortening the last step to land on it.
/// One sample per step, including both endpoints.
pub fn integrate<F: Forcing + ?Sized>(forcing: &F, start: WorldlineStart, config: IntegrationConfig) -> Result<Integration> {
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {}", config.step)));
    }
    if !(config.tau_span >= 0.0 && config.tau_span.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau_span must be non-negative, got {}", config.tau_span)));
    }
    let rapidity_form = config.renormalize;
    let mut state = if rapidity_form {
        State { t: start.t0, x: start.x0, a: start.phi0, b: 0.0 }
    } else {
        State { t: start.t0, x: start.x0, a: start.phi0.cosh(), b: start.phi0.sinh() }
    };
    // Check the starting point is inside the domain before recording anything.
    derivative(forcing, state, rapidity_form)?;

    let steps = (config.tau_span / config.step - 1e-9).ceil().max(0.0) as usize;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(sample(0.0, state, rapidity_form));
    let mut max_norm_defect: f64 = 0.0;
    let mut halted = None;
    for i in 0..steps {
        let tau = i as f64 * config.step;
        let h = config.step.min(config.tau_span - tau);
        match rk4_step(forcing, state, h, rapidity_form) {
            Ok(next) => state = next,
            Err(e) => {
                log::warn!("integration halted at tau={tau}: {e}");
                halted = Some(e);
                break;
            }
        }
        if !rapidity_form {
            let defect = norm_defect(state.a, state.b);
            max_norm_defect = max_norm_defect.max(defect.abs());
            if !(state.a > state.b.abs()) {
                halted = Some(Error::VelocityOutOfRange(state.b / state.a));
                break;
            }
        }
        let tau_next = if i + 1 == steps { config.tau_span } else { (i + 1) as f64 * config.step };
        points.push(sample(tau_next, state, rapidity_form));
    }
    if max_norm_defect > NORM_WARN_TOL {
        log::warn!("proper velocity drifted off the unit hyperboloid by up to {max_norm_defect:e}");
    }
    Ok(Integration { points, max_norm_defect, halted })
}
