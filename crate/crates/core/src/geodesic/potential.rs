//! Rate potentials `R̃(t, x)`, `R(t, x)` given as explicit fields.

use crate::error::{Error, Result};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// First partials of the two potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPartials<T> {
    pub tilde_t: T,
    pub tilde_x: T,
    pub diff_t: T,
    pub diff_x: T,
}

/// A pair of scalar potentials on 1+1 spacetime.
pub trait PotentialField: Send + Sync {
    /// `(R̃, R)` at `(t, x)`.
    fn potentials(&self, t: f64, x: f64) -> Result<(f64, f64)>;

    /// Closed-form partials, if the field has them.
    fn analytic_partials(&self, _t: f64, _x: f64) -> Option<PotentialPartials<f64>> {
        None
    }
}

/// Second-order central differences with step `h` in both directions.
pub fn central_partials<F: PotentialField + ?Sized>(field: &F, t: f64, x: f64, h: f64) -> Result<PotentialPartials<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let (tp, dp) = field.potentials(t + h, x)?;
    let (tm, dm) = field.potentials(t - h, x)?;
    let (xp_t, xp_d) = field.potentials(t, x + h)?;
    let (xm_t, xm_d) = field.potentials(t, x - h)?;
    let inv = 1.0 / (2.0 * h);
    Ok(PotentialPartials {
        tilde_t: (tp - tm) * inv,
        tilde_x: (xp_t - xm_t) * inv,
        diff_t: (dp - dm) * inv,
        diff_x: (xp_d - xm_d) * inv,
    })
}

/// `R̃ = αx + βt²`, `R = γ sin t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticSinePotential {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PotentialField for QuadraticSinePotential {
    fn potentials(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        Ok((self.alpha * x + self.beta * t * t, self.gamma * t.sin()))
    }

    fn analytic_partials(&self, t: f64, _x: f64) -> Option<PotentialPartials<f64>> {
        Some(PotentialPartials {
            tilde_t: 2.0 * self.beta * t,
            tilde_x: self.alpha,
            diff_t: self.gamma * t.cos(),
            diff_x: 0.0,
        })
    }
}

/// `R̃ = a sin(ωt) cos(κx)`, `R = b exp(-x²) + c t x`; every partial is generically nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePotential {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub omega: f64,
    pub kappa: f64,
}

impl PotentialField for WavePotential {
    fn potentials(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        Ok((
            self.a * (self.omega * t).sin() * (self.kappa * x).cos(),
            self.b * (-x * x).exp() + self.c * t * x,
        ))
    }

    fn analytic_partials(&self, t: f64, x: f64) -> Option<PotentialPartials<f64>> {
        let (s, c) = ((self.omega * t).sin(), (self.omega * t).cos());
        let (sk, ck) = ((self.kappa * x).sin(), (self.kappa * x).cos());
        Some(PotentialPartials {
            tilde_t: self.a * self.omega * c * ck,
            tilde_x: -self.a * self.kappa * s * sk,
            diff_t: self.c * x,
            diff_x: -2.0 * self.b * x * (-x * x).exp() + self.c * t,
        })
    }
}
