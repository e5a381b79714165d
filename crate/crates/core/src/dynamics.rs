//! Influenced-particle dynamics.
//!
//! A particle that has emitted `N` influences since it was last localized and
//! then receives an influence changes `k`:
//!
//! ```text
//! from Q:  k -> k (N+1)/N        from P:  k -> k N/(N+1)
//! ```
//!
//! The interval ending at the reception is quantified with effective counts
//! `N_p = N_q = (N+1)/2` and the updated `k`, so `dp dq = ((N+1)/2)²`.
//!
//! [`simulate`] drives a particle through a sequence of receptions whose gaps
//! and sides are drawn from a seeded generator.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{FactoredRatio, Scalar};
use crate::poset::Side;
use crate::rates::{RateField, RateSpec};
use crate::trajectory::TrajectoryPoint;

/// `dp dq = (N/2)²`, compared in the scalar's own mode.
pub fn consistency_holds<T: Scalar>(dp: &T, dq: &T, n: u64) -> bool {
    let half = T::from_count(n) / T::from_count(2);
    (dp.clone() * dq.clone()).matches(&(half.clone() * half))
}

/// [`consistency_holds`] for factored lengths. `N = 0` never holds since the
/// lengths are positive.
pub fn consistency_holds_factored(dp: &FactoredRatio, dq: &FactoredRatio, n: u64) -> bool {
    match FactoredRatio::from_ratio(n, 2) {
        Ok(half) => dp * dq == half.pow(2),
        Err(_) => false,
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::DegenerateInterval);
    }
    Ok(())
}

/// Length on P of the atomic interval that ends at the reception:
/// `k₁ = (N + 1/2)/N · k`.
pub fn k1_projection<T: Scalar>(k: &T, n: u64) -> Result<T> {
    check_n(n)?;
    if *k <= T::zero() {
        return Err(Error::NonPositiveK(k.to_string()));
    }
    let two_n = T::from_count(2 * n);
    Ok(k.clone() * (two_n.clone() + T::one()) / two_n)
}

/// Velocity after a Q-side reception, computed from the projected lengths
/// `dp' = (N/2)k + k₁` and `dq' = (N/2)/k`.
pub fn post_reception_velocity<T: Scalar>(k: &T, n: u64) -> Result<T> {
    let k1 = k1_projection(k, n)?;
    let half_n = T::from_count(n) / T::from_count(2);
    let dp = half_n.clone() * k.clone() + k1;
    let dq = half_n / k.clone();
    Ok((dp.clone() - dq.clone()) / (dp + dq))
}

/// Exact `k` update for a reception after `n` emissions.
pub fn updated_k(k: &FactoredRatio, side: Side, n: u64) -> Result<FactoredRatio> {
    check_n(n)?;
    let factor = match side {
        Side::Q => FactoredRatio::from_ratio(n + 1, n)?,
        Side::P => FactoredRatio::from_ratio(n, n + 1)?,
    };
    Ok(k * &factor)
}

/// Same update in [`BigRational`]; used for short exact checks.
pub fn updated_k_rational(k: &BigRational, side: Side, n: u64) -> Result<BigRational> {
    check_n(n)?;
    let (a, b) = (BigRational::from_count(n + 1), BigRational::from_count(n));
    Ok(match side {
        Side::Q => k * a / b,
        Side::P => k * b / a,
    })
}

/// The effective interval closed by one reception.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveInterval {
    /// `N + 1`; each observer count is half of this.
    pub events: u64,
    pub dp: FactoredRatio,
    pub dq: FactoredRatio,
}

/// What one reception did to the particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub side: Side,
    /// Emissions since the previous localization (`N`).
    pub n: u64,
    /// Whether `k` was updated; no-op receptions leave it alone.
    pub changed_k: bool,
    pub k_before: FactoredRatio,
    pub k_after: FactoredRatio,
    pub interval: EffectiveInterval,
    pub dtau: f64,
    pub dt: f64,
    pub dx: f64,
}

impl Reception {
    /// Number of emissions in the inter-reception interval, `N' = N + 1`.
    pub fn gap(&self) -> u64 {
        self.n + 1
    }
}

/// State of an influenced particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    k: FactoredRatio,
    emissions: u64,
    atomic_intervals: u64,
    t: f64,
    x: f64,
}

impl ParticleState {
    pub fn new(k: FactoredRatio, t: f64, x: f64) -> Self {
        Self {
            k,
            emissions: 0,
            atomic_intervals: 0,
            t,
            x,
        }
    }

    pub fn at_rest() -> Self {
        Self::new(FactoredRatio::one(), 0.0, 0.0)
    }

    pub fn with_emissions(mut self, n: u64) -> Self {
        self.emissions = n;
        self
    }

    pub fn k(&self) -> &FactoredRatio {
        &self.k
    }

    pub fn emissions(&self) -> u64 {
        self.emissions
    }

    /// Proper time since the run's anchor: atomic intervals times `1/2`.
    pub fn tau(&self) -> f64 {
        self.atomic_intervals as f64 * 0.5
    }

    pub fn tau_exact(&self) -> BigRational {
        BigRational::from_count(self.atomic_intervals) / BigRational::from_count(2)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn rapidity(&self) -> f64 {
        self.k.ln()
    }

    pub fn velocity(&self) -> f64 {
        self.rapidity().tanh()
    }

    pub fn emit(&mut self, n: u64) {
        self.emissions += n;
    }

    pub fn point(&self) -> TrajectoryPoint {
        let mut p = TrajectoryPoint::from_rapidity(self.tau(), self.t, self.x, self.rapidity());
        p.k = self.k.to_f64();
        p
    }

    fn close_interval(&self, side: Side, k_after: FactoredRatio, changed_k: bool) -> Result<(ParticleState, Reception)> {
        let n = self.emissions;
        check_n(n)?;
        let events = n + 1;
        let half = FactoredRatio::from_ratio(events, 2)?;
        let dp = &half * &k_after;
        let dq = &half / &k_after;

        // Effective lengths are (N+1)/2 · e^{±φ'}, so dt, dx are cosh/sinh.
        let phi = k_after.ln();
        let dtau = events as f64 * 0.5;
        let (dt, dx) = (dtau * phi.cosh(), dtau * phi.sinh());

        let next = ParticleState {
            k: k_after.clone(),
            emissions: 0,
            atomic_intervals: self.atomic_intervals + events,
            t: self.t + dt,
            x: self.x + dx,
        };
        let reception = Reception {
            side,
            n,
            changed_k,
            k_before: self.k.clone(),
            k_after,
            interval: EffectiveInterval { events, dp, dq },
            dtau,
            dt,
            dx,
        };
        Ok((next, reception))
    }

    /// Applies a reception from `side`.
    pub fn receive(&self, side: Side) -> Result<(ParticleState, Reception)> {
        let k_after = updated_k(&self.k, side, self.emissions)?;
        self.close_interval(side, k_after, true)
    }

    pub fn receive_q(&self) -> Result<(ParticleState, Reception)> {
        self.receive(Side::Q)
    }

    pub fn receive_p(&self) -> Result<(ParticleState, Reception)> {
        self.receive(Side::P)
    }

    /// A reception that leaves `k` unchanged; the interval is still closed.
    pub fn receive_without_change(&self, side: Side) -> Result<(ParticleState, Reception)> {
        self.close_interval(side, self.k.clone(), false)
    }
}

/// How inter-reception gaps are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMode {
    /// `N' = round(1/r̃)`.
    Deterministic,
    /// `N' = 2 + Poisson(1/r̃ - 2)`: mean `1/r̃`, spread `~sqrt(1/r̃)`.
    Stochastic,
    /// Bernoulli-process gaps: `N' - 1` geometric on `{1, 2, ...}` with mean `1/r̃ - 1`.
    Geometric,
}

fn checked_total(rates: &RateSpec) -> Result<f64> {
    let total = rates.total();
    if !(total > 0.0) {
        return Err(Error::RateOutOfRange(format!(
            "total rate must be positive for receptions, got {total}"
        )));
    }
    Ok(total)
}

/// Draws the gap `N'` (emissions between receptions, at least 2) and the side
/// of the reception that ends it. Side and gap are independent.
pub fn sample_gap<R: Rng + ?Sized>(rates: &RateSpec, mode: GapMode, rng: &mut R) -> Result<(u64, Side)> {
    let gap = sample_gap_length(rates, mode, rng)?;
    Ok((gap, sample_side(rates, rng)?))
}

pub fn sample_gap_length<R: Rng + ?Sized>(rates: &RateSpec, mode: GapMode, rng: &mut R) -> Result<u64> {
    let total = checked_total(rates)?;
    let mean = 1.0 / total;
    Ok(match mode {
        GapMode::Deterministic => mean.round() as u64,
        GapMode::Stochastic => {
            let extra = mean - 2.0;
            if extra > 0.0 {
                let poisson = Poisson::new(extra).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                2 + poisson.sample(rng) as u64
            } else {
                2
            }
        }
        GapMode::Geometric => {
            let success = (total / (1.0 - total)).min(1.0);
            let geo = Geometric::new(success).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            2 + geo.sample(rng)
        }
    })
}

pub fn sample_side<R: Rng + ?Sized>(rates: &RateSpec, rng: &mut R) -> Result<Side> {
    checked_total(rates)?;
    let prob_q = rates.prob_q().unwrap_or(0.0);
    Ok(if rng.random::<f64>() < prob_q { Side::Q } else { Side::P })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub receptions: usize,
    pub seed: u64,
    pub gap_mode: GapMode,
    /// Probability that a reception leaves `k` unchanged.
    pub noop_probability: f64,
}

impl SimulationConfig {
    pub fn new(receptions: usize, seed: u64, gap_mode: GapMode) -> Self {
        Self {
            receptions,
            seed,
            gap_mode,
            noop_probability: 0.0,
        }
    }
}

/// Bookkeeping for one simulated reception.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub side: Side,
    pub gap: u64,
    pub changed_k: bool,
    /// Side of the emission immediately before the reception.
    pub last_emission: Side,
    /// Draws rejected because they would have broken collinearity.
    pub rejected: u32,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub initial: TrajectoryPoint,
    /// One point per reception.
    pub points: Vec<TrajectoryPoint>,
    pub steps: Vec<StepRecord>,
    pub final_state: ParticleState,
    /// Set when the rate field left its domain mid-run; the run stops there.
    pub halted: Option<Error>,
}

/// [`simulate_with`] without an observer.
pub fn simulate<F: RateField + ?Sized>(initial: &ParticleState, field: &F, config: &SimulationConfig) -> Result<Simulation> {
    simulate_with(initial, field, config, |_| {})
}

/// Runs `config.receptions` receptions from `initial`, calling `observe` on each.
///
/// Rates are read from `field` at the particle's current `(t, x)`. The run is
/// a pure function of its inputs and `config.seed`.
///
/// The emission just before each reception is drawn uniformly from the two
/// sides; pairs where it goes to the reception's own side are inadmissible and
/// the pair is redrawn, which leaves the side probabilities unchanged.
pub fn simulate_with<F, O>(
    initial: &ParticleState,
    field: &F,
    config: &SimulationConfig,
    mut observe: O,
) -> Result<Simulation>
where
    F: RateField + ?Sized,
    O: FnMut(&Reception),
{
    if !(0.0..=1.0).contains(&config.noop_probability) {
        return Err(Error::InvalidParameter(format!(
            "noop probability {} outside [0, 1]",
            config.noop_probability
        )));
    }
    let first = field.rates_at(initial.t(), initial.x())?;
    checked_total(&first)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial.clone();
    let mut points = Vec::with_capacity(config.receptions);
    let mut steps = Vec::with_capacity(config.receptions);
    let mut halted = None;

    for _ in 0..config.receptions {
        let rates = match field.rates_at(state.t(), state.x()).and_then(|r| checked_total(&r).map(|_| r)) {
            Ok(r) => r,
            Err(e) => {
                halted = Some(e);
                break;
            }
        };
        let gap = sample_gap_length(&rates, config.gap_mode, &mut rng)?;
        let mut rejected = 0;
        let (side, last_emission) = loop {
            let side = sample_side(&rates, &mut rng)?;
            let emitted = if rng.random::<bool>() { Side::Q } else { Side::P };
            if emitted != side {
                break (side, emitted);
            }
            rejected += 1;
        };
        let noop = config.noop_probability > 0.0 && rng.random::<f64>() < config.noop_probability;

        state.emit(gap - 1);
        let (next, reception) = if noop {
            state.receive_without_change(side)?
        } else {
            state.receive(side)?
        };
        observe(&reception);

        let mut point = next.point();
        point.side = Some(side);
        point.gap = Some(gap);
        points.push(point);
        steps.push(StepRecord {
            side,
            gap,
            changed_k: !noop,
            last_emission,
            rejected,
        });
        state = next;
    }

    if let Some(e) = &halted {
        log::warn!("simulation halted after {} receptions: {e}", points.len());
    }
    Ok(Simulation {
        initial: initial.point(),
        points,
        steps,
        final_state: state,
        halted,
    })
}
