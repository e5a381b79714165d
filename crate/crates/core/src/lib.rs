//! Influence networks of chained events, the quantification of their
//! intervals by counting, the stochastic dynamics of a particle exchanging
//! influences with two observers, and its continuum limit.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod geodesic;
pub mod poset;
pub mod quantify;
pub mod rates;
pub mod trajectory;

pub use dynamics::{simulate, simulate_with, GapMode, ParticleState, Reception, Simulation, SimulationConfig};
pub use error::{Error, Result};
pub use exact::{FactoredRatio, Scalar};
pub use geodesic::{
    integrate, ConstantRateWorldline, HyperbolicParams, Integration, IntegrationConfig, PotentialOrder, RateForcing, WorldlineStart,
};
pub use poset::{ChainId, ChainRole, EventId, EventKind, InfluenceNetwork, NetworkBuilder, NetworkDoc, Side};
pub use quantify::{Interval, SpacetimeIncrement};
pub use rates::{ConstantRates, LinearRates, RateField, RateSpec};
pub use trajectory::{LineFit, TrajectoryPoint};
