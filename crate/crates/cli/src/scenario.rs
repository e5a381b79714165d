//! Scenario files.

use std::fmt;
use std::path::{Path, PathBuf};

use influence_core::exact::FactoredRatio;
use influence_core::geodesic::{PotentialOrder, QuadraticSinePotential, WavePotential, DEFAULT_FD_STEP};
use influence_core::{GapMode, LinearRates, RateSpec};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Continuum,
    Analytic,
    Compare,
}

/// Where the particle's reception rates, or the potentials directly, come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RatesDoc {
    Constant(RateSpec),
    Linear(LinearRates),
    QuadraticSine(QuadraticSineDoc),
    Wave(WaveDoc),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSineDoc {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveDoc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub omega: f64,
    pub kappa: f64,
}

impl From<QuadraticSineDoc> for QuadraticSinePotential {
    fn from(d: QuadraticSineDoc) -> Self {
        QuadraticSinePotential { alpha: d.alpha, beta: d.beta, gamma: d.gamma }
    }
}

impl From<WaveDoc> for WavePotential {
    fn from(d: WaveDoc) -> Self {
        WavePotential { a: d.a, b: d.b, c: d.c, omega: d.omega, kappa: d.kappa }
    }
}

impl RatesDoc {
    pub fn is_rate_field(&self) -> bool {
        matches!(self, RatesDoc::Constant(_) | RatesDoc::Linear(_))
    }
}

/// A positive rational `k`, written as an integer or a `"p/q"` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalK {
    pub num: u64,
    pub den: u64,
}

impl RationalK {
    pub fn factored(&self) -> FactoredRatio {
        FactoredRatio::from_ratio(self.num, self.den).expect("validated on parse")
    }

    pub fn ln(&self) -> f64 {
        (self.num as f64).ln() - (self.den as f64).ln()
    }
}

impl fmt::Display for RationalK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for RationalK {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid k `{s}`: expected `p/q` with positive integers"));
        let (num, den) = (parse(n)?, parse(d)?);
        if num == 0 || den == 0 {
            return Err(format!("k must be positive, got `{s}`"));
        }
        Ok(Self { num, den })
    }
}

impl<'de> Deserialize<'de> for RationalK {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct KVisitor;
        impl Visitor<'_> for KVisitor {
            type Value = RationalK;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or a \"p/q\" string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<RationalK, E> {
                if v == 0 {
                    return Err(E::custom("k must be positive, got 0"));
                }
                Ok(RationalK { num: v, den: 1 })
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<RationalK, E> {
                Err(E::custom(format!("k must be positive, got {v}")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<RationalK, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(KVisitor)
    }
}

impl Serialize for RationalK {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<RationalK>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub x0: f64,
}

impl Default for Initial {
    fn default() -> Self {
        Self { k0: None, phi0: None, t0: 0.0, x0: 0.0 }
    }
}

impl Initial {
    pub fn rapidity(&self) -> f64 {
        match (self.k0, self.phi0) {
            (Some(k), _) => k.ln(),
            (None, Some(phi)) => phi,
            (None, None) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative error allowed between fitted rapidity slopes.
    #[serde(default = "default_slope_rel")]
    pub slope_rel: f64,
    /// Pointwise relative error allowed between the continuum and analytic worldlines.
    #[serde(default = "default_position_rel")]
    pub position_rel: f64,
}

fn default_slope_rel() -> f64 {
    0.02
}

fn default_position_rel() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { slope_rel: default_slope_rel(), position_rel: default_position_rel() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write each trajectory as a JSON array.
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partials {
    /// Closed-form partials of the potential field.
    #[default]
    Analytic,
    /// Central differences with `fd_step`.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub mode: Mode,
    pub rates: RatesDoc,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_gap_mode")]
    pub gap_mode: GapMode,
    #[serde(default)]
    pub noop_probability: f64,
    #[serde(default)]
    pub continuum_order: PotentialOrder,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default)]
    pub partials: Partials,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_gap_mode() -> GapMode {
    GapMode::Deterministic
}

fn default_true() -> bool {
    true
}

fn default_fd_step() -> f64 {
    DEFAULT_FD_STEP
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl Scenario {
    /// Parses and validates a scenario. `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        Self::parse_with_seed(text, origin, None)
    }

    /// As [`Scenario::parse`], with `seed` replacing the file's seed before validation.
    pub fn parse_with_seed(text: &str, origin: &str, seed: Option<u64>) -> Result<Self, CliError> {
        let mut scenario: Scenario = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })?;
        if seed.is_some() {
            scenario.seed = seed;
        }
        scenario.validate().map_err(|(key, msg)| {
            let at = key.and_then(|k| line_of(text, k)).map(|l| format!(":{l}")).unwrap_or_default();
            CliError::Input(format!("{origin}{at}: {msg}"))
        })?;
        Ok(scenario)
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse_with_seed(&text, &path.display().to_string(), seed)
    }

    fn validate(&self) -> Result<(), (Option<&'static str>, String)> {
        if self.schema != SCHEMA_VERSION {
            return Err((Some("schema"), format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err((Some("name"), format!("name `{}` must be a plain, non-empty file stem", self.name)));
        }
        if self.initial.k0.is_some() && self.initial.phi0.is_some() {
            return Err((Some("initial"), "give either k0 or phi0, not both".into()));
        }
        let needs_rates = matches!(self.mode, Mode::Discrete | Mode::Analytic | Mode::Compare);
        if needs_rates && !self.rates.is_rate_field() {
            return Err((Some("rates"), format!("{:?} mode needs constant or linear reception rates", self.mode).to_lowercase()));
        }
        if matches!(self.mode, Mode::Analytic | Mode::Compare) && !matches!(self.rates, RatesDoc::Constant(_)) {
            return Err((Some("rates"), "the analytic oracle needs constant rates".into()));
        }
        let discrete = matches!(self.mode, Mode::Discrete | Mode::Compare);
        if discrete {
            if self.seed.is_none() {
                return Err((Some("mode"), "seed is required for discrete simulation".into()));
            }
            if self.receptions.is_none() {
                return Err((Some("mode"), "receptions is required for discrete simulation".into()));
            }
            if self.initial.phi0.is_some() {
                return Err((Some("phi0"), "discrete simulation needs a rational k0, not phi0".into()));
            }
            if let RatesDoc::Constant(r) = &self.rates {
                if r.total().is_nan() || r.total() <= 0.0 {
                    return Err((Some("rates"), "discrete simulation needs a positive total rate".into()));
                }
            }
        }
        if matches!(self.mode, Mode::Continuum | Mode::Analytic) && self.tau_span.is_none() {
            return Err((Some("mode"), "tau_span is required for continuum and analytic runs".into()));
        }
        if let Some(span) = self.tau_span {
            if !(span >= 0.0 && span.is_finite()) {
                return Err((Some("tau_span"), format!("tau_span must be non-negative, got {span}")));
            }
        }
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return Err((Some("step"), format!("step must be positive, got {step}")));
            }
        }
        if matches!(self.mode, Mode::Continuum | Mode::Compare) && self.step.is_none() {
            let has_default = matches!(&self.rates, RatesDoc::Constant(r) if r.total() > 0.0);
            if !has_default {
                return Err((Some("mode"), "step is required unless the rates are constant with a positive total".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.noop_probability) {
            return Err((Some("noop_probability"), format!("noop_probability {} outside [0, 1]", self.noop_probability)));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err((Some("fd_step"), format!("fd_step must be positive, got {}", self.fd_step)));
        }
        if !(self.tolerances.slope_rel >= 0.0 && self.tolerances.position_rel >= 0.0) {
            return Err((Some("tolerances"), "tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// Default integration step: one mean reception interval `dτ = 1/(2r̃)`.
    pub fn integration_step(&self) -> f64 {
        self.step.unwrap_or_else(|| match &self.rates {
            RatesDoc::Constant(r) => r.proper_time_step().expect("validated"),
            _ => unreachable!("validated"),
        })
    }
}
