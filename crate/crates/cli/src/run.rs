//! The three pipelines and the comparison report.

use std::fs;
use std::path::{Path, PathBuf};

use influence_core::geodesic::{
    integrate, ConstantRateWorldline, Forcing, IntegrationConfig, PotentialField, PotentialForcing,
    QuadraticSinePotential, RateForcing, WavePotential, WorldlineStart,
};
use influence_core::trajectory::{fit_rapidity_slope, to_json_string, write_csv, LineFit, TrajectoryPoint};
use influence_core::{simulate, ParticleState, RateField, RateSpec, SimulationConfig};
use serde::Serialize;

use crate::scenario::{Mode, Partials, RatesDoc, Scenario};
use crate::CliError;

/// Trajectory from one pipeline, possibly cut short.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub points: Vec<TrajectoryPoint>,
    pub halted: Option<String>,
    pub max_norm_defect: Option<f64>,
}

impl PipelineRun {
    fn tau_end(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.tau)
    }
}

fn rate_field(rates: &RatesDoc) -> Option<Box<dyn RateField + Sync>> {
    match rates {
        RatesDoc::Constant(r) => Some(Box::new(influence_core::ConstantRates(*r))),
        RatesDoc::Linear(l) => Some(Box::new(*l)),
        _ => None,
    }
}

fn constant_rates(s: &Scenario) -> Result<RateSpec, CliError> {
    match &s.rates {
        RatesDoc::Constant(r) => Ok(*r),
        _ => Err(CliError::Input("the analytic oracle needs constant rates".into())),
    }
}

fn start(s: &Scenario) -> WorldlineStart {
    WorldlineStart { t0: s.initial.t0, x0: s.initial.x0, phi0: s.initial.rapidity() }
}

pub fn run_discrete(s: &Scenario) -> Result<PipelineRun, CliError> {
    let field = rate_field(&s.rates).ok_or_else(|| CliError::Input("discrete mode needs reception rates".into()))?;
    let k0 = s.initial.k0.map(|k| k.factored()).unwrap_or_else(influence_core::FactoredRatio::one);
    let initial = ParticleState::new(k0, s.initial.t0, s.initial.x0);
    let config = SimulationConfig {
        receptions: s.receptions.unwrap_or(0),
        seed: s.seed.ok_or_else(|| CliError::Input("seed is required for discrete simulation".into()))?,
        gap_mode: s.gap_mode,
        noop_probability: s.noop_probability,
    };
    let sim = simulate(&initial, field.as_ref(), &config).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut points = Vec::with_capacity(sim.points.len() + 1);
    points.push(sim.initial);
    points.extend(sim.points);
    Ok(PipelineRun {
        points,
        halted: sim.halted.map(|e| e.to_string()),
        max_norm_defect: None,
    })
}

/// Hides closed-form partials so the field is differenced numerically.
struct NumericOnly<F>(F);

impl<F: PotentialField> PotentialField for NumericOnly<F> {
    fn potentials(&self, t: f64, x: f64) -> influence_core::Result<(f64, f64)> {
        self.0.potentials(t, x)
    }
}

fn potential_field(s: &Scenario) -> Option<Box<dyn PotentialField>> {
    fn wrap<F: PotentialField + 'static>(f: F, p: Partials) -> Box<dyn PotentialField> {
        match p {
            Partials::Analytic => Box::new(f),
            Partials::Numeric => Box::new(NumericOnly(f)),
        }
    }
    match s.rates {
        RatesDoc::QuadraticSine(d) => Some(wrap(QuadraticSinePotential::from(d), s.partials)),
        RatesDoc::Wave(d) => Some(wrap(WavePotential::from(d), s.partials)),
        _ => None,
    }
}

pub fn run_continuum(s: &Scenario, tau_span: f64) -> Result<PipelineRun, CliError> {
    let config = IntegrationConfig { tau_span, step: s.integration_step(), renormalize: s.renormalize };
    let run = if let Some(field) = rate_field(&s.rates) {
        let forcing = RateForcing { field: field.as_ref(), order: s.continuum_order };
        integrate(&forcing as &dyn Forcing, start(s), config)
    } else {
        let field = potential_field(s).expect("rates are either a rate field or a potential field");
        let forcing = PotentialForcing { field: field.as_ref(), fd_step: s.fd_step };
        integrate(&forcing as &dyn Forcing, start(s), config)
    }
    .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(PipelineRun {
        halted: run.diagnostic(),
        max_norm_defect: Some(run.max_norm_defect),
        points: run.points,
    })
}

/// Samples the closed-form worldline on the continuum grid.
pub fn run_analytic(s: &Scenario, tau_span: f64) -> Result<(ConstantRateWorldline, PipelineRun), CliError> {
    let rates = constant_rates(s)?;
    let worldline =
        ConstantRateWorldline::new(&rates, s.continuum_order, start(s)).map_err(|e| CliError::Domain(e.to_string()))?;
    let step = s.integration_step();
    let n = (tau_span / step - 1e-9).ceil().max(0.0) as usize;
    let points = (0..=n)
        .map(|i| worldline.point(if i == n { tau_span } else { i as f64 * step }))
        .collect();
    Ok((worldline, PipelineRun { points, halted: None, max_norm_defect: None }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub max: f64,
    pub rms: f64,
    pub samples: usize,
}

impl Deviation {
    fn from_errors(errors: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut sum_sq, mut n) = (0.0f64, 0.0, 0usize);
        for e in errors {
            max = max.max(e);
            sum_sq += e * e;
            n += 1;
        }
        let rms = if n == 0 { 0.0 } else { (sum_sq / n as f64).sqrt() };
        Self { max, rms, samples: n }
    }
}

/// Distance between two events relative to the reference event's scale, floored at 1.
pub fn relative_position_error(p: &TrajectoryPoint, reference: (f64, f64)) -> f64 {
    let scale = reference.0.abs().max(reference.1.abs()).max(1.0);
    (p.t - reference.0).abs().max((p.x - reference.1).abs()) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub samples: usize,
    pub tau_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<LineFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted: Option<String>,
}

impl PipelineSummary {
    fn of(run: &PipelineRun) -> Self {
        Self {
            samples: run.points.len(),
            tau_end: run.tau_end(),
            slope: fit_rapidity_slope(&run.points),
            max_norm_defect: run.max_norm_defect,
            halted: run.halted.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    // NaN compares false, so a missing fit fails its check.
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviations {
    /// Relative position error of the continuum run against the closed form.
    pub continuum_vs_analytic: Deviation,
    /// Absolute rapidity difference of the discrete run against the closed form.
    pub discrete_vs_analytic_rapidity: Deviation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema: u32,
    pub name: String,
    pub analytic_acceleration: f64,
    pub discrete: PipelineSummary,
    pub continuum: PipelineSummary,
    pub deviations: Deviations,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Slope difference relative to `reference`; absolute when the reference is zero.
fn slope_error(slope: Option<LineFit>, reference: f64) -> f64 {
    match slope {
        Some(f) if reference != 0.0 => ((f.slope - reference) / reference).abs(),
        Some(f) => f.slope.abs(),
        None => f64::INFINITY,
    }
}

pub fn compare_report(
    s: &Scenario,
    worldline: &ConstantRateWorldline,
    discrete: &PipelineRun,
    continuum: &PipelineRun,
) -> CompareReport {
    let a = worldline.acceleration();
    let discrete_summary = PipelineSummary::of(discrete);
    let continuum_summary = PipelineSummary::of(continuum);
    let deviations = Deviations {
        continuum_vs_analytic: Deviation::from_errors(
            continuum.points.iter().map(|p| relative_position_error(p, worldline.position(p.tau))),
        ),
        discrete_vs_analytic_rapidity: Deviation::from_errors(
            discrete.points.iter().map(|p| (p.rapidity - worldline.rapidity(p.tau)).abs()),
        ),
    };
    let tol = s.tolerances;
    let continuum_slope = continuum_summary.slope.map_or(f64::NAN, |f| f.slope);
    let mut checks = vec![
        Check::new("discrete_slope_vs_analytic", slope_error(discrete_summary.slope, a), tol.slope_rel),
        Check::new("continuum_slope_vs_analytic", slope_error(continuum_summary.slope, a), tol.slope_rel),
        Check::new(
            "discrete_slope_vs_continuum",
            slope_error(discrete_summary.slope, continuum_slope),
            tol.slope_rel,
        ),
        Check::new("continuum_position_vs_analytic", deviations.continuum_vs_analytic.max, tol.position_rel),
    ];
    for (name, run) in [("discrete_completed", discrete), ("continuum_completed", continuum)] {
        checks.push(Check::new(name, if run.halted.is_some() { 1.0 } else { 0.0 }, 0.0));
    }
    let pass = checks.iter().all(|c| c.pass);
    CompareReport {
        schema: crate::scenario::SCHEMA_VERSION,
        name: s.name.clone(),
        analytic_acceleration: a,
        discrete: discrete_summary,
        continuum: continuum_summary,
        deviations,
        checks,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    ToleranceFailure = 1,
    Error = 2,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub report: Option<CompareReport>,
    pub diagnostics: Vec<String>,
    pub status: Status,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_trajectory(s: &Scenario, dir: &Path, pipeline: &str, run: &PipelineRun, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let csv = dir.join(format!("{}.{pipeline}.csv", s.name));
    let mut buf = Vec::new();
    write_csv(&mut buf, &run.points).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&csv, &buf)?;
    files.push(csv);
    if s.outputs.json {
        let json = dir.join(format!("{}.{pipeline}.json", s.name));
        write_file(&json, to_json_string(&run.points).as_bytes())?;
        files.push(json);
    }
    Ok(())
}

/// Runs `s` and writes its outputs into `dir`.
///
/// Domain errors part way through still write what was computed; the
/// outcome then carries a diagnostic and [`Status::Error`].
pub fn run_scenario(s: &Scenario, dir: &Path) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let mut runs: Vec<(&str, PipelineRun)> = Vec::new();
    let mut report = None;
    match s.mode {
        Mode::Discrete => runs.push(("discrete", run_discrete(s)?)),
        Mode::Continuum => runs.push(("continuum", run_continuum(s, s.tau_span.unwrap_or(0.0))?)),
        Mode::Analytic => runs.push(("analytic", run_analytic(s, s.tau_span.unwrap_or(0.0))?.1)),
        Mode::Compare => {
            // Continuum and analytic cover the discrete run's proper-time span
            // unless one is given, so the discrete run goes first when needed.
            let (discrete, continuum) = match s.tau_span {
                Some(span) => {
                    let (d, c) = rayon::join(|| run_discrete(s), || run_continuum(s, span));
                    (d?, c?)
                }
                None => {
                    let d = run_discrete(s)?;
                    let c = run_continuum(s, d.tau_end())?;
                    (d, c)
                }
            };
            let span = s.tau_span.unwrap_or_else(|| discrete.tau_end());
            let (worldline, analytic) = run_analytic(s, span)?;
            report = Some(compare_report(s, &worldline, &discrete, &continuum));
            runs.push(("discrete", discrete));
            runs.push(("continuum", continuum));
            runs.push(("analytic", analytic));
        }
    }
    let mut diagnostics = Vec::new();
    for (name, run) in &runs {
        write_trajectory(s, dir, name, run, &mut files)?;
        if let Some(h) = &run.halted {
            diagnostics.push(format!("{name}: {h}"));
        }
    }
    if let Some(r) = &report {
        let path = dir.join(format!("{}.report.json", s.name));
        let mut text = serde_json::to_string_pretty(r).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        files.push(path);
    }
    let status = if !diagnostics.is_empty() {
        Status::Error
    } else if report.as_ref().is_some_and(|r| !r.pass) {
        Status::ToleranceFailure
    } else {
        Status::Ok
    };
    Ok(RunOutcome { files, report, diagnostics, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::parse(text, "test").unwrap()
    }

    #[test]
    fn deviation_statistics() {
        let d = Deviation::from_errors([3.0, 4.0]);
        assert_eq!(d.max, 4.0);
        assert!((d.rms - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Deviation::from_errors([]).rms, 0.0);
    }

    #[test]
    fn slope_error_handles_zero_reference() {
        let fit = LineFit { slope: 1e-3, intercept: 0.0, samples: 2 };
        assert_eq!(slope_error(Some(fit), 0.0), 1e-3);
        assert!((slope_error(Some(fit), 2e-3) - 0.5).abs() < 1e-15);
        assert_eq!(slope_error(None, 1.0), f64::INFINITY);
    }

    #[test]
    fn analytic_grid_matches_continuum_grid() {
        let s = scenario(r#"{"schema":1,"name":"a","mode":"analytic","rates":{"constant":{"r_p":0,"r_q":0.1}},"tau_span":12.0,"step":5.0}"#);
        let (_, a) = run_analytic(&s, 12.0).unwrap();
        let taus: Vec<f64> = a.points.iter().map(|p| p.tau).collect();
        assert_eq!(taus, vec![0.0, 5.0, 10.0, 12.0]);
        let c = run_continuum(&s, 12.0).unwrap();
        assert_eq!(c.points.iter().map(|p| p.tau).collect::<Vec<_>>(), taus);
    }

    #[test]
    fn potential_field_continuum_runs_both_ways() {
        let text = r#"{"schema":1,"name":"w","mode":"continuum","rates":{"wave":{"a":0.1,"b":0.05,"c":0.01,"omega":1.0,"kappa":0.5}},"initial":{"x0":0.5},"tau_span":2.0,"step":0.01,"partials":"PARTIALS"}"#;
        let a = run_continuum(&scenario(&text.replace("PARTIALS", "analytic")), 2.0).unwrap();
        let n = run_continuum(&scenario(&text.replace("PARTIALS", "numeric")), 2.0).unwrap();
        let (pa, pn) = (a.points.last().unwrap(), n.points.last().unwrap());
        assert!((pa.t - pn.t).abs() < 1e-8 && (pa.x - pn.x).abs() < 1e-8);
        assert!(pa.rapidity != 0.0);
    }
}
