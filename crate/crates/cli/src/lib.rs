//! Scenario runner and network export behind the `influence` binary.

pub mod run;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use influence_core::poset::InfluenceNetwork;

pub use run::{run_scenario, CompareReport, RunOutcome, Status};
pub use scenario::Scenario;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "INFLUENCE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Output directory: the explicit flag, then the scenario's own setting, then
/// the environment default, then the working directory.
pub fn resolve_out_dir(flag: Option<&Path>, scenario: &Scenario, env: Option<&Path>) -> PathBuf {
    flag.or(scenario.outputs.dir.as_deref())
        .or(env)
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

/// DOT text for a network file, plus one warning line per collinearity violation.
pub fn export_network(path: &Path) -> Result<(String, Vec<String>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let net = InfluenceNetwork::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let warnings = match net.collinearity_scan_all() {
        Ok(v) => v
            .iter()
            .map(|v| {
                format!(
                    "warning: collinearity violation: `{}` emits toward {} immediately before `{}` receives from {}",
                    v.emission,
                    v.side.as_str(),
                    v.reception,
                    v.side.as_str()
                )
            })
            .collect(),
        Err(e) => vec![format!("warning: collinearity not checked: {e}")],
    };
    Ok((net.to_dot(), warnings))
}

/// Scenario files (`*.json`) directly inside `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// One line of batch output.
#[derive(Debug)]
pub struct BatchItem {
    pub path: PathBuf,
    pub result: Result<RunOutcome, CliError>,
}

impl BatchItem {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(o) => o.status as i32,
            Err(e) => e.exit_code(),
        }
    }
}

/// Runs every scenario in `dir`, each writing into `<out>/<file stem>/`.
/// Results come back in file order regardless of `jobs`.
pub fn run_batch(dir: &Path, out: &Path, seed: Option<u64>, jobs: usize) -> Result<Vec<BatchItem>, CliError> {
    use rayon::prelude::*;
    let files = scenario_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let result = Scenario::load(path, seed).and_then(|s| run_scenario(&s, &out.join(stem)));
                BatchItem { path: path.clone(), result }
            })
            .collect()
    }))
}
