use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use influence_cli::{export_network, resolve_out_dir, run_batch, run_scenario, CliError, Scenario, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "influence", version, about = "Influence-network particle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectories (and report, in compare mode).
    Run {
        scenario: PathBuf,
        /// Output directory; overrides the scenario and the environment default.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Replace the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a network file as a Graphviz digraph.
    ExportNetwork {
        network: PathBuf,
        /// Destination file; `-` writes to stdout. Defaults to `<out dir>/<stem>.dot`.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run every `*.json` scenario in a directory, each into its own subdirectory.
    Batch {
        dir: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Scenarios run concurrently.
        #[arg(short, long, default_value_t = 1)]
        jobs: usize,
    },
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn run(path: &Path, out_dir: Option<&Path>, seed: Option<u64>) -> Result<i32, CliError> {
    let scenario = Scenario::load(path, seed)?;
    let dir = resolve_out_dir(out_dir, &scenario, env_out_dir().as_deref());
    let outcome = run_scenario(&scenario, &dir)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    for d in &outcome.diagnostics {
        eprintln!("error: run stopped early: {d}");
    }
    if let Some(r) = &outcome.report {
        for c in r.checks.iter().filter(|c| !c.pass) {
            eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
        }
    }
    Ok(outcome.status as i32)
}

fn export(network: &Path, output: Option<&Path>, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let (dot, warnings) = export_network(network)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    match output {
        Some(p) if p == Path::new("-") => {
            std::io::stdout().write_all(dot.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
        _ => {
            let path = match output {
                Some(p) => p.to_path_buf(),
                None => {
                    let dir = out_dir.map(Path::to_path_buf).or_else(env_out_dir).unwrap_or_else(|| PathBuf::from("."));
                    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                    let stem = network.file_stem().unwrap_or_default().to_string_lossy();
                    dir.join(format!("{stem}.dot"))
                }
            };
            std::fs::write(&path, dot).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
    }
    Ok(0)
}

fn batch(dir: &Path, out_dir: Option<&Path>, seed: Option<u64>, jobs: usize) -> Result<i32, CliError> {
    let out = out_dir.map(Path::to_path_buf).or_else(env_out_dir).unwrap_or_else(|| PathBuf::from("."));
    let items = run_batch(dir, &out, seed, jobs)?;
    let mut code = 0;
    for item in &items {
        let status = match &item.result {
            Ok(o) if o.status as i32 == 0 => "ok".to_string(),
            Ok(o) if o.status as i32 == 1 => "tolerance failure".to_string(),
            Ok(o) => format!("stopped early: {}", o.diagnostics.join("; ")),
            Err(e) => format!("error: {e}"),
        };
        println!("{}: {status}", item.path.display());
        code = code.max(item.exit_code());
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out_dir, seed } => run(scenario, out_dir.as_deref(), *seed),
        Command::ExportNetwork { network, output, out_dir } => export(network, output.as_deref(), out_dir.as_deref()),
        Command::Batch { dir, out_dir, seed, jobs } => batch(dir, out_dir.as_deref(), *seed, *jobs),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
