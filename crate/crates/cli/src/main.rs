//! `hkc`: stability verdicts, wall and stratum diagrams, and vortex solves
//! for extensions of line bundles on an elliptic curve.
//!
//! Human-readable tables go to standard output; with `--out DIR` the
//! machine-readable records (CSV, plot data, field snapshots) and the run
//! manifest are written there as well. Exit codes: 0 success, 2 some flow
//! ended indeterminate, 1 error.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Config, Overrides};
use error::CliError;
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "hkc", version, about = "Stability chambers and vortex solves for line-bundle extensions")]
struct Cli {
    /// TOML run configuration (schema in the README).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV, plot data, snapshots and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Re-run exactly the configuration recorded in a manifest.
    #[arg(long, global = true, conflicts_with = "config")]
    replay: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Verdicts in the three equivalent viewpoints.
    Analyze,
    /// Wall arrangement, critical values and plot data.
    Walls,
    /// The alpha-stratification chain.
    Strata,
    /// Run the gradient flow at one parameter.
    Solve,
    /// Run the flow over a list of alphas and compare with the verdicts.
    Sweep,
    /// Run the invariant suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Walls => "walls",
            Command::Strata => "strata",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

/// Outcome of a command that did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Done,
    /// Some flow exhausted its budget without a decision.
    Indeterminate,
}

/// Where command output goes: stdout always, files under `--out` if given.
/// Every file starts with the manifest hash line.
pub struct Output {
    dir: Option<PathBuf>,
    header: String,
}

impl Output {
    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub fn file(&self, name: &str, body: &str) -> Result<(), CliError> {
        if let Some(path) = self.path(name) {
            let text = format!("{}\n{body}", self.header);
            std::fs::write(&path, text).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        }
        Ok(())
    }

    /// Like [`Output::file`] for content produced by a writer.
    pub fn file_with(
        &self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        if self.dir.is_some() {
            let mut buf = Vec::new();
            write(&mut buf)?;
            self.file(name, &String::from_utf8_lossy(&buf))?;
        }
        Ok(())
    }
}

fn resolve(cli: &Cli) -> Result<Config, CliError> {
    match &cli.replay {
        Some(path) => {
            let m = RunManifest::read(path)?;
            if m.command != cli.command.name() {
                return Err(CliError::Manifest(format!(
                    "manifest records `{}`, not `{}`",
                    m.command,
                    cli.command.name()
                )));
            }
            Ok(m.config)
        }
        None => Config::load(cli.config.as_deref(), &cli.overrides),
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))
}

fn run(cli: Cli) -> Result<Completion, CliError> {
    let cfg = resolve(&cli)?;
    let mut manifest = RunManifest::new(cli.command.name(), &cfg);
    if let Some(dir) = &cli.out {
        prepare_dir(dir)?;
    }
    let out = Output { dir: cli.out.clone(), header: manifest.header() };
    let start = Instant::now();
    let done = match cli.command {
        Command::Analyze => commands::analyze(&cfg, &out),
        Command::Walls => commands::walls(&cfg, &out),
        Command::Strata => commands::strata(&cfg, &out),
        Command::Solve => commands::solve(&cfg, &out),
        Command::Sweep => commands::sweep(&cfg, &out),
        Command::Verify => commands::verify(&cfg, &out),
    }?;
    manifest.finish(start.elapsed());
    if let Some(path) = out.path("manifest.json") {
        manifest.write(&path)?;
    }
    println!("{}", manifest.header());
    Ok(done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Completion::Done) => ExitCode::SUCCESS,
        Ok(Completion::Indeterminate) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
