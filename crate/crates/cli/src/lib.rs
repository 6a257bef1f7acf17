//! Scenario runner: reads JSON scenarios, runs the requested verification pipelines and writes reports.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check, 2 on a malformed
//! scenario, 3 when the matrix-dimension cap (`TDUAL_MAX_DIM`) is exceeded.

pub mod run;
pub mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use run::{explain, Dimensions, Report, RunOutcome};
pub use scenario::{parse, prepare, Command, Prepared, Scenario};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed scenario at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed { .. } | CliError::Io(_) => EXIT_MALFORMED,
            CliError::Cap(_) => EXIT_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "tdual", version, about = "Verify T-duality constructions on finite models")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Run a scenario and write its report.
    Run {
        scenario: PathBuf,
        /// Report destination; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print the derived groups and dimensions without running checks.
    Explain {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// Worker threads for independent sections.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report only the named check.
    #[arg(long)]
    pub check: Option<String>,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            seed: None,
            tolerance_scale: 1.0,
            jobs: 1,
            format: Format::Json,
            check: None,
        }
    }
}

fn load(path: &Path, seed: Option<u64>, tolerance_scale: f64) -> Result<Prepared, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut s = parse(&text)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    prepare(s, tolerance_scale)
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Format::Text => run::render_text(report),
    }
}

/// Runs a scenario file; returns the report and the exit code it implies.
pub fn run_scenario(path: &Path, flags: &Flags) -> Result<(Report, i32), CliError> {
    let p = load(path, flags.seed, flags.tolerance_scale)?;
    let mut report = match run::run(&p, flags.jobs.max(1), tdual_core::cech::max_dim()) {
        RunOutcome::Done(r) => *r,
        RunOutcome::Cap(msg) => return Err(CliError::Cap(msg)),
    };
    if let Some(name) = &flags.check {
        if !run::retain_check(&mut report, name) {
            return Err(CliError::Malformed {
                path: "--check".into(),
                message: format!("no check named {name:?} in command {}", p.scenario.command.name()),
            });
        }
    }
    let code = if report.pass { EXIT_PASS } else { EXIT_FAIL };
    Ok((report, code))
}

/// Entry point shared by the binary and the tests.
pub fn main_with(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cli.action {
        Action::Explain { scenario, seed } => load(&scenario, seed, 1.0).map(|p| {
            let _ = stdout.write_all(explain(&p, tdual_core::cech::max_dim()).as_bytes());
            EXIT_PASS
        }),
        Action::Run { scenario, output, flags } => run_scenario(&scenario, &flags).and_then(|(report, code)| {
            let text = render(&report, flags.format);
            match &output {
                Some(path) => {
                    write_atomic(path, text.as_bytes()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    if flags.format == Format::Json {
                        let _ = stdout.write_all(run::render_text(&report).as_bytes());
                    }
                }
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            Ok(code)
        }),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(stderr, "error: {e}");
        e.exit_code()
    })
}
