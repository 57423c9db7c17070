use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use harvester_core::terrain::scenario_course;
use harvester_core::{CourseKind, CourseParams};

use crate::batch::{compare, sweep, sweep_table};
use crate::config::{LoadError, ScenarioConfig};
use crate::runner::{run_scenario_with_sink, RunError};
use crate::trace::{write_summary, write_terrain_csv, TraceWriter, SUMMARY_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "harvester-sim",
    version,
    about = "Cutting-device attitude control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory for traces and reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs with the control loops disabled.
    #[arg(long)]
    no_control: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs one scenario and writes traces plus a summary.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the scenario with and without control and reports the difference.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the scenario once per value of one config key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Canonical terrain courses.
    Courses {
        #[command(subcommand)]
        action: CoursesCommand,
    },
}

#[derive(Subcommand, Debug)]
enum CoursesCommand {
    /// Writes a course profile as CSV to stdout, or to `<out>/<kind>.csv`.
    Emit {
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Run(_) => EXIT_RUN,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Run(m) => m,
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => CliError::Config(format!("config error: {c}")),
            RunError::Io(e) => CliError::Io(format!("io error: {e}")),
            other => CliError::Run(other.to_string()),
        }
    }
}

fn load(path: &Path, common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(path).map_err(|e| match e {
        LoadError::Io(e) => io_err(path, e),
        LoadError::Config(c) => CliError::Config(format!("{}: {c}", path.display())),
    })?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.no_control {
        cfg.control_enabled = false;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn cmd_run(config: &Path, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(config, common)?;
    create_dir(&common.out)?;
    let mut w = TraceWriter::create(&common.out).map_err(|e| io_err(&common.out, e))?;
    let out = run_scenario_with_sink(&cfg, &mut w)?;
    let m = out.metrics;
    let pairs = vec![
        ("control_enabled", cfg.control_enabled.to_string()),
        ("steps", out.steps.to_string()),
        ("rmse_theta", format!("{:.6}", m.rmse_theta)),
        ("rmse_h", format!("{:.6}", m.rmse_h)),
        (
            "score",
            m.score.map_or_else(|| "nan".into(), |v| format!("{v:.6}")),
        ),
        ("dropouts", out.dropouts.to_string()),
    ];
    let path = common.out.join(SUMMARY_FILE);
    write_summary(&path, &pairs).map_err(|e| io_err(&path, e))?;
    for (k, v) in &pairs {
        writeln!(stdout, "{k}={v}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_compare(config: &Path, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(config, common)?;
    create_dir(&common.out)?;
    let (report, ..) = compare(&cfg, Some(&common.out))?;
    let path = common.out.join(SUMMARY_FILE);
    write_summary(&path, &report.summary_pairs()).map_err(|e| io_err(&path, e))?;
    write!(stdout, "{report}\n{}", report.summary_text()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load(config, common)?;
    if cfg.get(param).is_none() {
        return Err(CliError::Config(format!("--param: unknown key `{param}`")));
    }
    let rows = sweep(&cfg, param, values)?;
    let table = sweep_table(param, &rows);
    create_dir(&common.out)?;
    let path = common.out.join("sweep.csv");
    fs::write(&path, &table).map_err(|e| io_err(&path, e))?;
    stdout
        .write_all(table.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn cmd_emit(kind: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let kind: CourseKind = kind
        .parse()
        .map_err(|e: harvester_core::TerrainError| CliError::Config(e.to_string()))?;
    let course =
        scenario_course(kind, &CourseParams::default()).map_err(|e| CliError::Config(e.to_string()))?;
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join(format!("{}.csv", kind.name()));
            let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            write_terrain_csv(f, &course.profile).map_err(|e| io_err(&path, e))
        }
        None => write_terrain_csv(stdout, &course.profile).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    let result = match &cli.command {
        Command::Run { config, common } => cmd_run(config, common, &mut stdout),
        Command::Compare { config, common } => cmd_compare(config, common, &mut stdout),
        Command::Sweep {
            config,
            param,
            values,
            common,
        } => cmd_sweep(config, param, values, common, &mut stdout),
        Command::Courses {
            action: CoursesCommand::Emit { kind, out },
        } => cmd_emit(kind, out.as_deref(), &mut stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
