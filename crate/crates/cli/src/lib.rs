//! The `gqms` command line: a workspace that walks a grid through
//! initialize, characterize, set goals, plan, execute, analyze and package.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
pub mod config;
pub mod error;
pub mod serve;
pub mod workspace;

pub use error::CliError;
pub use workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "gqms", version, about = "Build, measure and maintain GQM+Strategies grids")]
pub struct Cli {
    /// Workspace directory.
    #[arg(long, global = true, default_value = ".")]
    pub workspace: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Date to use as today (YYYY-MM-DD); also fixes evaluation timestamps.
    #[arg(long, global = true)]
    pub today: Option<NaiveDate>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Dot,
    Svg,
    Bundle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a workspace in an empty or missing directory.
    Init {
        /// Start from this grid file instead of an empty grid.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Record scope, environment, roles, responsibilities and revision intervals.
    Characterize {
        #[arg(long)]
        scope: Option<String>,
        /// Environment descriptor; repeatable, appends.
        #[arg(long = "environment")]
        environment: Vec<String>,
        /// LEVEL=MONTHS revision interval override; repeatable.
        #[arg(long = "interval")]
        intervals: Vec<String>,
        /// NAME=MIN..MAX rank range (either bound may be empty); repeatable.
        #[arg(long = "role")]
        roles: Vec<String>,
        /// TASK=WHO; repeatable.
        #[arg(long = "responsible")]
        responsible: Vec<String>,
        /// Checklist item to mark done; repeatable.
        #[arg(long = "done")]
        done: Vec<String>,
        /// Asset inventory file (JSON) for gap rule G7.
        #[arg(long)]
        inventory: Option<String>,
    },
    /// Parse, validate, gap-analyze and check conflicts in the grid.
    SetGoals,
    /// Generate the measurement plan.
    Plan,
    /// Validate measurement CSV files and add them to the dataset.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate all interpretation models and report new gaps.
    Analyze {
        /// Start of the coverage window; defaults to the first observation.
        #[arg(long)]
        since: Option<NaiveDate>,
    },
    /// Store the grid and latest report as a new snapshot.
    Package { label: String },
    /// Element-level changes between two versions (`vN`, `vN-label` or `current`).
    Diff {
        from: String,
        #[arg(default_value = "current")]
        to: String,
    },
    /// Revision status of every level.
    Status,
    /// Write DOT, SVG or the viewer bundle.
    Export {
        #[arg(value_enum)]
        kind: ExportKind,
        #[arg(long)]
        role: Option<String>,
        /// Element to collapse; repeatable.
        #[arg(long = "collapse")]
        collapse: Vec<String>,
        #[arg(long)]
        hide_gqm: bool,
        /// Output file, or `-` for stdout. Defaults to `reports/grid.<ext>`.
        #[arg(long)]
        out: Option<String>,
    },
    /// Serve the bundle, report, SVG and viewer read-only over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the built viewer; defaults to `<workspace>/viewer`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 success, 1 errors, 2 warnings only.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match commands::dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
