//! Command-line front end: classify slices, run labeled batches, generate
//! phantoms, render debug images and launch the HTTP service.
//!
//! Exit codes: 0 success, 2 invalid input (error JSON on stderr), 64 usage,
//! 74 I/O failure.

mod commands;
mod error;
mod inputs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clotseg::phantom::PhantomKind;

pub use commands::{batch_report, classify_case, Manifest, ManifestEntry};
pub use error::{CliError, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(
    name = "clotseg",
    version,
    about = "Clot segmentation and classification for True-FISP slices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PipelineOpts {
    /// Filter parameters as inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON")]
    pub params: Option<String>,
    /// Criterion thresholds as inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON")]
    pub thresholds: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one slice with a lumen/clot ROI pair.
    Classify {
        image: PathBuf,
        /// ROI JSON: `{"lumen": …, "clot": …}` or a phantom sidecar.
        roi: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave timings out of the report.
        #[arg(long)]
        no_timings: bool,
    },
    /// Classify every case of a manifest and aggregate statistics.
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timings: bool,
        /// Worker threads (default: all cores).
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
    },
    /// Write synthetic phantom slices with sidecar ROI/label files.
    Phantom {
        #[arg(long, value_enum, default_value = "all")]
        kind: KindArg,
        /// Cases per kind.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        count: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additive Gaussian noise standard deviation.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        /// Also write `manifest.json` listing the cases.
        #[arg(long)]
        manifest: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write 8-bit PNGs of every filter stage, the masks and the clot binary.
    Render {
        image: PathBuf,
        roi: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API over a directory of studies.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        studies: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    RealClot,
    Turbulence,
    CleanLumen,
    All,
}

impl KindArg {
    pub fn kinds(self) -> Vec<PhantomKind> {
        match self {
            KindArg::RealClot => vec![PhantomKind::RealClot],
            KindArg::Turbulence => vec![PhantomKind::Turbulence],
            KindArg::CleanLumen => vec![PhantomKind::CleanLumen],
            KindArg::All => PhantomKind::ALL.to_vec(),
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CLOTSEG_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}

fn report_error(e: &CliError) {
    match e {
        CliError::Validation { .. } => {
            let body = serde_json::to_string(&e.body()).expect("error body serializes");
            eprintln!("{body}");
        }
        other => eprintln!("clotseg: {other}"),
    }
}
