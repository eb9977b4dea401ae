//! The `patchup` command-line driver.
//!
//! Exit codes: 0 on success, 1 for unreadable or malformed files, 2 for an
//! invalid configuration (bad flags, or parameters the input cannot satisfy).

mod bench;
mod eval;
mod upsample;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

pub use bench::{bench_cell, summary_header, BenchArgs, BenchCell, BenchRow, SUMMARY_COLUMNS};
pub use eval::{evaluate_normalized, EvalArgs};
pub use upsample::{run_pipeline, RunManifest, StageRecord, UpsampleArgs};

use crate::error::Error;
use crate::upsampler::OffsetPattern;

pub const TOOL_VERSION: &str = concat!("patchup ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "patchup", version, about = "Point cloud upsampling on fitted bicubic patches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upsample a point cloud.
    Upsample(UpsampleArgs),
    /// Compare a predicted cloud against ground truth.
    Eval(EvalArgs),
    /// Run the synthetic analytic-surface benchmark.
    Bench(BenchArgs),
}

/// Flags shared by `upsample` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct PatchArgs {
    /// Neighbors per patch fit.
    #[arg(long, default_value_t = crate::patch_fit::DEFAULT_K)]
    pub k: usize,
    /// Child offset pattern: ring or halton.
    #[arg(long, default_value = "ring", value_parser = parse_pattern)]
    pub pattern: OffsetPattern,
    /// Child offset radius as a fraction of the neighborhood scale.
    #[arg(long, default_value_t = 0.5)]
    pub offset_radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Displacement-loss weight reported in manifests.
    #[arg(long, default_value_t = crate::patch_fit::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Ridge weight of the bicubic fit.
    #[arg(long, default_value_t = crate::patch_fit::DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Keep the fitted constant term instead of pinning patches to their parent.
    #[arg(long)]
    pub no_pin_origin: bool,
}

fn parse_pattern(s: &str) -> Result<OffsetPattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::UnsupportedFormat(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Upsample(a) => upsample::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}

pub(crate) fn ensure_parent(path: &std::path::Path) -> crate::error::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("directory {} does not exist", parent.display()),
            )));
        }
    }
    Ok(())
}
