//! Command-line front end of mcflab: `run` executes one scenario spec into
//! a run directory, `sweep` runs a parameter grid in parallel and tabulates
//! the verdicts, `plotdata` turns a run directory into plot-ready CSV.
//!
//! Exit codes: 0 when every verdict passes, 1 for failed verdicts, runtime
//! errors and incomplete run directories, 2 for usage and validation errors.

pub mod error;
pub mod plotdata;
pub mod rundir;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};
use plotdata::PlotKind;
use rundir::SpecOverrides;

/// Numerical laboratory for mean curvature flow.
#[derive(Debug, Parser)]
#[command(name = "mcflab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario spec and write its run directory.
    Run(RunArgs),
    /// Run every point of a parameter grid and write sweep.csv.
    Sweep(SweepArgs),
    /// Emit plot-ready CSV from a run directory.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct OutputRoot {
    /// Root for output directories when --out is not given.
    #[arg(long, env = "MCFLAB_OUT", default_value = "runs")]
    pub out_root: PathBuf,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Replace the seed of the spec.
    #[arg(long)]
    pub seed_override: Option<u64>,
    /// Replace the resolution of the spec.
    #[arg(long)]
    pub resolution_override: Option<usize>,
}

impl From<&Overrides> for SpecOverrides {
    fn from(o: &Overrides) -> Self {
        SpecOverrides {
            seed: o.seed_override,
            resolution: o.resolution_override,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Run directory; must be absent or empty. Defaults to
    /// <out-root>/<spec output name or scenario_seed>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub root: OutputRoot,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec (JSON): a base scenario spec and a grid of dotted paths.
    #[arg(long)]
    pub spec: PathBuf,
    /// Sweep directory; must be absent or empty. Defaults to
    /// <out-root>/<sweep file stem>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of runs executed concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub parallelism: u16,
    #[command(flatten)]
    pub root: OutputRoot,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run directory written by `mcflab run`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> CliResult<i32> {
    match command {
        Command::Run(a) => {
            let spec = rundir::load_spec(&a.spec, (&a.overrides).into())?;
            let out = a.out.unwrap_or_else(|| {
                let name = spec
                    .output
                    .clone()
                    .unwrap_or_else(|| format!("{}_{}", spec.params.id(), spec.seed));
                a.root.out_root.join(name)
            });
            let verdict = rundir::execute(&spec, &out)?;
            println!(
                "{} {} -> {}",
                if verdict.pass { "PASS" } else { "FAIL" },
                verdict.scenario,
                out.display()
            );
            for f in &verdict.failures {
                eprintln!("  {f}");
            }
            Ok(if verdict.pass { 0 } else { 1 })
        }
        Command::Sweep(a) => {
            let out = a.out.unwrap_or_else(|| {
                let stem = a.spec.file_stem().map_or_else(|| "sweep".into(), |s| s.to_os_string());
                a.root.out_root.join(stem)
            });
            let rows = sweep::run_sweep(&a.spec, &out, a.parallelism as usize, (&a.overrides).into())?;
            let passed = rows.iter().filter(|r| r.verdict.as_ref().is_some_and(|v| v.pass)).count();
            println!("{passed}/{} runs passed -> {}", rows.len(), out.join(sweep::SWEEP_CSV).display());
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("  run_{:04}: {}", r.run, r.error.as_deref().unwrap_or_default());
            }
            Ok(if sweep::all_pass(&rows) { 0 } else { 1 })
        }
        Command::Plotdata(a) => {
            let table = plotdata::plotdata(&a.run, a.kind)?;
            write_output(a.out.as_deref(), &table)?;
            Ok(0)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(CliError::io(p)),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>")(e)),
            _ => Ok(()),
        },
    }
}
