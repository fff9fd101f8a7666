use clap::Parser;
use shear_stability::exec::Execution;
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod config;
mod output;

use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] shear_stability::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

const LONG_ABOUT: &str = "\
Linear stability of wind over water.

All quantities are SI: densities kg/m^3, g m/s^2, sigma N/m, depths and x2 in m,
wavenumbers rad/m, speeds m/s. Depths accept `inf`.

Commands: ck, kh, solve, sweep, asym, certify-stable, pwl.
Exit status: 0 success, 2 configuration error, 3 solver failure.";

#[derive(Debug, Parser)]
#[command(name = "shearstab", version, about = "Linear stability of wind over water", long_about = LONG_ABOUT)]
struct Args {
    /// INI configuration file; built-in defaults are used without one.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Command to run, overriding [run] command.
    #[arg(long, value_name = "NAME")]
    command: Option<String>,
    /// Output file, overriding [output] path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// csv or json, overriding [output] format.
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,
    /// Worker threads for sweeps; 1 runs sequentially.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &args.command {
        cfg.command = c.parse()?;
    }
    if let Some(p) = &args.output {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = &args.format {
        cfg.output.format = f.parse()?;
    }
    Ok(cfg)
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = load(args)?;
    if args.dump_config {
        return emit(&cfg.to_ini(), args.output.as_ref());
    }
    let table = match args.jobs {
        Some(1) => commands::run(&cfg, Execution::Sequential)?,
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("--jobs {n}: {e}")))?;
            pool.install(|| commands::run(&cfg, Execution::Parallel))?
        }
        None => commands::run(&cfg, Execution::Parallel)?,
    };
    for note in &table.notes {
        eprintln!("note: {note}");
    }
    let text = match cfg.output.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    emit(&text, cfg.output.path.as_ref())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shearstab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
