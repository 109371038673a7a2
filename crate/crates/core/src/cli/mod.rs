//! Command-line experiment runner.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 numerical
//! failure.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::Error;
pub use commands::{Axis, RunReport, Summary, SweepRow, WellReport};
pub use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "wavewell",
    version,
    about = "Potential-well constants, damped wave runs and decay certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file of `key = value` lines
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the `output` key and $WAVEWELL_OUTPUT_DIR)
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute C*, d, β and λ₁; writes well.json
    Well(Common),
    /// Prepare the initial data and place it relative to the well; writes
    /// classify.json, u0.txt and u1.txt
    Classify(Common),
    /// Integrate, monitor and certify; writes series.csv and report.json
    Run(Common),
    /// Run a parameter grid; writes point_NNN/ per point and sweep.csv
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid axis `key=v1,v2,...`; repeatable, first axis outermost
        #[arg(long, value_name = "KEY=VALUES", required = true)]
        vary: Vec<String>,
        /// Worker threads (overrides the `workers` key; 0 uses all cores)
        #[arg(short, long)]
        workers: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref(), &common.set)?;
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. }
        | Error::StepFailure { .. }
        | Error::NonFinite
        | Error::ZeroField
        | Error::HypothesesUnmet { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Well(c) => {
            let path = commands::cmd_well(&load(&c)?)?;
            println!("{}", path.display());
        }
        Command::Classify(c) => {
            let (path, rep) = commands::cmd_classify(&load(&c)?)?;
            let k = &rep.classification;
            println!(
                "{:?} in_W={} in_U={} E/d={} admissible={}",
                k.region, k.in_w, k.in_u, rep.e0_over_d, k.admissible
            );
            println!("{}", path.display());
        }
        Command::Run(c) => {
            let (dir, rep) = commands::cmd_run(&load(&c)?)?;
            let s = &rep.summary;
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
            println!(
                "{} t={} xi={} xi_fitted={} t_max={}",
                s.outcome,
                s.t_end,
                opt(s.xi),
                opt(s.xi_fitted),
                opt(s.t_max_estimate)
            );
            println!("{}", dir.display());
        }
        Command::Sweep { common, vary, workers } => {
            let mut cfg = load(&common)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let axes = vary.iter().map(|v| Axis::parse(v)).collect::<Result<Vec<_>, _>>()?;
            let (path, rows) = commands::cmd_sweep(&cfg, &axes)?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!("{} points, {} failed", rows.len(), failed);
            println!("{}", path.display());
        }
    }
    Ok(())
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let help = config::keys_help();
    let mut cmd = Cli::command().after_long_help(help.clone());
    for name in ["well", "classify", "run", "sweep"] {
        cmd = cmd.mut_subcommand(name, |s| s.after_long_help(help.clone()));
    }
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
