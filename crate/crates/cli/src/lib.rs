//! Command-line front end: single points, sweeps over `k`, order-by-order
//! convergence tables and the validation suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod validation;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::{Parser, Subcommand};

use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::validation::ValidationSettings;

#[derive(Debug, Parser)]
#[command(name = "adia", version, about = "Transfer matrices from the adiabatic series and an exact solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transfer matrix and amplitudes at one wavenumber
    Compute(ConfigArgs),
    /// One CSV row per wavenumber of a k range
    Sweep(ConfigArgs),
    /// Residual of each partial sum against the exact matrix
    Converge(ConfigArgs),
    /// Run the built-in validation suite
    Validate {
        /// Multiply every solver tolerance by this factor
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Run a single criterion (1-12)
        #[arg(long)]
        only: Option<usize>,
        #[arg(long, hide = true)]
        break_parity: bool,
    },
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            let r = f(&mut w);
            w.flush()?;
            r
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let r = f(&mut w);
            w.flush()?;
            r
        }
    }
}

fn validate(tol_scale: f64, only: Option<usize>, break_parity: bool) -> CliResult<i32> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(CliError::config(format!("tol-scale must be positive, got {tol_scale}")));
    }
    let ids: Vec<usize> = match only {
        Some(id) if (1..=validation::CRITERIA.len()).contains(&id) => vec![id],
        Some(id) => return Err(CliError::config(format!("no criterion {id}"))),
        None => (1..=validation::CRITERIA.len()).collect(),
    };
    let settings = ValidationSettings { tol_scale, break_parity };
    let mut failed = 0;
    for id in ids {
        let r = validation::run_criterion(id, &settings);
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    println!(
        "{}",
        if failed == 0 { "all criteria passed".to_string() } else { format!("{failed} criterion(s) failed") }
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Compute(args) => {
            args.resolve().and_then(|cfg| with_output(cfg.out.as_deref(), |w| commands::compute(&cfg, w)))
        }
        Command::Sweep(args) => {
            args.resolve().and_then(|cfg| with_output(cfg.out.as_deref(), |w| commands::sweep(&cfg, w)))
        }
        Command::Converge(args) => {
            args.resolve().and_then(|cfg| with_output(cfg.out.as_deref(), |w| commands::converge(&cfg, w)))
        }
        Command::Validate { tol_scale, only, break_parity } => match validate(tol_scale, only, break_parity) {
            Ok(code) => return code,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("adia: {e}");
            e.exit_code()
        }
    }
}
