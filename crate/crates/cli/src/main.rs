mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pucci_core::io::{to_json_string, write_csv};
use pucci_core::{Error, Result};
use serde_json::json;

use crate::commands::Outcome;
use crate::config::Resolved;

/// Numerical experiments for degenerate Pucci operators of order p.
#[derive(Parser)]
#[command(name = "pucci", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// JSON report path; tabular output goes next to it with a .csv extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the `tol` key of the subcommand.
    #[arg(long)]
    tol: Option<f64>,
    /// Flat `key = value` parameter file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized sweep over the operator properties.
    OpsProperties {
        #[command(flatten)]
        common: Common,
        /// Check a single matrix read from a file instead of sampling.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Fundamental solutions, the counterexample and the barriers.
    RadialSuite(Common),
    /// Equilibrium values across refinements of a compact set.
    CapacitySuite(Common),
    /// Supersolution bound for the potential of a random measure.
    PotentialCheck(Common),
    /// Finite-difference solve from a config file.
    Solve(Common),
    /// Maximum principle with a punctured boundary.
    Emp(Common),
    /// Annuli with shrinking holes against the full disk.
    Removability(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::OpsProperties { .. } => "ops-properties",
            Command::RadialSuite(_) => "radial-suite",
            Command::CapacitySuite(_) => "capacity-suite",
            Command::PotentialCheck(_) => "potential-check",
            Command::Solve(_) => "solve",
            Command::Emp(_) => "emp",
            Command::Removability(_) => "removability",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::OpsProperties { common, .. } => common,
            Command::RadialSuite(c)
            | Command::CapacitySuite(c)
            | Command::PotentialCheck(c)
            | Command::Solve(c)
            | Command::Emp(c)
            | Command::Removability(c) => c,
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::OpsProperties { .. } => commands::OPS_KEYS,
            Command::RadialSuite(_) => commands::RADIAL_KEYS,
            Command::CapacitySuite(_) => commands::CAPACITY_KEYS,
            Command::PotentialCheck(_) => commands::POTENTIAL_KEYS,
            Command::Solve(_) => commands::SOLVE_KEYS,
            Command::Emp(_) => commands::EMP_KEYS,
            Command::Removability(_) => commands::REMOVABILITY_KEYS,
        }
    }
}

fn configure_threads() -> Result<()> {
    let threads = match std::env::var("PUCCI_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Input(format!("PUCCI_THREADS=`{s}` is not a non-negative integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))
}

fn run(cmd: &Command) -> Result<bool> {
    configure_threads()?;
    let common = cmd.common();
    let mut res = Resolved::load(common.config.as_deref(), cmd.keys(), common.tol)?;
    let outcome: Outcome = match cmd {
        Command::OpsProperties { matrix, .. } => commands::ops_properties(&mut res, common.seed, matrix.as_deref())?,
        Command::RadialSuite(_) => commands::radial_suite(&mut res)?,
        Command::CapacitySuite(_) => commands::capacity_suite(&mut res)?,
        Command::PotentialCheck(_) => commands::potential_check(&mut res, common.seed)?,
        Command::Solve(_) => commands::solve_cmd(&mut res)?,
        Command::Emp(_) => commands::emp(&mut res)?,
        Command::Removability(_) => commands::removability(&mut res)?,
    };
    let envelope = json!({
        "subcommand": cmd.name(),
        "seed": common.seed,
        "config": res.into_values(),
        "passed": outcome.passed,
        "report": outcome.report,
    });
    let text = to_json_string(&envelope)? + "\n";
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if let Some(table) = &outcome.table {
                let header: Vec<&str> = table.header.iter().map(String::as_str).collect();
                write_csv(&csv_path(path), &header, &table.rows)?;
            }
        }
        None => print!("{text}"),
    }
    Ok(outcome.passed)
}

fn csv_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "csv") {
        let mut s = out.as_os_str().to_owned();
        s.push(".fields.csv");
        PathBuf::from(s)
    } else {
        out.with_extension("csv")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: assertion failed, see report", cli.command.name());
            ExitCode::from(1)
        }
        Err(e @ Error::NotConverged(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
