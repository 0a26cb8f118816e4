use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mns_cli::config::{parse_config, RunConfig};
use mns_cli::convergence::convergence;
use mns_cli::run::{simulate, Status};
use mns_cli::verify;
use mns_cli::OUTPUT_ENV;
use mns_core::diagnostics::boost_residual;
use mns_core::initial::random_solenoidal;
use mns_core::{Grid, Model, ModelKind, RieszSign};

// Field buffers are large and short-lived; the system allocator returns them
// to the OS and pays page faults on every reuse.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Pseudo-spectral solver for Riesz-modified Navier-Stokes models on the 3-torus.
#[derive(Parser)]
#[command(name = "mns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Snapshot to restart from; overrides `restart` in the config.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Check operator identities and nonlinear cancellations.
    Verify,
    /// Observed temporal order from repeated step halving.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        halvings: u32,
    },
    /// Galilean boost residual of each model on a random field (exploratory).
    Boost {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drift velocity as `a,b,c`.
        #[arg(long, value_parser = parse_drift, default_value = "0.5,-0.3,0.2")]
        drift: [f64; 3],
    },
}

fn parse_drift(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|p: Vec<f64>| format!("expected 3 comma-separated values, got {}", p.len()))
}

fn load(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        config.output = PathBuf::from(dir);
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, restart } => {
            let mut config = load(&config)?;
            if restart.is_some() {
                config.restart = restart;
            }
            let outcome = simulate(&config)?;
            match outcome.status {
                Status::Completed => {
                    println!(
                        "completed t={} after step {}; output in {}",
                        outcome.t,
                        outcome.step,
                        outcome.output.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Status::BlowUp(reason) => {
                    eprintln!("{reason}");
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Verify => {
            let checks = verify::run_all();
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Convergence { config, halvings } => {
            let config = load(&config)?;
            let table = convergence(&config, halvings)?;
            print!("{table}");
            if let Some(p) = table.min_order() {
                println!("minimum observed order {p:.3}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Boost { n, seed, drift } => {
            let grid = Grid::new(n)?;
            let u = random_solenoidal(&grid, seed, (grid.cutoff() as f64 / 3.0).max(1.0), 1.0)?;
            for kind in ModelKind::ALL {
                let r = boost_residual(&Model::new(kind, RieszSign::Plus), &u, drift)?;
                println!("{:<14} {r:.6e}", kind.name());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
