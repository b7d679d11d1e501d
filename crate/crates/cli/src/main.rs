//! `dcform`: forming-index sweeps, classification, time-domain runs,
//! oracle checks and plots for DC microgrid source converters.

mod commands;
mod error;
mod output;
mod plot;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "dcform", version, about = "Forming-index analysis of DC microgrid source converters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Controllers to run instead of the scenario's own (`all` selects the five laws).
    #[arg(long, value_delimiter = ',')]
    controllers: Vec<String>,
    /// Label tolerance (sweep, classify) or the tolerance of every check (verify).
    #[arg(long)]
    tol: Option<f64>,
    /// Indices to evaluate: oii, cfi, vfi.
    #[arg(long, value_delimiter = ',')]
    indices: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one CSV per controller and index.
    Sweep(Common),
    /// Report label bands per index and the passivity screen.
    Classify(Common),
    /// Run the load-step experiment; writes traces and a metrics table.
    Simulate(Common),
    /// Run the cross-checks between analytic and numerical impedances.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Multiply every analytic output impedance by this gain (fault injection).
        #[arg(long, hide = true)]
        debug_scale_zout: Option<f64>,
    },
    /// Render sweep or trace CSVs to SVG.
    Plot {
        /// CSV files written by `sweep` or `simulate`.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Shade frequencies above this current-loop bandwidth (rad/s).
        #[arg(long)]
        omega_bi: Option<f64>,
        /// Take the shading bandwidth from this scenario's converter.
        #[arg(long, conflicts_with = "omega_bi")]
        scenario: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DCFORM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("DCFORM_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Sweep(c) => {
            let sc = Scenario::load(&c.scenario)?;
            let cases = commands::select_cases(&sc, &c.controllers)?;
            let kinds = commands::parse_indices(&sc, &c.indices)?;
            commands::sweep(&sc, &cases, &kinds, c.tol, &c.out)
        }
        Command::Classify(c) => {
            let sc = Scenario::load(&c.scenario)?;
            let cases = commands::select_cases(&sc, &c.controllers)?;
            let kinds = commands::parse_indices(&sc, &c.indices)?;
            commands::classify(&sc, &cases, &kinds, c.tol, &c.out)
        }
        Command::Simulate(c) => {
            let sc = Scenario::load(&c.scenario)?;
            let cases = commands::select_cases(&sc, &c.controllers)?;
            commands::simulate_cmd(&sc, &cases, &c.out)
        }
        Command::Verify {
            common: c,
            debug_scale_zout,
        } => {
            let sc = Scenario::load(&c.scenario)?;
            let mut cases = commands::select_cases(&sc, &c.controllers)?;
            commands::verify(&sc, &mut cases, c.tol, debug_scale_zout, &c.out)
        }
        Command::Plot {
            inputs,
            out,
            omega_bi,
            scenario,
        } => {
            let omega_bi = match scenario {
                Some(p) => {
                    let sc = Scenario::load(&p)?;
                    let p = sc.params();
                    let frac = sc.options()?.bandwidth_fraction;
                    Some(dcform_core::control::tune_current_controller(&p, frac)?.omega_bi)
                }
                None => omega_bi,
            };
            for p in plot::plot(&inputs, omega_bi, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcform: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
