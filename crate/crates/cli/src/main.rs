//! `qlight`: batch front end for the reservoir-computing and
//! associative-memory engines. Data goes to files under `--out`,
//! progress and diagnostics to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlight_core::io::{ConfigKey, BASIN_KEYS, DATA_KEYS, QAM_KEYS, QRC_KEYS, SUCCESS_KEYS, TRAJECTORY_KEYS, WIGNER_KEYS};
use qlight_core::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "qlight", version, about = "Photonic reservoir computing and quantum associative memory simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config, or a run manifest (JSON) to replay.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seeds used by this subcommand.
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    /// Worker threads; default is the available parallelism.
    #[arg(long, value_name = "INT")]
    pub threads: Option<usize>,
    /// Continue when a fixed Fock cutoff fails the convergence check.
    #[arg(long)]
    pub force: bool,
    /// Debug-level progress on stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One reservoir forecast: result JSON and test predictions.
    #[command(after_help = keys_help(&[QRC_KEYS, DATA_KEYS]))]
    QrcRun(Common),
    /// Cavity squeezing x noise intensity x realization grid of test NMSE.
    #[command(after_help = keys_help(&[QRC_KEYS, DATA_KEYS]))]
    QrcSweep(Common),
    /// Steady state: summary JSON, Wigner grid and Fock distribution.
    #[command(after_help = keys_help(&[QAM_KEYS, WIGNER_KEYS]))]
    QamSteady(Common),
    /// Slowest Liouvillian eigenvalues and the metastable window.
    #[command(after_help = keys_help(&[QAM_KEYS]))]
    QamSpectrum(Common),
    /// Quantum-jump trajectories from a displaced squeezed state.
    #[command(after_help = keys_help(&[QAM_KEYS, TRAJECTORY_KEYS]))]
    QamTrajectories(Common),
    /// Probability of retrieving the a-priori lobe from random initial states.
    #[command(after_help = keys_help(&[QAM_KEYS, SUCCESS_KEYS]))]
    QamSuccess(Common),
    /// Lobe reached from coherent states on a polar grid.
    #[command(after_help = keys_help(&[QAM_KEYS, BASIN_KEYS]))]
    QamBasins(Common),
    /// Fock cutoff search; fails when not converged by qam.max_cutoff.
    #[command(after_help = keys_help(&[QAM_KEYS]))]
    CheckConvergence(Common),
}

fn keys_help(tables: &[&[ConfigKey]]) -> String {
    let width = tables.iter().flat_map(|t| t.iter()).map(|k| k.key.len()).max().unwrap_or(0);
    let mut s = String::from("Config keys (TOML, default in brackets):\n");
    for k in tables.iter().flat_map(|t| t.iter()) {
        s.push_str(&format!("  {:width$}  {} [{}]\n", k.key, k.help, k.default));
    }
    s
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Input => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Physics => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::QrcRun(c) => ("qrc-run", c),
        Command::QrcSweep(c) => ("qrc-sweep", c),
        Command::QamSteady(c) => ("qam-steady", c),
        Command::QamSpectrum(c) => ("qam-spectrum", c),
        Command::QamTrajectories(c) => ("qam-trajectories", c),
        Command::QamSuccess(c) => ("qam-success", c),
        Command::QamBasins(c) => ("qam-basins", c),
        Command::CheckConvergence(c) => ("check-convergence", c),
    };
    let level = if common.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(t) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(name, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
