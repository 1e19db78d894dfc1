use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fiberpair::commands::{run, Command, Options};
use fiberpair::config::load_config;
use fiberpair::exec::RayonExecutor;

/// Photon-pair source simulator: efficiency budget, g² sweep, tomography, HOM.
///
/// Log verbosity follows FIBERPAIR_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Randomized commands require this; there is no default seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Efficiency budget table (budget.csv).
    Budget(#[command(flatten)] Common),
    /// g²(0), C/A and rates against pump power (g2_sweep.csv).
    G2Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pump powers in mW; an empty value gives a header-only CSV.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        powers: Option<Vec<f64>>,
        /// Pulses per power point.
        #[arg(long)]
        pulses: Option<u64>,
        /// Also write click records (clicks_<k>.bin plus JSON sidecar).
        #[arg(long)]
        records: bool,
    },
    /// Tetrahedral tomography of the Sagnac source (tomogram.json, state_report.json).
    Tomo {
        #[command(flatten)]
        common: Common,
        /// Pulses per analyzer setting.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Four-fold HOM delay scan (hom_scan.csv, hom_summary.json).
    Hom {
        #[command(flatten)]
        common: Common,
        /// Comma-separated delays in fs.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delays: Option<Vec<f64>>,
        /// Pulses per delay point.
        #[arg(long)]
        pulses: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FIBERPAIR_LOG", "warn")).init();
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    let (command, common, opts) = match cli.command {
        Cmd::Budget(c) => (Command::Budget, c, Options::default()),
        Cmd::G2Sweep {
            common,
            powers,
            pulses,
            records,
        } => (
            Command::G2Sweep,
            common,
            Options {
                powers: powers.map(|p| p.into_iter().collect()),
                pulses,
                records,
                ..Options::default()
            },
        ),
        Cmd::Tomo { common, pulses } => (
            Command::Tomo,
            common,
            Options {
                pulses,
                ..Options::default()
            },
        ),
        Cmd::Hom { common, delays, pulses } => (
            Command::Hom,
            common,
            Options {
                delays_fs: delays,
                pulses,
                ..Options::default()
            },
        ),
    };
    let opts = Options {
        seed: common.seed,
        ..opts
    };
    let cfg = load_config(&common.config)?;
    let exec = RayonExecutor::new(common.threads)?;
    log::info!("{} on {} threads", command.name(), exec.threads());
    let manifest = run(command, &cfg, &opts, &common.out, &exec)?;
    for f in &manifest.outputs {
        println!("{}", common.out.join(f).display());
    }
    Ok(())
}
