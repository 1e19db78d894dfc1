//! The four experiment commands. Each writes its files into an output
//! directory and returns the names it wrote.

mod budget;
mod g2_sweep;
mod hom;
mod tomo;

use std::path::Path;
use std::time::Instant;

use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::exec::BlockExecutor;

pub use budget::{budget_table, cmd_budget, BudgetRow};
pub use g2_sweep::{cmd_g2_sweep, G2_SWEEP_FILE};
pub use hom::{cmd_hom, HomSummary, HOM_SCAN_FILE, HOM_SUMMARY_FILE};
pub use tomo::{cmd_tomo, StateReportFile, TomogramFile, STATE_REPORT_FILE, TOMOGRAM_FILE};

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::output::write_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Budget,
    G2Sweep,
    Tomo,
    Hom,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Budget => "budget",
            Command::G2Sweep => "g2-sweep",
            Command::Tomo => "tomo",
            Command::Hom => "hom",
        }
    }
}

/// Command-line overrides shared by the commands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub seed: Option<u64>,
    /// Pulses per power point, per tomography setting, or per delay point.
    pub pulses: Option<u64>,
    pub powers: Option<Vec<f64>>,
    pub delays_fs: Option<Vec<f64>>,
    /// Also write the click records of each g² run.
    pub records: bool,
}

impl Options {
    fn seed(&self, command: Command) -> anyhow::Result<u64> {
        self.seed
            .ok_or_else(|| anyhow::anyhow!("`{}` needs an explicit --seed", command.name()))
    }
}

/// Runs a command and writes its manifest next to its outputs.
pub fn run<E: BlockExecutor>(
    command: Command,
    cfg: &ExperimentConfig,
    opts: &Options,
    out: &Path,
    exec: &E,
) -> anyhow::Result<RunManifest> {
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new(command.name(), cfg, opts.seed)?;
    manifest.outputs = match command {
        Command::Budget => cmd_budget(cfg, out)?,
        Command::G2Sweep => cmd_g2_sweep(cfg, opts.seed(command)?, opts, out, exec)?,
        Command::Tomo => cmd_tomo(cfg, opts.seed(command)?, opts, out)?,
        Command::Hom => cmd_hom(cfg, opts.seed(command)?, opts, out, exec)?,
    };
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.check_outputs(out)?;
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
