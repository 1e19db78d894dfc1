use std::path::Path;

use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::linalg::CMat;
use fiberpair_core::polarization::AnalyzerSetting;
use fiberpair_core::state::DensityMatrix4;
use fiberpair_core::tomography::{tomography_experiment, StateReport};
use serde::{Deserialize, Serialize};

use super::Options;
use crate::output::write_json;

pub const TOMOGRAM_FILE: &str = "tomogram.json";
pub const STATE_REPORT_FILE: &str = "state_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramFile {
    /// Row: signal setting, column: idler setting.
    pub counts: [[u64; 4]; 4],
    pub settings: [AnalyzerSetting; 4],
    pub pulses_per_setting: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReportFile {
    pub density_matrix: DensityMatrix4,
    /// Linear-inversion estimate before the physicality projection, as `[re, im]`.
    pub raw_density_matrix: [[[f64; 2]; 4]; 4],
    pub fidelity: f64,
    pub tangle: f64,
    pub purity: f64,
    pub bootstrap_stderr: StateReport,
    pub condition_number: f64,
}

fn pairs(m: &CMat<4>) -> [[[f64; 2]; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| [m[i][j].re, m[i][j].im]))
}

pub fn cmd_tomo(cfg: &ExperimentConfig, seed: u64, opts: &Options, out: &Path) -> anyhow::Result<Vec<String>> {
    let mut cfg = cfg.clone();
    if let (Some(n), Some(t)) = (opts.pulses, cfg.tomography.as_mut()) {
        t.pulses_per_setting = n;
    }
    let r = tomography_experiment(&cfg, seed)?;
    log::info!(
        "tomography: fidelity {:.4}, tangle {:.4}, {} coincidences",
        r.report.fidelity,
        r.report.tangle,
        r.counts.total()
    );
    write_json(
        &out.join(TOMOGRAM_FILE),
        &TomogramFile {
            counts: r.counts.counts,
            settings: r.tetrahedron.settings,
            pulses_per_setting: r.counts.pulses_per_setting,
            seed,
        },
    )?;
    write_json(
        &out.join(STATE_REPORT_FILE),
        &StateReportFile {
            density_matrix: r.reconstruction.physical,
            raw_density_matrix: pairs(&r.reconstruction.raw),
            fidelity: r.report.fidelity,
            tangle: r.report.tangle,
            purity: r.report.purity,
            bootstrap_stderr: r.stderr,
            condition_number: r.reconstruction.condition_number,
        },
    )?;
    Ok(vec![TOMOGRAM_FILE.into(), STATE_REPORT_FILE.into()])
}
