use std::path::Path;

use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::exec::BlockExecutor;
use fiberpair_core::hom::{resolved_config, simulate_hom_scan, visibility, HomScanResult, Visibility};
use serde::{Deserialize, Serialize};

use super::Options;
use crate::output::{csv_writer, num, write_json};

pub const HOM_SCAN_FILE: &str = "hom_scan.csv";
pub const HOM_SUMMARY_FILE: &str = "hom_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomSummary {
    pub raw: Visibility,
    pub corrected: Visibility,
    pub coherence_fwhm_fs: f64,
    pub pulses_per_point: u64,
    pub blocked_counts: [u64; 2],
    pub blocked_pulses: u64,
    pub background_rate_per_s: f64,
    pub seed: u64,
}

pub fn cmd_hom<E: BlockExecutor>(
    cfg: &ExperimentConfig,
    seed: u64,
    opts: &Options,
    out: &Path,
    exec: &E,
) -> anyhow::Result<Vec<String>> {
    cfg.validate()?;
    let mut h = resolved_config(cfg)?;
    if let Some(d) = &opts.delays_fs {
        h.delays_fs = Some(d.clone());
    }
    if let Some(n) = opts.pulses {
        h.pulses_per_point = n;
    }
    let scan: HomScanResult = simulate_hom_scan(&h, seed, exec)?;
    let rep = cfg.source.rep_rate_hz;
    let seconds = scan.pulses_per_point as f64 / rep;
    let bg_rate = scan.background_per_pulse() * rep;

    let mut w = csv_writer(&out.join(HOM_SCAN_FILE))?;
    w.write_record(["delay_fs", "fourfold_count", "fourfold_rate_per_s", "background_rate_per_s"])?;
    for (d, c) in scan.delays_fs.iter().zip(&scan.counts) {
        w.write_record([num(*d), c.to_string(), num(*c as f64 / seconds), num(bg_rate)])?;
    }
    w.flush()?;

    let raw = visibility(&scan, false)?;
    let corrected = visibility(&scan, true)?;
    log::info!(
        "HOM: raw V {:.3} ± {:.3}, corrected V {:.3} ± {:.3}",
        raw.value,
        raw.stderr,
        corrected.value,
        corrected.stderr
    );
    write_json(
        &out.join(HOM_SUMMARY_FILE),
        &HomSummary {
            raw,
            corrected,
            coherence_fwhm_fs: scan.coherence_fwhm_fs,
            pulses_per_point: scan.pulses_per_point,
            blocked_counts: scan.blocked_counts,
            blocked_pulses: scan.blocked_pulses,
            background_rate_per_s: bg_rate,
            seed,
        },
    )?;
    Ok(vec![HOM_SCAN_FILE.into(), HOM_SUMMARY_FILE.into()])
}
