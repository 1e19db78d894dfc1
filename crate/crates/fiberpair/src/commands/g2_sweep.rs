use std::path::Path;

use anyhow::Context;
use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::counting::{g2_experiment, ChannelLayout, ClickModel, Layout, PulseRecord, BLOCK_PULSES};
use fiberpair_core::exec::{block_count, block_range, BlockExecutor};

use super::Options;
use crate::output::{csv_writer, num};
use crate::records::RecordWriter;

pub const G2_SWEEP_FILE: &str = "g2_sweep.csv";

pub fn cmd_g2_sweep<E: BlockExecutor>(
    cfg: &ExperimentConfig,
    seed: u64,
    opts: &Options,
    out: &Path,
    exec: &E,
) -> anyhow::Result<Vec<String>> {
    cfg.validate()?;
    let powers = opts.powers.clone().unwrap_or_else(|| vec![cfg.source.pump_power_mw]);
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        anyhow::bail!("pump powers must be positive, got {p}");
    }
    let pulses = opts.pulses.unwrap_or(cfg.run.pulses);
    let mut files = vec![G2_SWEEP_FILE.to_string()];
    let mut w = csv_writer(&out.join(G2_SWEEP_FILE))?;
    w.write_record(["pump_mW", "detected_pairs_per_s", "brightness_pairs_per_s_nm_mW", "g2", "g2_stderr", "CA"])?;
    for (k, &p) in powers.iter().enumerate() {
        let at = cfg.at_power(p);
        log::info!("g2 sweep: {p} mW, {pulses} pulses");
        let r = g2_experiment(&at, seed, pulses, exec).with_context(|| format!("g2 run at {p} mW"))?;
        log::debug!("tally at {p} mW: {:?}", r.tally);
        w.write_record([
            num(p),
            num(r.detected_pair_rate),
            num(r.brightness),
            num(r.g2),
            num(r.g2_stderr),
            num(r.ca),
        ])?;
        if opts.records {
            let name = format!("clicks_{k}.bin");
            write_click_records(&at, seed, pulses, &out.join(&name))?;
            files.push(name.clone());
            files.push(format!("{name}.json"));
        }
    }
    w.flush()?;
    Ok(files)
}

/// Same pulse train as the tallied run, streamed to disk block by block.
fn write_click_records(cfg: &ExperimentConfig, seed: u64, pulses: u64, path: &Path) -> anyhow::Result<()> {
    let model = ClickModel::from_config(cfg, Layout::Splitter)?;
    let mut w = RecordWriter::create(path)?;
    let mut err = Ok(());
    for b in 0..block_count(pulses, BLOCK_PULSES) {
        let (s, e) = block_range(b, BLOCK_PULSES, pulses);
        model.simulate_block(seed, b, s, e, |i, word| {
            if err.is_ok() {
                err = w.push(PulseRecord::new(i, word));
            }
        });
        err?;
        err = Ok(());
    }
    w.finish(&ChannelLayout::g2(), pulses, seed)?;
    Ok(())
}
