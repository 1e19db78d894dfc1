//! Click-record files: a flat stream of 12-byte records (pulse index as u64 LE,
//! click word as u32 LE) next to a JSON sidecar naming the channel bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use fiberpair_core::counting::{ChannelLayout, PulseRecord};
use serde::{Deserialize, Serialize};

pub const RECORD_BYTES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelBit {
    pub name: String,
    pub bit: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSidecar {
    pub record_bytes: usize,
    pub byte_order: String,
    pub channels: Vec<ChannelBit>,
    /// Pulses covered, including the ones without clicks (which are not stored).
    pub pulses: u64,
    pub records: u64,
    pub seed: u64,
}

impl RecordSidecar {
    pub fn layout(&self) -> ChannelLayout {
        let mut chans = self.channels.clone();
        chans.sort_by_key(|c| c.bit);
        ChannelLayout {
            channels: chans.into_iter().map(|c| c.name).collect(),
        }
    }
}

pub fn sidecar_path(records: &Path) -> PathBuf {
    let mut p = records.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub struct RecordWriter {
    out: BufWriter<File>,
    path: PathBuf,
    count: u64,
    last: Option<u64>,
}

impl RecordWriter {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            out: BufWriter::new(f),
            path: path.to_path_buf(),
            count: 0,
            last: None,
        })
    }

    pub fn push(&mut self, r: PulseRecord) -> anyhow::Result<()> {
        if let Some(prev) = self.last {
            anyhow::ensure!(r.pulse_index > prev, "records must be in increasing pulse order");
        }
        self.out.write_all(&r.pulse_index.to_le_bytes())?;
        self.out.write_all(&r.click_word.to_le_bytes())?;
        self.last = Some(r.pulse_index);
        self.count += 1;
        Ok(())
    }

    /// Flushes the stream and writes the sidecar.
    pub fn finish(mut self, layout: &ChannelLayout, pulses: u64, seed: u64) -> anyhow::Result<RecordSidecar> {
        self.out.flush()?;
        let sidecar = RecordSidecar {
            record_bytes: RECORD_BYTES,
            byte_order: "little".into(),
            channels: layout
                .channels
                .iter()
                .enumerate()
                .map(|(i, n)| ChannelBit {
                    name: n.clone(),
                    bit: i as u32,
                })
                .collect(),
            pulses,
            records: self.count,
            seed,
        };
        crate::output::write_json(&sidecar_path(&self.path), &sidecar)?;
        Ok(sidecar)
    }
}

pub fn write_records(path: &Path, records: &[PulseRecord], layout: &ChannelLayout, pulses: u64, seed: u64) -> anyhow::Result<RecordSidecar> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.push(*r)?;
    }
    w.finish(layout, pulses, seed)
}

pub fn read_records(path: &Path) -> anyhow::Result<(Vec<PulseRecord>, RecordSidecar)> {
    let sidecar: RecordSidecar = serde_json::from_reader(BufReader::new(
        File::open(sidecar_path(path)).with_context(|| format!("opening sidecar of {}", path.display()))?,
    ))?;
    anyhow::ensure!(sidecar.record_bytes == RECORD_BYTES, "unsupported record size {}", sidecar.record_bytes);
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    anyhow::ensure!(bytes.len() % RECORD_BYTES == 0, "truncated record file");
    let declared = sidecar.layout().declared_mask();
    let records: Vec<PulseRecord> = bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| {
            PulseRecord::new(
                u64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                u32::from_le_bytes(c[8..].try_into().expect("4 bytes")),
            )
        })
        .collect();
    anyhow::ensure!(records.len() as u64 == sidecar.records, "record count does not match sidecar");
    anyhow::ensure!(
        records.iter().all(|r| r.click_word & !declared == 0),
        "record sets an undeclared channel"
    );
    Ok((records, sidecar))
}
