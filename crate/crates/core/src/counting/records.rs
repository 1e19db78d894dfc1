use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIGNAL: u32 = 1 << 0;
pub const IDLER_A: u32 = 1 << 1;
pub const IDLER_B: u32 = 1 << 2;

/// Clicks of one pulse. Streams are sparse: pulses without clicks are omitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub pulse_index: u64,
    pub click_word: u32,
}

impl PulseRecord {
    pub fn new(pulse_index: u64, click_word: u32) -> Self {
        Self {
            pulse_index,
            click_word,
        }
    }
}

/// Channel names in bit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub channels: Vec<String>,
}

impl ChannelLayout {
    pub fn new(names: &[&str]) -> Self {
        Self {
            channels: names.iter().map(|s| String::from(*s)).collect(),
        }
    }

    pub fn g2() -> Self {
        Self::new(&["signal", "idler_a", "idler_b"])
    }

    pub fn hom() -> Self {
        Self::new(&["herald_a", "herald_b", "out_1", "out_2"])
    }

    pub fn len(&self) -> u32 {
        self.channels.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn bit(&self, name: &str) -> Option<u32> {
        self.channels.iter().position(|c| c == name).map(|p| p as u32)
    }

    pub fn declared_mask(&self) -> u32 {
        if self.channels.len() >= 32 {
            u32::MAX
        } else {
            (1u32 << self.channels.len()) - 1
        }
    }

    /// Mask of a set of channel bits, rejecting undeclared ones.
    pub fn mask(&self, channel_set: &[u32]) -> Result<u32> {
        if channel_set.is_empty() {
            return Err(Error::EmptyChannelSet);
        }
        let mut m = 0;
        for &b in channel_set {
            if b >= self.len() {
                return Err(Error::UnknownChannel(b));
            }
            m |= 1 << b;
        }
        Ok(m)
    }
}

/// Number of pulses whose click word contains every channel in `channel_set`.
pub fn nfold_count<'a, I>(records: I, layout: &ChannelLayout, channel_set: &[u32]) -> Result<u64>
where
    I: IntoIterator<Item = &'a PulseRecord>,
{
    let mask = layout.mask(channel_set)?;
    Ok(records
        .into_iter()
        .filter(|r| r.click_word & mask == mask)
        .count() as u64)
}

/// Same-pulse coincidences and adjacent-pulse accidentals between two channels.
/// Records must be sorted by pulse index.
pub fn start_stop<'a, I>(records: I, layout: &ChannelLayout, start: u32, stop: u32) -> Result<(u64, u64)>
where
    I: IntoIterator<Item = &'a PulseRecord>,
{
    let start_mask = layout.mask(&[start])?;
    let stop_mask = layout.mask(&[stop])?;
    let mut coincidences = 0;
    let mut accidentals = 0;
    let mut prev: Option<&PulseRecord> = None;
    for r in records {
        if r.click_word & start_mask != 0 && r.click_word & stop_mask != 0 {
            coincidences += 1;
        }
        if let Some(p) = prev {
            if p.pulse_index + 1 == r.pulse_index && p.click_word & start_mask != 0 && r.click_word & stop_mask != 0 {
                accidentals += 1;
            }
        }
        prev = Some(r);
    }
    Ok((coincidences, accidentals))
}

/// Expands a sparse stream to one record per pulse in `[0, n_pulses)`.
pub fn expand_dense<'a>(records: &'a [PulseRecord], n_pulses: u64) -> impl Iterator<Item = PulseRecord> + 'a {
    let mut k = 0usize;
    (0..n_pulses).map(move |i| {
        if k < records.len() && records[k].pulse_index == i {
            k += 1;
            records[k - 1]
        } else {
            PulseRecord::new(i, 0)
        }
    })
}
