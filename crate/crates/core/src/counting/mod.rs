//! Pulse-train Monte Carlo and coincidence electronics.
//!
//! Time is discretized to pump pulses: the 5 ns coincidence window is shorter
//! than the 13.2 ns pulse period, so a coincidence is two clicks in the same
//! pulse slot and an accidental is a start in slot `i` and a stop in `i + 1`.

mod analytic;
mod engine;
mod estimate;
mod records;
mod tally;

pub use analytic::{calibrate_mean_pairs, ExpectedRates};
pub use engine::{g2_experiment, simulate_pulses, tally_run, ClickModel, G2Result, Layout, BLOCK_PULSES};
pub use estimate::{coincidence_to_accidentals, g2_estimate, g2_stderr};
pub use records::{
    expand_dense, nfold_count, start_stop, ChannelLayout, PulseRecord, IDLER_A, IDLER_B, SIGNAL,
};
pub use tally::{ClickTally, CoincidenceTally, WORDS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    #[serde(default)]
    pub dark_count_prob_per_pulse: f64,
}

impl DetectorConfig {
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob_per_pulse: 0.0,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config(
                alloc::format!("{path}.efficiency"),
                alloc::format!("{} is outside [0, 1]", self.efficiency),
            ));
        }
        if !(0.0..=1.0).contains(&self.dark_count_prob_per_pulse) {
            return Err(Error::config(
                alloc::format!("{path}.dark_count_prob_per_pulse"),
                alloc::format!("{} is outside [0, 1]", self.dark_count_prob_per_pulse),
            ));
        }
        Ok(())
    }
}
