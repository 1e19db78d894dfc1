//! The experiment description shared by every command.

use serde::{Deserialize, Serialize};

use crate::counting::DetectorConfig;
use crate::error::{Error, Result};
use crate::hom::HomConfig;
use crate::source::{EfficiencyChain, SagnacConfig, SourceConfig, SpectralConfig};
use crate::tomography::TomographyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arms<T> {
    pub signal: T,
    pub idler: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub pulses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub spectral: Arms<SpectralConfig>,
    pub chain: Arms<EfficiencyChain>,
    pub detectors: Arms<DetectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sagnac: Option<SagnacConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomConfig>,
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// Checks the sections every command needs.
    pub fn validate(&self) -> Result<()> {
        self.source.validate("source")?;
        self.spectral.signal.validate("spectral.signal")?;
        self.spectral.idler.validate("spectral.idler")?;
        self.chain.signal.validate("chain.signal")?;
        self.chain.idler.validate("chain.idler")?;
        self.detectors.signal.validate("detectors.signal")?;
        self.detectors.idler.validate("detectors.idler")?;
        Ok(())
    }

    pub fn sagnac(&self) -> Result<&SagnacConfig> {
        let s = self.sagnac.as_ref().ok_or_else(|| Error::config("sagnac", "section is required"))?;
        s.validate("sagnac")?;
        Ok(s)
    }

    pub fn tomography(&self) -> Result<&TomographyConfig> {
        self.sagnac()?;
        let t = self
            .tomography
            .as_ref()
            .ok_or_else(|| Error::config("tomography", "section is required"))?;
        t.validate("tomography")?;
        Ok(t)
    }

    pub fn hom(&self) -> Result<&HomConfig> {
        let h = self.hom.as_ref().ok_or_else(|| Error::config("hom", "section is required"))?;
        h.validate("hom")?;
        Ok(h)
    }

    /// Same experiment at another pump power.
    pub fn at_power(&self, pump_power_mw: f64) -> Self {
        let mut c = self.clone();
        c.source.pump_power_mw = pump_power_mw;
        c
    }
}
