//! Source description: efficiency chains, spectral selection, pair rates versus
//! pump power, and the Sagnac-loop polarization state.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, ZERO};
use crate::math::{cos, powi, sin, sqrt};
use crate::pairs::{PairDistribution, PairNumberModel};
use crate::state::DensityMatrix4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub label: String,
    pub efficiency: f64,
}

impl Stage {
    pub fn new(label: impl Into<String>, efficiency: f64) -> Self {
        Self {
            label: label.into(),
            efficiency,
        }
    }
}

/// Ordered loss factors along one arm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EfficiencyChain(pub Vec<Stage>);

impl EfficiencyChain {
    pub fn new(stages: Vec<Stage>) -> Self {
        Self(stages)
    }

    pub fn from_values(values: &[f64]) -> Self {
        Self(
            values
                .iter()
                .enumerate()
                .map(|(i, &e)| Stage::new(alloc::format!("stage{i}"), e))
                .collect(),
        )
    }

    pub fn stages(&self) -> &[Stage] {
        &self.0
    }

    pub fn push(&mut self, label: impl Into<String>, efficiency: f64) {
        self.0.push(Stage::new(label, efficiency));
    }

    pub fn concat(&self, other: &EfficiencyChain) -> EfficiencyChain {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        EfficiencyChain(v)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (i, s) in self.0.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.efficiency) {
                return Err(Error::config(
                    alloc::format!("{path}[{i}].efficiency"),
                    alloc::format!("{} is outside [0, 1]", s.efficiency),
                ));
            }
        }
        Ok(())
    }
}

/// Product of every stage; an empty chain transmits everything.
pub fn chain_product(chain: &EfficiencyChain) -> f64 {
    chain.0.iter().map(|s| s.efficiency).product()
}

pub fn pair_extraction(signal: &EfficiencyChain, idler: &EfficiencyChain) -> f64 {
    chain_product(signal) * chain_product(idler)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub filter_fwhm_nm: f64,
    pub photon_fwhm_nm: f64,
    /// Box-profile average efficiency of one grating pass.
    pub grating_peak_efficiency: f64,
    pub grating_passes: u32,
    #[serde(default)]
    pub extra_transmission_loss: f64,
}

impl SpectralConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.filter_fwhm_nm > 0.0) {
            return Err(Error::config(alloc::format!("{path}.filter_fwhm_nm"), "must be positive"));
        }
        if !(self.photon_fwhm_nm > 0.0) {
            return Err(Error::config(alloc::format!("{path}.photon_fwhm_nm"), "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.grating_peak_efficiency) {
            return Err(Error::config(
                alloc::format!("{path}.grating_peak_efficiency"),
                "must lie in [0, 1]",
            ));
        }
        if self.grating_passes == 0 {
            return Err(Error::config(alloc::format!("{path}.grating_passes"), "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.extra_transmission_loss) {
            return Err(Error::config(
                alloc::format!("{path}.extra_transmission_loss"),
                "must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// Fraction of the photon spectrum passed by the filter, times the grating
/// passes and any extra loss.
pub fn spectral_efficiency(cfg: &SpectralConfig) -> Result<f64> {
    cfg.validate("spectral")?;
    let passband = (cfg.filter_fwhm_nm / cfg.photon_fwhm_nm).min(1.0);
    Ok(passband
        * powi(cfg.grating_peak_efficiency, cfg.grating_passes as i32)
        * (1.0 - cfg.extra_transmission_loss))
}

/// Gaussian quadrature sum of the filter and pump-induced widths.
pub fn photon_bandwidth(filter_fwhm_nm: f64, pump_induced_fwhm_nm: f64) -> f64 {
    sqrt(filter_fwhm_nm * filter_fwhm_nm + pump_induced_fwhm_nm * pump_induced_fwhm_nm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerChannel {
    pub signal: f64,
    pub idler: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wavelengths {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pump_power_mw: f64,
    pub rep_rate_hz: f64,
    pub mean_pairs_per_pulse_at_1mw: f64,
    #[serde(default)]
    pub pair_number_model: PairNumberModel,
    /// Detected Raman singles per pulse at 1 mW; scales linearly with pump power.
    #[serde(default)]
    pub raman_singles_per_pulse_at_1mw: PerChannel,
    pub wavelengths: Wavelengths,
}

impl SourceConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(alloc::format!("{path}.{name}"), alloc::format!("{v} must be a finite value ≥ 0")))
            }
        };
        nonneg("pump_power_mw", self.pump_power_mw)?;
        nonneg("mean_pairs_per_pulse_at_1mw", self.mean_pairs_per_pulse_at_1mw)?;
        nonneg("raman_singles_per_pulse_at_1mw.signal", self.raman_singles_per_pulse_at_1mw.signal)?;
        nonneg("raman_singles_per_pulse_at_1mw.idler", self.raman_singles_per_pulse_at_1mw.idler)?;
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::config(alloc::format!("{path}.rep_rate_hz"), "must be positive"));
        }
        for (name, v) in [
            ("wavelengths.pump_nm", self.wavelengths.pump_nm),
            ("wavelengths.signal_nm", self.wavelengths.signal_nm),
            ("wavelengths.idler_nm", self.wavelengths.idler_nm),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(alloc::format!("{path}.{name}"), "must be positive"));
            }
        }
        Ok(())
    }

    /// Same source at another pump power.
    pub fn at_power(&self, pump_power_mw: f64) -> Self {
        Self {
            pump_power_mw,
            ..self.clone()
        }
    }

    pub fn pair_distribution(&self) -> PairDistribution {
        PairDistribution::from_model(self.pair_number_model, mean_pairs(self))
    }

    /// Raman singles per pulse at the configured power.
    pub fn raman_singles(&self) -> PerChannel {
        PerChannel {
            signal: self.raman_singles_per_pulse_at_1mw.signal * self.pump_power_mw,
            idler: self.raman_singles_per_pulse_at_1mw.idler * self.pump_power_mw,
        }
    }
}

/// Mean pairs per pulse, quadratic in pump power.
pub fn mean_pairs(cfg: &SourceConfig) -> f64 {
    mean_pairs_at(cfg.mean_pairs_per_pulse_at_1mw, cfg.pump_power_mw)
}

pub fn mean_pairs_at(at_1mw: f64, pump_power_mw: f64) -> f64 {
    at_1mw * pump_power_mw * pump_power_mw
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SagnacConfig {
    /// Pair generation of the clockwise (|HH⟩) direction relative to the
    /// counter-clockwise (|VV⟩) one at equal pump power.
    pub direction_imbalance: f64,
    /// Fraction of the pump sent clockwise.
    pub pump_split_ratio: f64,
    pub relative_phase: f64,
    /// `None` means perfect polarization optics.
    #[serde(default)]
    pub polarization_extinction: Option<f64>,
}

impl SagnacConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.direction_imbalance > 0.0 && self.direction_imbalance.is_finite()) {
            return Err(Error::config(alloc::format!("{path}.direction_imbalance"), "must be positive"));
        }
        if !(self.pump_split_ratio > 0.0 && self.pump_split_ratio < 1.0) {
            return Err(Error::config(alloc::format!("{path}.pump_split_ratio"), "must lie in (0, 1)"));
        }
        if !self.relative_phase.is_finite() {
            return Err(Error::config(alloc::format!("{path}.relative_phase"), "must be finite"));
        }
        if let Some(e) = self.polarization_extinction {
            if !(e >= 1.0) {
                return Err(Error::config(alloc::format!("{path}.polarization_extinction"), "must be ≥ 1"));
            }
        }
        Ok(())
    }

    /// Split ratio that equalizes the two directions.
    pub fn balancing_split(direction_imbalance: f64) -> f64 {
        1.0 / (1.0 + sqrt(direction_imbalance))
    }

    /// `|α|² / |β|²`; each direction's pair rate is quadratic in its share of the pump.
    pub fn amplitude_ratio(&self) -> f64 {
        let s = self.pump_split_ratio;
        self.direction_imbalance * (s / (1.0 - s)) * (s / (1.0 - s))
    }

    /// Relative pair generation of the two directions, normalized to sum to one.
    pub fn direction_weights(&self) -> (f64, f64) {
        let r = self.amplitude_ratio();
        (r / (1.0 + r), 1.0 / (1.0 + r))
    }

    pub fn leakage(&self) -> f64 {
        match self.polarization_extinction {
            Some(e) if e.is_finite() => 1.0 / e,
            _ => 0.0,
        }
    }
}

/// `(1 − ℓ)|ψ⟩⟨ψ| + ℓ/2 (|HV⟩⟨HV| + |VH⟩⟨VH|)` with `ψ = α|HH⟩ + e^{iφ}β|VV⟩`.
pub fn sagnac_state(cfg: &SagnacConfig) -> Result<DensityMatrix4> {
    cfg.validate("sagnac")?;
    let (wa, wb) = cfg.direction_weights();
    let alpha = sqrt(wa);
    let beta = sqrt(wb);
    let phase = c(cos(cfg.relative_phase), sin(cfg.relative_phase));
    let psi = [c(alpha, 0.0), ZERO, ZERO, phase * beta];
    let l = cfg.leakage();
    let mut m: CMat<4> = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = psi[i] * psi[j].conj() * (1.0 - l);
        }
    }
    m[1][1] += c(l / 2.0, 0.0);
    m[2][2] += c(l / 2.0, 0.0);
    DensityMatrix4::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity, phi_minus, tangle};
    use crate::math::PI;
    use proptest::prelude::*;

    #[test]
    fn table_chains() {
        let signal = EfficiencyChain::from_values(&[0.96, 0.98, 0.28, 0.50]);
        let idler = EfficiencyChain::from_values(&[0.96, 0.98, 0.38, 0.50]);
        assert!((chain_product(&signal) - 0.13).abs() <= 0.006);
        assert!((chain_product(&idler) - 0.18).abs() <= 0.006);
        assert!((pair_extraction(&signal, &idler) - 0.023).abs() <= 0.001);
        let mut sd = signal.clone();
        sd.push("det", 0.56);
        let mut id = idler.clone();
        id.push("det", 0.43);
        assert!((pair_extraction(&sd, &id) - 0.0056).abs() < 0.0001);
        assert_eq!(chain_product(&EfficiencyChain::default()), 1.0);
    }

    #[test]
    fn spectral_selection_values() {
        let signal = SpectralConfig {
            filter_fwhm_nm: 0.17,
            photon_fwhm_nm: 0.39,
            grating_peak_efficiency: 0.80,
            grating_passes: 2,
            extra_transmission_loss: 0.0,
        };
        let idler = SpectralConfig {
            filter_fwhm_nm: 0.30,
            photon_fwhm_nm: 0.45,
            extra_transmission_loss: 0.10,
            ..signal
        };
        assert!((spectral_efficiency(&signal).unwrap() - 0.279).abs() < 5e-4);
        assert!((spectral_efficiency(&idler).unwrap() - 0.384).abs() < 5e-4);
        let unity = SpectralConfig {
            filter_fwhm_nm: 0.2,
            photon_fwhm_nm: 0.2,
            grating_peak_efficiency: 1.0,
            grating_passes: 1,
            extra_transmission_loss: 0.0,
        };
        assert_eq!(spectral_efficiency(&unity).unwrap(), 1.0);
        let bad = SpectralConfig { filter_fwhm_nm: 0.0, ..unity };
        assert!(spectral_efficiency(&bad).is_err());
    }

    #[test]
    fn bandwidth_quadrature() {
        assert!((photon_bandwidth(0.17, 0.351) - 0.39).abs() < 0.001);
        assert!((photon_bandwidth(0.30, 0.335) - 0.45).abs() < 0.01);
        assert_eq!(photon_bandwidth(0.3, 0.0), 0.3);
    }

    #[test]
    fn sagnac_reference_states() {
        let ideal = SagnacConfig {
            direction_imbalance: 1.0,
            pump_split_ratio: 0.5,
            relative_phase: PI,
            polarization_extinction: None,
        };
        let rho = sagnac_state(&ideal).unwrap();
        assert!((fidelity(&rho, &phi_minus()).unwrap() - 1.0).abs() < 1e-15);
        assert!((tangle(&rho).unwrap() - 1.0).abs() < 1e-12);

        let imbalanced = SagnacConfig {
            direction_imbalance: 1.2,
            pump_split_ratio: SagnacConfig::balancing_split(1.2),
            ..ideal
        };
        let rho = sagnac_state(&imbalanced).unwrap();
        let m = rho.matrix();
        assert!((m[0][0].re - m[3][3].re).abs() < 1e-9);

        let leaky = SagnacConfig {
            polarization_extinction: Some(200.0),
            ..ideal
        };
        let rho = sagnac_state(&leaky).unwrap();
        // ⟨Φ⁻|ρ|Φ⁻⟩ = (1 − ℓ) for the leakage model.
        assert!((fidelity(&rho, &phi_minus()).unwrap() - (1.0 - 1.0 / 200.0)).abs() < 1e-12);
    }

    #[test]
    fn mean_pairs_scaling() {
        let cfg = SourceConfig {
            pump_power_mw: 0.0,
            rep_rate_hz: 76e6,
            mean_pairs_per_pulse_at_1mw: 0.035,
            pair_number_model: PairNumberModel::Poisson,
            raman_singles_per_pulse_at_1mw: PerChannel { signal: 3e-4, idler: 3e-4 },
            wavelengths: Wavelengths { pump_nm: 741.7, signal_nm: 690.4, idler_nm: 801.2 },
        };
        assert_eq!(mean_pairs(&cfg), 0.0);
        assert_eq!(mean_pairs(&cfg.at_power(2.0)), 4.0 * mean_pairs(&cfg.at_power(1.0)));
        assert!((cfg.at_power(0.5).raman_singles().signal - 1.5e-4).abs() < 1e-18);
    }

    #[test]
    fn validation_paths() {
        let chain = EfficiencyChain::from_values(&[0.5, 1.2]);
        match chain.validate("chain.signal") {
            Err(Error::InvalidConfig { path, .. }) => assert_eq!(path, "chain.signal[1].efficiency"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn chain_product_permutation_and_concat(values in prop::collection::vec(0.0f64..=1.0, 0..8), rot in 0usize..8) {
            let a = EfficiencyChain::from_values(&values);
            let mut rotated = values.clone();
            if !rotated.is_empty() {
                let r = rot % rotated.len();
                rotated.rotate_left(r);
                rotated.reverse();
            }
            let b = EfficiencyChain::from_values(&rotated);
            prop_assert!((chain_product(&a) - chain_product(&b)).abs() <= 1e-15);
            let ab = a.concat(&b);
            prop_assert!((chain_product(&ab) - chain_product(&a) * chain_product(&b)).abs() <= 1e-15);
        }

        #[test]
        fn spectral_monotone(f in 0.05f64..1.0, df in 0.0f64..0.5, w in 0.05f64..1.0, g in 0.1f64..1.0, loss in 0.0f64..0.5) {
            let base = SpectralConfig { filter_fwhm_nm: f, photon_fwhm_nm: w, grating_peak_efficiency: g, grating_passes: 2, extra_transmission_loss: loss };
            let e0 = spectral_efficiency(&base).unwrap();
            let wider = SpectralConfig { filter_fwhm_nm: f + df, ..base };
            prop_assert!(spectral_efficiency(&wider).unwrap() >= e0);
            let broader_photon = SpectralConfig { photon_fwhm_nm: w + df, ..base };
            prop_assert!(spectral_efficiency(&broader_photon).unwrap() <= e0);
            let lossier = SpectralConfig { extra_transmission_loss: (loss + df).min(1.0), ..base };
            prop_assert!(spectral_efficiency(&lossier).unwrap() <= e0);
            let better = SpectralConfig { grating_peak_efficiency: (g + df).min(1.0), ..base };
            prop_assert!(spectral_efficiency(&better).unwrap() >= e0);
        }

        #[test]
        fn mean_pairs_ratio_is_four(p in 1e-6f64..100.0, mu in 1e-6f64..1.0) {
            prop_assert_eq!(mean_pairs_at(mu, p) / mean_pairs_at(mu, p / 2.0), 4.0);
        }

        #[test]
        fn sagnac_always_valid(imb in 0.2f64..5.0, s in 0.01f64..0.99, phi in -7.0f64..7.0, ext in 1.0f64..1e6) {
            let cfg = SagnacConfig { direction_imbalance: imb, pump_split_ratio: s, relative_phase: phi, polarization_extinction: Some(ext) };
            let rho = sagnac_state(&cfg).unwrap();
            prop_assert!(rho.is_physical());
        }
    }
}
