//! Minimal-optimal two-photon polarization tomography with four tetrahedral
//! analyzer settings per photon and linear inversion.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::linalg::{c, condition_number_16, solve_real, CMat, ZERO};
use crate::math::sqrt;
use crate::pairs::poisson;
use crate::polarization::{analyzer_projector, solve_plate_angles, AnalyzerSetting, JonesVector, StokesVector};
use crate::rng::{Purpose, StreamRng};
use crate::source::{chain_product, sagnac_state};
use crate::state::{fidelity, nearest_physical, phi_minus, tangle, DensityMatrix4};

/// Canonical tetrahedron, even-parity sign choice.
pub fn tetrahedron_directions() -> [StokesVector; 4] {
    let k = 1.0 / sqrt(3.0);
    [
        StokesVector::new(k, k, k),
        StokesVector::new(k, -k, -k),
        StokesVector::new(-k, k, -k),
        StokesVector::new(-k, -k, k),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetrahedronSet {
    pub settings: [AnalyzerSetting; 4],
    /// What the plates actually project on.
    pub projectors: [JonesVector; 4],
}

impl TetrahedronSet {
    pub fn stokes(&self) -> [StokesVector; 4] {
        core::array::from_fn(|i| self.projectors[i].stokes())
    }
}

pub fn tetrahedron() -> TetrahedronSet {
    let dirs = tetrahedron_directions();
    let settings = core::array::from_fn(|i| {
        solve_plate_angles(&JonesVector::from_stokes(&dirs[i])).expect("unit target")
    });
    TetrahedronSet {
        settings,
        projectors: core::array::from_fn(|i| analyzer_projector(&settings[i])),
    }
}

/// Row `i`: signal analyzer setting; column `j`: idler analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TomogramCounts {
    pub counts: [[u64; 4]; 4],
    pub pulses_per_setting: u64,
}

impl TomogramCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// `P_ij = ⟨ψi ⊗ ψj|ρ|ψi ⊗ ψj⟩`
pub fn projection_probabilities(rho: &DensityMatrix4, tet: &TetrahedronSet) -> [[f64; 4]; 4] {
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let a = tet.projectors[i].0;
            let b = tet.projectors[j].0;
            rho.expectation(&[a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
        })
    })
}

/// Per-pulse click probabilities of the tomography arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionModel {
    /// Mean pairs per pulse times both detection efficiencies.
    pub pair_detection: f64,
    /// Mean pairs per pulse times the signal arm efficiency.
    pub signal_photon: f64,
    pub idler_photon: f64,
    /// Unpolarized background clicks per pulse behind an analyzer.
    pub signal_background: f64,
    pub idler_background: f64,
    /// Add the adjacent-pulse accidental product of the singles.
    pub accidentals: bool,
}

impl AcquisitionModel {
    pub fn ideal(pair_detection: f64) -> Self {
        Self {
            pair_detection,
            signal_photon: 0.0,
            idler_photon: 0.0,
            signal_background: 0.0,
            idler_background: 0.0,
            accidentals: false,
        }
    }

    pub fn expected(&self, rho: &DensityMatrix4, tet: &TetrahedronSet) -> [[f64; 4]; 4] {
        let p = projection_probabilities(rho, tet);
        let ra = rho.partial_trace_second();
        let rb = rho.partial_trace_first();
        let single = |m: &CMat<2>, psi: &JonesVector| {
            let v = psi.0;
            (v[0].conj() * m[0][0] * v[0] + v[0].conj() * m[0][1] * v[1] + v[1].conj() * m[1][0] * v[0] + v[1].conj() * m[1][1] * v[1]).re
        };
        core::array::from_fn(|i| {
            core::array::from_fn(|j| {
                let mut x = self.pair_detection * p[i][j];
                if self.accidentals {
                    let s = self.signal_photon * single(&ra, &tet.projectors[i]) + self.signal_background / 2.0;
                    let t = self.idler_photon * single(&rb, &tet.projectors[j]) + self.idler_background / 2.0;
                    x += s * t;
                }
                x.min(1.0)
            })
        })
    }
}

/// Binomial counts for each of the 16 settings; setting `(i, j)` uses stream `4i + j`.
pub fn acquire_tomogram(
    rho: &DensityMatrix4,
    tet: &TetrahedronSet,
    pulses_per_setting: u64,
    model: &AcquisitionModel,
    seed: u64,
) -> TomogramCounts {
    let probs = model.expected(rho, tet);
    let counts = core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let mut rng = StreamRng::new(seed, (4 * i + j) as u64, Purpose::Tomogram);
            crate::pairs::binomial(&mut rng, pulses_per_setting, probs[i][j])
        })
    });
    TomogramCounts {
        counts,
        pulses_per_setting,
    }
}

/// 16 × 16 map from two-photon Stokes parameters `S_mn` to projection
/// probabilities: `P_ij = ¼ Σ a_im b_jn S_mn` with `a_i = (1, s_i)`.
pub fn instrument_matrix(tet: &TetrahedronSet) -> Vec<f64> {
    let a: [[f64; 4]; 4] = core::array::from_fn(|i| {
        let s = tet.projectors[i].stokes();
        [1.0, s.s1, s.s2, s.s3]
    });
    let mut b = alloc::vec![0.0; 256];
    for i in 0..4 {
        for j in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    b[(4 * i + j) * 16 + 4 * m + n] = 0.25 * a[i][m] * a[j][n];
                }
            }
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    /// Linear-inversion estimate; Hermitian with unit trace but possibly not positive.
    pub raw: CMat<4>,
    pub physical: DensityMatrix4,
    /// `S_mn` in the order I, σz, σx, σy (Stokes order).
    pub stokes: [[f64; 4]; 4],
    pub condition_number: f64,
}

fn pauli(m: usize) -> CMat<2> {
    match m {
        0 => [[c(1.0, 0.0), ZERO], [ZERO, c(1.0, 0.0)]],
        1 => [[c(1.0, 0.0), ZERO], [ZERO, c(-1.0, 0.0)]],
        2 => [[ZERO, c(1.0, 0.0)], [c(1.0, 0.0), ZERO]],
        _ => [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]],
    }
}

/// `ρ = ¼ Σ S_mn σm ⊗ σn` with `S_00 = 1`.
pub fn density_from_stokes(s: &[[f64; 4]; 4]) -> CMat<4> {
    let mut rho = [[ZERO; 4]; 4];
    for (m, row) in s.iter().enumerate() {
        for (n, &v) in row.iter().enumerate() {
            let k = crate::linalg::kron2(&pauli(m), &pauli(n));
            for i in 0..4 {
                for j in 0..4 {
                    rho[i][j] += k[i][j] * (0.25 * v);
                }
            }
        }
    }
    rho
}

/// Linear inversion from relative frequencies normalized by each signal
/// setting's pulse count.
pub fn reconstruct(counts: &TomogramCounts, tet: &TetrahedronSet) -> Result<Reconstruction> {
    if counts.total() == 0 || counts.pulses_per_setting == 0 {
        return Err(Error::Undefined("tomogram without counts"));
    }
    let b = instrument_matrix(tet);
    let cond = condition_number_16(&b);
    if !(cond < 1e8) {
        return Err(Error::SingularInstrument { condition: cond });
    }
    let f: Vec<f64> = (0..16)
        .map(|k| counts.counts[k / 4][k % 4] as f64 / counts.pulses_per_setting as f64)
        .collect();
    let x = solve_real(&b, &f, 16).ok_or(Error::SingularInstrument { condition: cond })?;
    let norm = x[0];
    if !(norm > 0.0) {
        return Err(Error::Undefined("reconstructed state has zero trace"));
    }
    let stokes: [[f64; 4]; 4] = core::array::from_fn(|m| core::array::from_fn(|n| x[4 * m + n] / norm));
    let raw = density_from_stokes(&stokes);
    Ok(Reconstruction {
        raw,
        physical: nearest_physical(&raw),
        stokes,
        condition_number: cond,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub fidelity: f64,
    pub tangle: f64,
    pub purity: f64,
}

/// Fidelity to Φ⁻, tangle and purity of a physical state.
pub fn characterize(rho: &DensityMatrix4) -> Result<StateReport> {
    Ok(StateReport {
        fidelity: fidelity(rho, &phi_minus())?,
        tangle: tangle(rho)?,
        purity: rho.purity(),
    })
}

/// Standard deviations of the report over Poisson resamples of the counts.
pub fn bootstrap(counts: &TomogramCounts, tet: &TetrahedronSet, samples: u32, seed: u64) -> Result<StateReport> {
    let mut acc = [[0.0f64; 2]; 3];
    let mut n = 0.0;
    for b in 0..samples {
        let mut rng = StreamRng::new(seed, b as u64, Purpose::Bootstrap);
        let resampled = TomogramCounts {
            counts: core::array::from_fn(|i| core::array::from_fn(|j| poisson(&mut rng, counts.counts[i][j] as f64))),
            pulses_per_setting: counts.pulses_per_setting,
        };
        let Ok(rec) = reconstruct(&resampled, tet) else {
            continue;
        };
        let r = characterize(&rec.physical)?;
        for (k, v) in [r.fidelity, r.tangle, r.purity].into_iter().enumerate() {
            acc[k][0] += v;
            acc[k][1] += v * v;
        }
        n += 1.0;
    }
    if n < 2.0 {
        return Err(Error::Undefined("bootstrap needs at least two usable resamples"));
    }
    let sd = |k: usize| {
        let mean = acc[k][0] / n;
        sqrt(((acc[k][1] - n * mean * mean) / (n - 1.0)).max(0.0))
    };
    Ok(StateReport {
        fidelity: sd(0),
        tangle: sd(1),
        purity: sd(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    pub pump_power_mw: f64,
    pub pulses_per_setting: u64,
    /// Overall signal-arm detection efficiency including the analyzer.
    pub signal_efficiency: f64,
    pub idler_efficiency: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_samples: u32,
    #[serde(default = "default_true")]
    pub accidentals: bool,
}

fn default_bootstrap() -> u32 {
    200
}

fn default_true() -> bool {
    true
}

impl TomographyConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.pump_power_mw >= 0.0) {
            return Err(Error::config(alloc::format!("{path}.pump_power_mw"), "must be ≥ 0"));
        }
        for (name, v) in [("signal_efficiency", self.signal_efficiency), ("idler_efficiency", self.idler_efficiency)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(alloc::format!("{path}.{name}"), alloc::format!("{v} is outside [0, 1]")));
            }
        }
        if self.pulses_per_setting == 0 {
            return Err(Error::config(alloc::format!("{path}.pulses_per_setting"), "must be positive"));
        }
        Ok(())
    }
}

/// Mean pairs per pulse from each Sagnac direction at the tomography pump power.
pub fn sagnac_pairs(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let sag = cfg.sagnac()?;
    let t = cfg.tomography()?;
    let mu1 = cfg.source.mean_pairs_per_pulse_at_1mw;
    let s = sag.pump_split_ratio;
    let p = t.pump_power_mw;
    Ok((sag.direction_imbalance * mu1 * (s * p) * (s * p), mu1 * ((1.0 - s) * p) * ((1.0 - s) * p)))
}

/// Acquisition model of the configured source. Raman singles are rescaled from
/// the source chain to the tomography arm efficiencies.
pub fn acquisition_model(cfg: &ExperimentConfig) -> Result<AcquisitionModel> {
    cfg.validate()?;
    let t = cfg.tomography()?;
    let (cw, ccw) = sagnac_pairs(cfg)?;
    let mu = cw + ccw;
    let src_s = chain_product(&cfg.chain.signal) * cfg.detectors.signal.efficiency;
    let src_i = chain_product(&cfg.chain.idler) * cfg.detectors.idler.efficiency;
    let raman = cfg.source.at_power(t.pump_power_mw).raman_singles();
    let scale = |eff: f64, src: f64| if src > 0.0 { eff / src } else { 0.0 };
    Ok(AcquisitionModel {
        pair_detection: mu * t.signal_efficiency * t.idler_efficiency,
        signal_photon: mu * t.signal_efficiency,
        idler_photon: mu * t.idler_efficiency,
        signal_background: raman.signal * scale(t.signal_efficiency, src_s)
            + 2.0 * cfg.detectors.signal.dark_count_prob_per_pulse,
        idler_background: raman.idler * scale(t.idler_efficiency, src_i)
            + 2.0 * cfg.detectors.idler.dark_count_prob_per_pulse,
        accidentals: t.accidentals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyResult {
    pub source_state: DensityMatrix4,
    pub tetrahedron: TetrahedronSet,
    pub counts: TomogramCounts,
    pub reconstruction: Reconstruction,
    pub report: StateReport,
    pub stderr: StateReport,
}

/// Acquire, reconstruct and characterize the configured Sagnac source.
pub fn tomography_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<TomographyResult> {
    let t = *cfg.tomography()?;
    let source_state = sagnac_state(cfg.sagnac()?)?;
    let model = acquisition_model(cfg)?;
    let tet = tetrahedron();
    let counts = acquire_tomogram(&source_state, &tet, t.pulses_per_setting, &model, seed);
    let reconstruction = reconstruct(&counts, &tet)?;
    let report = characterize(&reconstruction.physical)?;
    let stderr = bootstrap(&counts, &tet, t.bootstrap_samples, seed)?;
    Ok(TomographyResult {
        source_state,
        tetrahedron: tet,
        counts,
        reconstruction,
        report,
        stderr,
    })
}
