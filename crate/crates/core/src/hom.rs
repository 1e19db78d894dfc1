//! Four-fold Hong-Ou-Mandel interference between heralded idlers from the two
//! pump directions.
//!
//! Direction `a` heralds on `herald_a` and feeds splitter input 1, direction `b`
//! heralds on `herald_b` and feeds input 2. Pulses are independent, so the
//! four-fold count over `N` pulses is `Binomial(N, p)` with `p` the exact
//! per-pulse probability summed over photon-number patterns.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exec::BlockExecutor;
use crate::linalg::{invert_real, solve_real};
use crate::math::{exp, powi, sqrt};
use crate::pairs::{binomial, ln_factorial, PairDistribution, PairNumberModel};
use crate::rng::{Purpose, StreamRng};

const LN2: f64 = core::f64::consts::LN_2;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    pub mean_pairs_per_direction: f64,
    #[serde(default)]
    pub pair_number_model: PairNumberModel,
    /// Signal detection probability per pair in each herald arm.
    pub herald_efficiency: f64,
    /// Herald clicks per pulse not caused by a pair (Raman and dark counts).
    #[serde(default)]
    pub herald_noise_prob: f64,
    /// Probability that a pair's idler reaches its splitter input.
    pub idler_to_port_efficiency: f64,
    /// Mean Raman photons per pulse entering each splitter input.
    #[serde(default)]
    pub port_raman_photons: f64,
    pub output_detector_efficiency: f64,
    #[serde(default)]
    pub output_dark_count_prob: f64,
    pub mode_overlap: f64,
    /// Dip FWHM; derived from the idler filter when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_coherence_fwhm_fs: Option<f64>,
    /// Scan positions; ±3 FWHM in steps of FWHM/10 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_fs: Option<Vec<f64>>,
    pub pulses_per_point: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocked_pulses_per_point: Option<u64>,
}

impl HomConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        let field = |name: &str| alloc::format!("{path}.{name}");
        for (name, v) in [
            ("herald_efficiency", self.herald_efficiency),
            ("herald_noise_prob", self.herald_noise_prob),
            ("idler_to_port_efficiency", self.idler_to_port_efficiency),
            ("output_detector_efficiency", self.output_detector_efficiency),
            ("output_dark_count_prob", self.output_dark_count_prob),
            ("mode_overlap", self.mode_overlap),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field(name), alloc::format!("{v} is outside [0, 1]")));
            }
        }
        if !(self.mean_pairs_per_direction >= 0.0) || !self.mean_pairs_per_direction.is_finite() {
            return Err(Error::config(field("mean_pairs_per_direction"), "must be finite and ≥ 0"));
        }
        if self.pair_number_model == PairNumberModel::AtMostOne && self.mean_pairs_per_direction > 1.0 {
            return Err(Error::config(field("mean_pairs_per_direction"), "at_most_one needs a mean ≤ 1"));
        }
        if !(self.port_raman_photons >= 0.0) {
            return Err(Error::config(field("port_raman_photons"), "must be ≥ 0"));
        }
        if let Some(t) = self.photon_coherence_fwhm_fs {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::config(field("photon_coherence_fwhm_fs"), "must be positive"));
            }
        }
        if let Some(d) = &self.delays_fs {
            if d.is_empty() {
                return Err(Error::config(field("delays_fs"), "scan has no delays"));
            }
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(field("delays_fs"), "delays must be finite"));
            }
        }
        if self.pulses_per_point == 0 {
            return Err(Error::config(field("pulses_per_point"), "must be positive"));
        }
        if self.blocked_pulses_per_point == Some(0) {
            return Err(Error::config(field("blocked_pulses_per_point"), "must be positive"));
        }
        Ok(())
    }

    pub fn coherence_fwhm_fs(&self) -> Result<f64> {
        self.photon_coherence_fwhm_fs
            .ok_or_else(|| Error::config("hom.photon_coherence_fwhm_fs", "not set and no filter to derive it from"))
    }

    pub fn delays(&self) -> Result<Vec<f64>> {
        match &self.delays_fs {
            Some(d) => Ok(d.clone()),
            None => Ok(default_delays(self.coherence_fwhm_fs()?)),
        }
    }

    pub fn blocked_pulses(&self) -> u64 {
        self.blocked_pulses_per_point.unwrap_or(self.pulses_per_point)
    }

    pub fn pair_distribution(&self) -> PairDistribution {
        PairDistribution::from_model(self.pair_number_model, self.mean_pairs_per_direction)
    }
}

/// 61 points over ±3τ.
pub fn default_delays(tau_fs: f64) -> Vec<f64> {
    (-30..=30).map(|k| k as f64 * tau_fs / 10.0).collect()
}

/// Two-photon dip FWHM for photons with a Gaussian spectrum of the given
/// intensity FWHM in wavelength.
pub fn coherence_fwhm_fs(filter_fwhm_nm: f64, center_nm: f64) -> f64 {
    let dnu = SPEED_OF_LIGHT * filter_fwhm_nm * 1e-9 / (center_nm * 1e-9 * center_nm * 1e-9);
    2.0 * core::f64::consts::SQRT_2 * LN2 / (core::f64::consts::PI * dnu) * 1e15
}

/// HOM section of an experiment with the dip width filled in from the idler filter.
pub fn resolved_config(cfg: &ExperimentConfig) -> Result<HomConfig> {
    let mut h = cfg.hom()?.clone();
    if h.photon_coherence_fwhm_fs.is_none() {
        h.photon_coherence_fwhm_fs = Some(coherence_fwhm_fs(
            cfg.spectral.idler.filter_fwhm_nm,
            cfg.source.wavelengths.idler_nm,
        ));
    }
    Ok(h)
}

/// Probability that single photons entering opposite ports leave by different ports.
pub fn hom_coincidence_prob(delay_fs: f64, mode_overlap: f64, tau_fs: f64) -> f64 {
    let x = delay_fs / tau_fs;
    0.5 * (1.0 - mode_overlap * exp(-4.0 * LN2 * x * x))
}

/// Splitter input removed for a background run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blocked {
    None,
    Input1,
    Input2,
}

/// Joint weight of "herald clicked and `i` idlers reached the input", `i = 0..len`.
fn herald_idler_weights(cfg: &HomConfig) -> Vec<f64> {
    let dist = cfg.pair_distribution();
    let eps = cfg.herald_efficiency;
    let t = cfg.idler_to_port_efficiency;
    let noise = cfg.herald_noise_prob;
    let mut pk = Vec::new();
    let mut mass = 0.0;
    for k in 0..200u64 {
        let p = dist.pmf(k);
        pk.push(p);
        mass += p;
        if 1.0 - mass < 1e-17 && k > 2 {
            break;
        }
    }
    let mut w = alloc::vec![0.0; pk.len()];
    for (k, &p) in pk.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let herald = 1.0 - powi(1.0 - eps, k as i32) * (1.0 - noise);
        for (i, wi) in w.iter_mut().enumerate().take(k + 1) {
            let comb = exp(ln_factorial(k as u64) - ln_factorial(i as u64) - ln_factorial((k - i) as u64));
            *wi += p * herald * comb * powi(t, i as i32) * powi(1.0 - t, (k - i) as i32);
        }
    }
    w
}

/// Per-pulse four-fold probability.
pub fn fourfold_prob(cfg: &HomConfig, delay_fs: f64, blocked: Blocked) -> Result<f64> {
    let pc = hom_coincidence_prob(delay_fs, cfg.mode_overlap, cfg.coherence_fwhm_fs()?);
    let eta = cfg.output_detector_efficiency;
    let w = herald_idler_weights(cfg);
    let herald: f64 = w.iter().sum();
    // Raman photons per output: Poisson, half of each open input.
    let open_inputs = if blocked == Blocked::None { 2.0 } else { 1.0 };
    let raman = 0.5 * open_inputs * cfg.port_raman_photons;
    let quiet = exp(-raman * eta) * (1.0 - cfg.output_dark_count_prob);

    let both_click = |n1: usize, n2: usize| -> f64 {
        let (single_silent, both_silent) = if n1 == 1 && n2 == 1 {
            let bunched = 0.5 * (1.0 - pc) * (powi(1.0 - eta, 2) + 1.0);
            (bunched + pc * (1.0 - eta), powi(1.0 - eta, 2))
        } else {
            let m = (n1 + n2) as i32;
            (powi(1.0 - 0.5 * eta, m), powi(1.0 - eta, m))
        };
        1.0 - 2.0 * single_silent * quiet + both_silent * quiet * quiet
    };

    let mut p = 0.0;
    match blocked {
        Blocked::None => {
            for (n1, &w1) in w.iter().enumerate() {
                for (n2, &w2) in w.iter().enumerate() {
                    p += w1 * w2 * both_click(n1, n2);
                }
            }
        }
        Blocked::Input1 | Blocked::Input2 => {
            for (n, &wn) in w.iter().enumerate() {
                p += herald * wn * both_click(0, n);
            }
        }
    }
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipFit {
    /// Far-delay level of the Gaussian.
    pub baseline: f64,
    /// Fractional depth.
    pub depth: f64,
    pub center_fs: f64,
    pub fwhm_fs: f64,
    pub minimum: f64,
    pub minimum_stderr: f64,
    pub chi_square: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub value: f64,
    pub stderr: f64,
    /// Mean of the points at least 2 FWHM from the dip centre.
    pub baseline: f64,
    pub fit: DipFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomScanResult {
    pub delays_fs: Vec<f64>,
    pub counts: Vec<u64>,
    pub pulses_per_point: u64,
    /// Four-folds with input 1 and then input 2 blocked.
    pub blocked_counts: [u64; 2],
    pub blocked_pulses: u64,
    pub coherence_fwhm_fs: f64,
}

impl HomScanResult {
    /// Summed blocked-port four-folds per pulse.
    pub fn background_per_pulse(&self) -> f64 {
        (self.blocked_counts[0] + self.blocked_counts[1]) as f64 / self.blocked_pulses as f64
    }

    /// Expected background counts in one scan point.
    pub fn background_per_point(&self) -> f64 {
        self.background_per_pulse() * self.pulses_per_point as f64
    }

    fn background_variance_per_point(&self) -> f64 {
        let r = self.pulses_per_point as f64 / self.blocked_pulses as f64;
        (self.blocked_counts[0] + self.blocked_counts[1]) as f64 * r * r
    }
}

/// Scan the delays; point `k` draws from stream `k`, the two blocked runs from
/// their own streams.
pub fn simulate_hom_scan<E: BlockExecutor>(cfg: &HomConfig, seed: u64, exec: &E) -> Result<HomScanResult> {
    cfg.validate("hom")?;
    let delays = cfg.delays()?;
    let n = cfg.pulses_per_point;
    let probs = exec.map_blocks(delays.len() as u64, |k| fourfold_prob(cfg, delays[k as usize], Blocked::None));
    let counts = probs
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let mut rng = StreamRng::new(seed, k as u64, Purpose::HomScan);
            Ok(binomial(&mut rng, n, p?))
        })
        .collect::<Result<Vec<u64>>>()?;
    let blocked_counts = blocked_port_counts(cfg, seed)?;
    Ok(HomScanResult {
        delays_fs: delays,
        counts,
        pulses_per_point: n,
        blocked_counts,
        blocked_pulses: cfg.blocked_pulses(),
        coherence_fwhm_fs: cfg.coherence_fwhm_fs()?,
    })
}

fn blocked_port_counts(cfg: &HomConfig, seed: u64) -> Result<[u64; 2]> {
    let n = cfg.blocked_pulses();
    let mut out = [0; 2];
    for (k, b) in [Blocked::Input1, Blocked::Input2].into_iter().enumerate() {
        // The dip does not matter with one input blocked.
        let p = fourfold_prob(cfg, 0.0, b)?;
        let mut rng = StreamRng::new(seed, k as u64, Purpose::HomBlocked);
        out[k] = binomial(&mut rng, n, p);
    }
    Ok(out)
}

/// Four-folds per pulse summed over the two blocked-input runs.
pub fn blocked_port_background(cfg: &HomConfig, seed: u64) -> Result<f64> {
    cfg.validate("hom")?;
    let c = blocked_port_counts(cfg, seed)?;
    Ok((c[0] + c[1]) as f64 / cfg.blocked_pulses() as f64)
}

fn gaussian_dip(p: &[f64; 4], d: f64) -> (f64, [f64; 4]) {
    let [c, depth, d0, w] = *p;
    let u = (d - d0) / w;
    let g = exp(-4.0 * LN2 * u * u);
    let k = 8.0 * LN2 * c * depth * g * u / w;
    (c * (1.0 - depth * g), [1.0 - depth * g, -c * g, -k, -k * u])
}

/// Counting noise of scan values. A value `y` came from Poisson counts with
/// mean `y + offset` (the subtracted background), plus `extra_variance` from
/// the background estimate itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CountNoise {
    pub offset: f64,
    pub extra_variance: f64,
}

impl CountNoise {
    fn variance(&self, mean: f64) -> f64 {
        (mean + self.offset).max(1.0) + self.extra_variance
    }
}

fn levenberg_marquardt(delays: &[f64], values: &[f64], wts: &[f64], mut p: [f64; 4], width_floor: f64) -> ([f64; 4], f64) {
    let n = delays.len();
    let chi2 = |p: &[f64; 4]| -> f64 {
        (0..n)
            .map(|i| {
                let r = values[i] - gaussian_dip(p, delays[i]).0;
                wts[i] * r * r
            })
            .sum()
    };
    let mut cur = chi2(&p);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let (a, b) = normal_equations(delays, values, wts, &p);
        let mut damped = a;
        for k in 0..4 {
            damped[5 * k] += lambda * a[5 * k].max(1e-300);
        }
        // A flat scan leaves centre and width undetermined; move the level and depth only.
        let Some(step) = solve_real(&damped, &b, 4).or_else(|| {
            let sub = [damped[0], damped[1], damped[4], damped[5]];
            solve_real(&sub, &b[..2], 2).map(|s| alloc::vec![s[0], s[1], 0.0, 0.0])
        }) else {
            break;
        };
        let mut trial = p;
        for k in 0..4 {
            trial[k] += step[k];
        }
        trial[3] = trial[3].abs().max(width_floor);
        let t = chi2(&trial);
        if t.is_finite() && t <= cur {
            let done = (cur - t) <= 1e-12 * cur.max(1e-300);
            p = trial;
            cur = t;
            lambda = (lambda / 10.0).max(1e-12);
            if done {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (p, cur)
}

fn normal_equations(delays: &[f64], values: &[f64], wts: &[f64], p: &[f64; 4]) -> ([f64; 16], [f64; 4]) {
    let mut a = [0.0; 16];
    let mut b = [0.0; 4];
    for i in 0..delays.len() {
        let (m, j) = gaussian_dip(p, delays[i]);
        let r = values[i] - m;
        for row in 0..4 {
            b[row] += wts[i] * j[row] * r;
            for col in 0..4 {
                a[4 * row + col] += wts[i] * j[row] * j[col];
            }
        }
    }
    (a, b)
}

/// Gaussian dip fit. Weights start from the data and are then taken from the
/// fitted curve, which avoids the low bias of data-weighted fits at small counts.
pub fn fit_dip(delays: &[f64], values: &[f64], noise: CountNoise, tau_guess: f64) -> Result<DipFit> {
    let n = delays.len();
    if n < 4 || values.len() != n {
        return Err(Error::FitFailed);
    }
    let (imin, &vmin) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::FitFailed)?;
    let far: Vec<f64> = (0..n)
        .filter(|&i| (delays[i] - delays[imin]).abs() >= 2.0 * tau_guess)
        .map(|i| values[i])
        .collect();
    let c0 = if far.is_empty() {
        values.iter().copied().fold(f64::MIN, f64::max)
    } else {
        far.iter().sum::<f64>() / far.len() as f64
    };
    if !(c0 > 0.0) {
        return Err(Error::FitFailed);
    }
    let mut p = [c0, (1.0 - vmin / c0).clamp(0.0, 1.0), delays[imin], tau_guess];
    let mut wts: Vec<f64> = values.iter().map(|&v| 1.0 / noise.variance(v)).collect();
    let mut chi = 0.0;
    for _ in 0..4 {
        (p, chi) = levenberg_marquardt(delays, values, &wts, p, 1e-9 * tau_guess);
        wts = delays.iter().map(|&d| 1.0 / noise.variance(gaussian_dip(&p, d).0)).collect();
    }
    let (a, _) = normal_equations(delays, values, &wts, &p);
    let (v_cc, v_dd, v_cd) = match invert_real(&a, 4) {
        Some(cov) => (cov[0], cov[5], cov[1]),
        None => {
            let cov = invert_real(&[a[0], a[1], a[4], a[5]], 2).ok_or(Error::FitFailed)?;
            (cov[0], cov[3], cov[1])
        }
    };
    let [c, depth, d0, w] = p;
    let minimum = c * (1.0 - depth);
    let var = (1.0 - depth) * (1.0 - depth) * v_cc + c * c * v_dd - 2.0 * c * (1.0 - depth) * v_cd;
    if !minimum.is_finite() {
        return Err(Error::FitFailed);
    }
    Ok(DipFit {
        baseline: c,
        depth,
        center_fs: d0,
        fwhm_fs: w,
        minimum,
        minimum_stderr: sqrt(var.max(0.0)),
        chi_square: chi,
    })
}

/// `V = (C_far − C_0)/C_far`: plateau mean against the fitted minimum.
pub fn visibility_of(delays: &[f64], values: &[f64], noise: CountNoise, tau_fs: f64) -> Result<Visibility> {
    let fit = fit_dip(delays, values, noise, tau_fs)?;
    let far: Vec<usize> = (0..delays.len())
        .filter(|&i| (delays[i] - fit.center_fs).abs() >= 2.0 * tau_fs)
        .collect();
    if far.is_empty() {
        let min_offset_fs = delays
            .iter()
            .map(|d| (d - fit.center_fs).abs())
            .fold(f64::INFINITY, f64::min);
        return Err(Error::NoBaseline { min_offset_fs });
    }
    let m = far.len() as f64;
    let baseline = far.iter().map(|&i| values[i]).sum::<f64>() / m;
    if !(baseline > 0.0) {
        return Err(Error::Undefined("visibility with zero baseline"));
    }
    // Point noise is independent; the background estimate is common to all points.
    let var_baseline = far.iter().map(|&i| (values[i] + noise.offset).max(1.0)).sum::<f64>() / (m * m)
        + noise.extra_variance;
    let c0 = fit.minimum;
    let value = (baseline - c0) / baseline;
    let stderr = sqrt(
        (c0 / (baseline * baseline)) * (c0 / (baseline * baseline)) * var_baseline
            + fit.minimum_stderr * fit.minimum_stderr / (baseline * baseline),
    );
    Ok(Visibility {
        value: value.clamp(0.0, 1.0),
        stderr,
        baseline,
        fit,
    })
}

/// Raw, or with the blocked-port background subtracted from every point.
pub fn visibility(scan: &HomScanResult, corrected: bool) -> Result<Visibility> {
    let noise = if corrected {
        CountNoise {
            offset: scan.background_per_point(),
            extra_variance: scan.background_variance_per_point(),
        }
    } else {
        CountNoise::default()
    };
    let values: Vec<f64> = scan.counts.iter().map(|&c| c as f64 - noise.offset).collect();
    visibility_of(&scan.delays_fs, &values, noise, scan.coherence_fwhm_fs)
}
