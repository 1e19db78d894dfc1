use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::exec::{block_count, block_range, map_fold, BlockExecutor};
use crate::math::exp;
use crate::pairs::PairDistribution;
use crate::rng::{geometric_failures, Purpose, StreamRng};
use crate::source::chain_product;

use super::estimate::{coincidence_to_accidentals, g2_estimate, g2_stderr};
use super::records::{PulseRecord, IDLER_A, IDLER_B, SIGNAL};
use super::tally::{ClickTally, CoincidenceTally};

/// Pulses per random stream. Part of the simulation definition: changing it
/// changes every sampled stream.
pub const BLOCK_PULSES: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Every idler photon goes to `idler_a`.
    TwoFold,
    /// Idler photons are split 50:50 between `idler_a` and `idler_b`.
    Splitter,
}

/// Per-pulse click probabilities for the signal / idler_a / idler_b detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickModel {
    pub pairs: PairDistribution,
    /// Probability that a pair's signal photon is detected.
    pub signal_detect: f64,
    /// Probability that a pair's idler photon is detected at `idler_a` / `idler_b`.
    pub idler_detect: [f64; 2],
    /// Probability of a background click (Raman or dark) on signal, idler_a, idler_b.
    pub noise_click: [f64; 3],
}

/// Precomputed quantities for event-skipping sampling.
#[derive(Debug, Clone, Copy)]
struct Sampler {
    detected_pairs: PairDistribution,
    /// `P(component k ≠ 0)`: detected pairs, then one noise bit per detector.
    nonzero: [f64; 4],
    /// `P(any of components k.. ≠ 0)`.
    tail_nonzero: [f64; 4],
    /// Cumulative category probabilities of a detected pair.
    category_cdf: [f64; 5],
}

const CATEGORY_WORDS: [u32; 5] = [SIGNAL, SIGNAL | IDLER_A, SIGNAL | IDLER_B, IDLER_A, IDLER_B];
const NOISE_WORDS: [u32; 3] = [SIGNAL, IDLER_A, IDLER_B];

impl ClickModel {
    pub fn from_config(cfg: &ExperimentConfig, layout: Layout) -> Result<Self> {
        cfg.validate()?;
        let src = &cfg.source;
        let qs = chain_product(&cfg.chain.signal) * cfg.detectors.signal.efficiency;
        let qi = chain_product(&cfg.chain.idler) * cfg.detectors.idler.efficiency;
        let raman = src.raman_singles();
        let ds = cfg.detectors.signal.dark_count_prob_per_pulse;
        let di = cfg.detectors.idler.dark_count_prob_per_pulse;
        let noise = |r: f64, d: f64| 1.0 - exp(-r) * (1.0 - d);
        let (idler_detect, na, nb) = match layout {
            Layout::TwoFold => ([qi, 0.0], noise(raman.idler, di), 0.0),
            Layout::Splitter => {
                let n = noise(raman.idler / 2.0, di);
                ([qi / 2.0, qi / 2.0], n, n)
            }
        };
        Ok(Self {
            pairs: src.pair_distribution(),
            signal_detect: qs,
            idler_detect,
            noise_click: [noise(raman.signal, ds), na, nb],
        })
    }

    /// Probability that a pair leaves at least one detected photon.
    pub fn pair_detect_prob(&self) -> f64 {
        let qi = self.idler_detect[0] + self.idler_detect[1];
        1.0 - (1.0 - self.signal_detect) * (1.0 - qi)
    }

    fn sampler(&self) -> Sampler {
        let q = self.pair_detect_prob();
        let detected_pairs = self.pairs.thin(q);
        let nonzero = [
            detected_pairs.p_nonzero(),
            self.noise_click[0],
            self.noise_click[1],
            self.noise_click[2],
        ];
        let mut tail_nonzero = [0.0; 4];
        let mut zero_prod = 1.0;
        for k in (0..4).rev() {
            zero_prod *= 1.0 - nonzero[k];
            tail_nonzero[k] = 1.0 - zero_prod;
        }
        let (qs, [qa, qb]) = (self.signal_detect, self.idler_detect);
        let weights = [qs * (1.0 - qa - qb), qs * qa, qs * qb, (1.0 - qs) * qa, (1.0 - qs) * qb];
        let mut category_cdf = [0.0; 5];
        let mut acc = 0.0;
        for (c, w) in category_cdf.iter_mut().zip(weights) {
            acc += w;
            *c = acc;
        }
        if acc > 0.0 {
            category_cdf.iter_mut().for_each(|c| *c /= acc);
        }
        category_cdf[4] = 1.0;
        Sampler {
            detected_pairs,
            nonzero,
            tail_nonzero,
            category_cdf,
        }
    }

    /// Probability that a pulse has at least one click.
    pub fn p_nonempty(&self) -> f64 {
        self.sampler().tail_nonzero[0]
    }

    /// Calls `emit(pulse_index, word)` for every non-empty pulse of block `block`
    /// covering `[start, end)`.
    pub fn simulate_block(&self, seed: u64, block: u64, start: u64, end: u64, mut emit: impl FnMut(u64, u32)) {
        let s = self.sampler();
        let p = s.tail_nonzero[0];
        if p <= 0.0 || start >= end {
            return;
        }
        let mut rng = StreamRng::new(seed, block, Purpose::PulseTrain);
        let mut pos = start;
        loop {
            pos = pos.saturating_add(geometric_failures(&mut rng, p));
            if pos >= end {
                break;
            }
            emit(pos, s.sample_nonempty(&mut rng));
            pos += 1;
        }
    }
}

impl Sampler {
    /// One pulse's click word, conditioned on at least one click.
    fn sample_nonempty(&self, rng: &mut StreamRng) -> u32 {
        let mut word = 0u32;
        let mut forced = true;
        for k in 0..4 {
            let hit = if forced {
                // P(k ≠ 0 | some of k.. ≠ 0)
                k == 3 || rng.uniform() * self.tail_nonzero[k] < self.nonzero[k]
            } else {
                rng.bernoulli(self.nonzero[k])
            };
            if !hit {
                continue;
            }
            forced = false;
            if k == 0 {
                let pairs = self.detected_pairs.sample_nonzero(rng);
                for _ in 0..pairs {
                    let u = rng.uniform();
                    let c = self.category_cdf.iter().position(|&c| u < c).unwrap_or(4);
                    word |= CATEGORY_WORDS[c];
                }
            } else {
                word |= NOISE_WORDS[k - 1];
            }
        }
        word
    }
}

/// Sparse click records of a run, in pulse order.
pub fn simulate_pulses(model: &ClickModel, seed: u64, n_pulses: u64) -> Vec<PulseRecord> {
    let mut out = Vec::new();
    for b in 0..block_count(n_pulses, BLOCK_PULSES) {
        let (s, e) = block_range(b, BLOCK_PULSES, n_pulses);
        model.simulate_block(seed, b, s, e, |i, w| out.push(PulseRecord::new(i, w)));
    }
    out
}

/// Streams a run into a tally, one block per task.
pub fn tally_run<E: BlockExecutor>(model: &ClickModel, seed: u64, n_pulses: u64, exec: &E) -> ClickTally {
    map_fold(
        exec,
        block_count(n_pulses, BLOCK_PULSES),
        ClickTally::empty(),
        |b| {
            let (s, e) = block_range(b, BLOCK_PULSES, n_pulses);
            let mut t = ClickTally::with_pulses(e - s);
            model.simulate_block(seed, b, s, e, |i, w| t.record(i, w));
            t
        },
        |acc, t| acc.merge(&t),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub pump_mw: f64,
    pub tally: CoincidenceTally,
    pub g2: f64,
    pub g2_stderr: f64,
    /// Signal–idler coincidences per second.
    pub detected_pair_rate: f64,
    /// Detected pairs s⁻¹ nm⁻¹ mW⁻¹ over the signal filter width.
    pub brightness: f64,
    pub ca: f64,
}

/// Splitter measurement at the configured pump power.
pub fn g2_experiment<E: BlockExecutor>(cfg: &ExperimentConfig, seed: u64, n_pulses: u64, exec: &E) -> Result<G2Result> {
    let model = ClickModel::from_config(cfg, Layout::Splitter)?;
    let tally = CoincidenceTally::from_clicks(&tally_run(&model, seed, n_pulses, exec));
    let seconds = n_pulses as f64 / cfg.source.rep_rate_hz;
    let rate = tally.coincidences as f64 / seconds;
    let power = cfg.source.pump_power_mw;
    Ok(G2Result {
        pump_mw: power,
        tally,
        g2: g2_estimate(&tally)?,
        g2_stderr: g2_stderr(&tally)?,
        detected_pair_rate: rate,
        brightness: rate / (cfg.spectral.signal.filter_fwhm_nm * power),
        ca: coincidence_to_accidentals(&tally),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pairs: PairDistribution, qs: f64, qa: f64, qb: f64, noise: [f64; 3]) -> ClickModel {
        ClickModel {
            pairs,
            signal_detect: qs,
            idler_detect: [qa, qb],
            noise_click: noise,
        }
    }

    #[test]
    fn silent_source_emits_nothing() {
        let m = model(PairDistribution::Poisson { mean: 0.0 }, 0.5, 0.5, 0.0, [0.0; 3]);
        assert!(simulate_pulses(&m, 1, 100_000).is_empty());
    }

    #[test]
    fn one_perfect_pair_per_pulse() {
        let m = model(PairDistribution::Binomial { n: 1, p: 1.0 }, 1.0, 1.0, 0.0, [0.0; 3]);
        let r = simulate_pulses(&m, 1, 10_000);
        assert_eq!(r.len(), 10_000);
        assert!(r.iter().enumerate().all(|(i, x)| x.pulse_index == i as u64 && x.click_word == SIGNAL | IDLER_A));
    }

    /// Per-pulse brute-force simulation as an oracle for the event-skipping sampler.
    #[test]
    fn skipping_matches_per_pulse_brute_force() {
        let m = model(PairDistribution::Poisson { mean: 0.3 }, 0.4, 0.2, 0.25, [0.05, 0.02, 0.03]);
        let n = 400_000u64;
        let fast = ClickTally::from_records(&simulate_pulses(&m, 9, n), n);
        let mut rng = StreamRng::new(77, 0, Purpose::Oracle);
        let mut slow = ClickTally::with_pulses(n);
        for i in 0..n {
            let mut w = 0;
            for _ in 0..crate::rng::poisson_small(&mut rng, 0.3) {
                if rng.bernoulli(0.4) {
                    w |= SIGNAL;
                }
                let u = rng.uniform();
                if u < 0.2 {
                    w |= IDLER_A;
                } else if u < 0.45 {
                    w |= IDLER_B;
                }
            }
            for (k, bit) in NOISE_WORDS.iter().enumerate() {
                if rng.bernoulli(m.noise_click[k]) {
                    w |= bit;
                }
            }
            slow.record(i, w);
        }
        for word in 0..8 {
            let (a, b) = (fast.word_count(word) as f64, slow.word_count(word) as f64);
            let sd = (a + b).sqrt().max(3.0);
            assert!((a - b).abs() < 5.0 * sd, "word {word}: {a} vs {b}");
        }
    }
}
