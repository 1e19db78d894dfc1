//! Closed-form click statistics of a [`ClickModel`], from the pair-number
//! generating function: `P(no click in X) = G(1 − q_X) · Π_{d∈X} (1 − noise_d)`
//! where `q_X` is the probability that one pair lights a detector of `X`.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

use super::engine::{ClickModel, Layout};
use super::records::{IDLER_A, IDLER_B, SIGNAL};

/// Per-pulse probabilities and the estimators they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRates {
    pub p1: f64,
    pub p12: f64,
    pub p13: f64,
    pub p123: f64,
    /// `P(signal ∧ (idler_a ∨ idler_b))`
    pub p_coincidence: f64,
    /// `P(signal) · P(idler_a ∨ idler_b)` for independent neighbouring pulses.
    pub p_accidental: f64,
}

impl ExpectedRates {
    pub fn g2(&self) -> f64 {
        4.0 * self.p123 * self.p1 / ((self.p12 + self.p13) * (self.p12 + self.p13))
    }

    pub fn ca(&self) -> f64 {
        self.p_coincidence / self.p_accidental
    }
}

impl ClickModel {
    /// Probability that none of the detectors in `set` clicks.
    pub fn p_none(&self, set: u32) -> f64 {
        let s = if set & SIGNAL != 0 { self.signal_detect } else { 0.0 };
        let mut i = 0.0;
        if set & IDLER_A != 0 {
            i += self.idler_detect[0];
        }
        if set & IDLER_B != 0 {
            i += self.idler_detect[1];
        }
        let q = 1.0 - (1.0 - s) * (1.0 - i);
        let mut p = self.pairs.pgf(1.0 - q);
        for (k, bit) in [SIGNAL, IDLER_A, IDLER_B].iter().enumerate() {
            if set & bit != 0 {
                p *= 1.0 - self.noise_click[k];
            }
        }
        p
    }

    /// Probability that every detector in `set` clicks, by inclusion–exclusion.
    pub fn p_all(&self, set: u32) -> f64 {
        let mut total = 0.0;
        let mut sub = set;
        loop {
            let sign = if sub.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * self.p_none(sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & set;
        }
        total
    }

    pub fn expected(&self) -> ExpectedRates {
        let p1 = self.p_all(SIGNAL);
        let none_idlers = self.p_none(IDLER_A | IDLER_B);
        let none_all = self.p_none(SIGNAL | IDLER_A | IDLER_B);
        // P(S ∧ ¬A ∧ ¬B) = P(¬A ∧ ¬B) − P(¬S ∧ ¬A ∧ ¬B)
        let p_coincidence = p1 - (none_idlers - none_all);
        ExpectedRates {
            p1,
            p12: self.p_all(SIGNAL | IDLER_A),
            p13: self.p_all(SIGNAL | IDLER_B),
            p123: self.p_all(SIGNAL | IDLER_A | IDLER_B),
            p_coincidence,
            p_accidental: p1 * (1.0 - none_idlers),
        }
    }
}

/// Finds `mean_pairs_per_pulse_at_1mw` such that the expected signal–idler
/// coincidence rate in the splitter layout equals `target_rate` at `pump_mw`.
pub fn calibrate_mean_pairs(cfg: &ExperimentConfig, pump_mw: f64, target_rate: f64) -> Result<f64> {
    let rate = |mu: f64| -> Result<f64> {
        let mut c = cfg.clone();
        c.source.mean_pairs_per_pulse_at_1mw = mu;
        c.source.pump_power_mw = pump_mw;
        let m = ClickModel::from_config(&c, Layout::Splitter)?;
        Ok(m.expected().p_coincidence * c.source.rep_rate_hz)
    };
    if rate(0.0)? >= target_rate {
        return Err(Error::Undefined("background alone exceeds the target rate"));
    }
    let mut hi = 1e-3;
    while rate(hi)? < target_rate {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Undefined("target rate unreachable"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(mid)? < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
