//! Counter-based random streams.
//!
//! Every stochastic quantity is drawn from a stream keyed by
//! `(seed, stream index, purpose tag)`. A stream is SplitMix64 run from a
//! hashed key: output `n` depends only on the key and `n`, so any unit of work
//! (a block of pulses, one tomography setting, one bootstrap replicate) can be
//! regenerated independently of which worker runs it or in what order.

use rand_core::{impls, RngCore};

use crate::math::{exp, floor, ln, ln_1p};

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Purpose tags separating the streams of different consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    PulseTrain = 0x5055_4c53,
    HomScan = 0x484f_4d53,
    HomBlocked = 0x484f_4d42,
    Tomogram = 0x544f_4d4f,
    Bootstrap = 0x424f_4f54,
    Oracle = 0x4f52_4143,
}

/// A SplitMix64 stream whose starting point is a hash of its key.
#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64, purpose: Purpose) -> Self {
        let k1 = mix64(seed ^ GAMMA);
        let k2 = mix64(k1 ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
        let k3 = mix64(k2 ^ (purpose as u64).wrapping_mul(0xaef1_7502_108e_f2d9));
        Self { state: k3 }
    }

    /// Substream for a second index, e.g. (delay point, block).
    pub fn new2(seed: u64, major: u64, minor: u64, purpose: Purpose) -> Self {
        let inner = mix64(major.wrapping_add(GAMMA) ^ mix64(minor));
        Self::new(seed, inner, purpose)
    }

    #[inline]
    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform on `(0, 1]`, safe to take logs of.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        p > 0.0 && self.uniform() < p
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

/// Number of failures before the first success of a Bernoulli(`p`) sequence.
///
/// `p` must lie in `(0, 1]`. Saturates at `u64::MAX` for vanishing `p`.
pub fn geometric_failures(rng: &mut StreamRng, p: f64) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 0;
    }
    let k = floor(ln(rng.uniform_open0()) / ln_1p(-p));
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Poisson sample by sequential inversion; intended for means below ~30.
pub fn poisson_small(rng: &mut StreamRng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let u = rng.uniform();
    let mut k = 0u64;
    let mut p = exp(-mean);
    let mut cdf = p;
    while u >= cdf && k < 10_000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 {
            break;
        }
    }
    k
}

/// Poisson sample conditioned on being at least one.
pub fn poisson_nonzero(rng: &mut StreamRng, mean: f64) -> u64 {
    debug_assert!(mean > 0.0);
    // P(k | k >= 1) = e^-m m^k / k! / (1 - e^-m); invert from k = 1.
    let norm = -crate::math::exp_m1(-mean);
    let u = rng.uniform() * norm;
    let mut k = 1u64;
    let mut p = exp(-mean) * mean;
    let mut cdf = p;
    while u >= cdf && k < 10_000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = StreamRng::new(42, 7, Purpose::PulseTrain);
        let mut b = StreamRng::new(42, 7, Purpose::PulseTrain);
        let mut c = StreamRng::new(42, 8, Purpose::PulseTrain);
        let mut d = StreamRng::new(42, 7, Purpose::Tomogram);
        let xa: [u64; 8] = core::array::from_fn(|_| a.next());
        let xb: [u64; 8] = core::array::from_fn(|_| b.next());
        let xc: [u64; 8] = core::array::from_fn(|_| c.next());
        let xd: [u64; 8] = core::array::from_fn(|_| d.next());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_ne!(xa, xd);
    }

    #[test]
    fn uniform_moments() {
        let mut r = StreamRng::new(1, 0, Purpose::Oracle);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            s += u;
            s2 += u * u;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.003);
        assert!((var - 1.0 / 12.0).abs() < 0.002);
    }

    #[test]
    fn geometric_mean_matches() {
        let mut r = StreamRng::new(3, 0, Purpose::Oracle);
        let p = 0.01;
        let n = 100_000;
        let mean = (0..n).map(|_| geometric_failures(&mut r, p) as f64).sum::<f64>() / n as f64;
        let expect = (1.0 - p) / p;
        let sd = ((1.0 - p) / (p * p)).sqrt() / (n as f64).sqrt();
        assert!((mean - expect).abs() < 5.0 * sd, "{mean} vs {expect}");
        assert_eq!(geometric_failures(&mut r, 1.0), 0);
    }

    #[test]
    fn truncated_poisson_mean() {
        let mut r = StreamRng::new(5, 0, Purpose::Oracle);
        let m = 0.3;
        let n = 100_000;
        let mean = (0..n).map(|_| poisson_nonzero(&mut r, m) as f64).sum::<f64>() / n as f64;
        let expect = m / (1.0 - (-m as f64).exp());
        assert!((mean - expect).abs() < 0.01, "{mean} vs {expect}");
        let mean0 = (0..n).map(|_| poisson_small(&mut r, m) as f64).sum::<f64>() / n as f64;
        assert!((mean0 - m).abs() < 0.01);
    }
}
