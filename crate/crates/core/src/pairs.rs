//! Per-pulse pair-number distributions.
//!
//! All three families are closed under independent thinning: if each pair
//! survives with probability `q`, the surviving count has the same family with
//! a rescaled parameter. The Monte Carlo engines lean on this to draw only the
//! pairs that matter.

use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::math::{exp, exp_m1, floor, ln, ln_1p, powi};
use crate::rng::{geometric_failures, poisson_nonzero, poisson_small, StreamRng};

/// Shape of the pair-number distribution named in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairNumberModel {
    #[default]
    Poisson,
    Thermal,
    /// Zero or one pair, never more.
    AtMostOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairDistribution {
    Poisson { mean: f64 },
    /// Bose–Einstein: `P(n) = μⁿ / (1 + μ)ⁿ⁺¹`.
    Thermal { mean: f64 },
    /// `n` independent trials of probability `p`; `Binomial { n: 1, p: 1.0 }` is exactly one pair.
    Binomial { n: u32, p: f64 },
}

impl PairDistribution {
    pub fn from_model(model: PairNumberModel, mean: f64) -> Self {
        match model {
            PairNumberModel::Poisson => PairDistribution::Poisson { mean },
            PairNumberModel::Thermal => PairDistribution::Thermal { mean },
            PairNumberModel::AtMostOne => PairDistribution::Binomial { n: 1, p: mean.min(1.0) },
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            PairDistribution::Poisson { mean } | PairDistribution::Thermal { mean } => mean,
            PairDistribution::Binomial { n, p } => n as f64 * p,
        }
    }

    /// `E[sᴺ]`
    pub fn pgf(&self, s: f64) -> f64 {
        match *self {
            PairDistribution::Poisson { mean } => exp(-mean * (1.0 - s)),
            PairDistribution::Thermal { mean } => 1.0 / (1.0 + mean * (1.0 - s)),
            PairDistribution::Binomial { n, p } => powi(1.0 - p * (1.0 - s), n as i32),
        }
    }

    /// `P(N = 0)`
    pub fn p_zero(&self) -> f64 {
        self.pgf(0.0)
    }

    /// `P(N ≥ 1)`, accurate for tiny means.
    pub fn p_nonzero(&self) -> f64 {
        match *self {
            PairDistribution::Poisson { mean } => -exp_m1(-mean),
            PairDistribution::Thermal { mean } => mean / (1.0 + mean),
            PairDistribution::Binomial { n, p } => -exp_m1(n as f64 * ln_1p(-p)),
        }
    }

    /// Distribution of the pairs that survive independent loss with survival probability `q`.
    pub fn thin(&self, q: f64) -> Self {
        match *self {
            PairDistribution::Poisson { mean } => PairDistribution::Poisson { mean: mean * q },
            PairDistribution::Thermal { mean } => PairDistribution::Thermal { mean: mean * q },
            PairDistribution::Binomial { n, p } => PairDistribution::Binomial { n, p: p * q },
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match *self {
            PairDistribution::Poisson { mean } => {
                if mean == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                exp(k as f64 * ln(mean) - mean - ln_factorial(k))
            }
            PairDistribution::Thermal { mean } => {
                let x = mean / (1.0 + mean);
                powi(x, k as i32) / (1.0 + mean)
            }
            PairDistribution::Binomial { n, p } => {
                if k > n as u64 {
                    return 0.0;
                }
                let lc = ln_factorial(n as u64) - ln_factorial(k) - ln_factorial(n as u64 - k);
                let a = if k == 0 { 0.0 } else { k as f64 * ln(p) };
                let b = if k == n as u64 { 0.0 } else { (n as u64 - k) as f64 * ln_1p(-p) };
                exp(lc + a + b)
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> u64 {
        match *self {
            PairDistribution::Poisson { mean } => {
                if mean < 30.0 {
                    poisson_small(rng, mean)
                } else {
                    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
                }
            }
            PairDistribution::Thermal { mean } => {
                if mean <= 0.0 {
                    0
                } else {
                    geometric_failures(rng, 1.0 / (1.0 + mean))
                }
            }
            PairDistribution::Binomial { n, p } => binomial(rng, n as u64, p),
        }
    }

    /// Sample conditioned on `N ≥ 1`. The distribution must put mass on `N ≥ 1`.
    pub fn sample_nonzero(&self, rng: &mut StreamRng) -> u64 {
        match *self {
            PairDistribution::Poisson { mean } => {
                if mean < 30.0 {
                    poisson_nonzero(rng, mean)
                } else {
                    loop {
                        let k = self.sample(rng);
                        if k > 0 {
                            return k;
                        }
                    }
                }
            }
            // Memoryless: N | N ≥ 1 is 1 + N.
            PairDistribution::Thermal { mean } => 1 + geometric_failures(rng, 1.0 / (1.0 + mean)),
            PairDistribution::Binomial { n, p } => {
                if n <= 64 {
                    let u = rng.uniform() * self.p_nonzero();
                    let mut cdf = 0.0;
                    for k in 1..=n as u64 {
                        cdf += self.pmf(k);
                        if u < cdf {
                            return k;
                        }
                    }
                    n as u64
                } else {
                    loop {
                        let k = binomial(rng, n as u64, p);
                        if k > 0 {
                            return k;
                        }
                    }
                }
            }
        }
    }
}

pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k < 32 {
        return (2..=k).map(|i| ln(i as f64)).sum();
    }
    libm::lgamma(k as f64 + 1.0)
}

/// Binomial sample; exact Bernoulli sums for small `n`, rand_distr otherwise.
pub fn binomial(rng: &mut StreamRng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= 16 {
        return (0..n).filter(|_| rng.uniform() < p).count() as u64;
    }
    Binomial::new(n, p).map(|d| d.sample(rng)).unwrap_or(0)
}

/// Poisson sample for any mean.
pub fn poisson(rng: &mut StreamRng, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < 30.0 {
        poisson_small(rng, mean)
    } else {
        Poisson::new(mean).map(|d| floor(d.sample(rng)) as u64).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;
    use proptest::prelude::*;

    fn all() -> [PairDistribution; 4] {
        [
            PairDistribution::Poisson { mean: 0.4 },
            PairDistribution::Thermal { mean: 0.4 },
            PairDistribution::Binomial { n: 5, p: 0.08 },
            PairDistribution::Binomial { n: 1, p: 1.0 },
        ]
    }

    #[test]
    fn pmf_sums_and_pgf_agree() {
        for d in all() {
            let total: f64 = (0..200).map(|k| d.pmf(k)).sum();
            assert!((total - 1.0).abs() < 1e-12, "{d:?}");
            for s in [0.0f64, 0.3, 0.9] {
                let direct: f64 = (0..200).map(|k| d.pmf(k) * s.powi(k as i32)).sum();
                assert!((direct - d.pgf(s)).abs() < 1e-12, "{d:?} {s}");
            }
            assert!((d.p_nonzero() - (1.0 - d.p_zero())).abs() < 1e-14);
        }
    }

    /// Thinning oracle: convolve the pmf with binomial survival by brute force.
    #[test]
    fn thinning_matches_brute_force() {
        let q = 0.37;
        for d in all() {
            let thinned = d.thin(q);
            for k in 0..6u64 {
                let brute: f64 = (k..200)
                    .map(|n| {
                        let comb = exp(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k));
                        d.pmf(n) * comb * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)
                    })
                    .sum();
                assert!((brute - thinned.pmf(k)).abs() < 1e-12, "{d:?} k={k}");
            }
        }
    }

    #[test]
    fn sampling_matches_pmf() {
        let n = 200_000;
        for (i, d) in all().into_iter().enumerate() {
            let mut rng = StreamRng::new(11, i as u64, Purpose::Oracle);
            let mut hist = [0u64; 8];
            let mut hist_nz = [0u64; 8];
            for _ in 0..n {
                hist[(d.sample(&mut rng) as usize).min(7)] += 1;
                hist_nz[(d.sample_nonzero(&mut rng) as usize).min(7)] += 1;
            }
            assert_eq!(hist_nz[0], 0);
            for k in 0..5 {
                let p = d.pmf(k as u64);
                let sd = (p * (1.0 - p) * n as f64).sqrt().max(1.0);
                assert!((hist[k] as f64 - p * n as f64).abs() < 5.0 * sd, "{d:?} k={k}");
                if k > 0 {
                    let pn = p / d.p_nonzero();
                    let sdn = (pn * (1.0 - pn) * n as f64).sqrt().max(1.0);
                    assert!((hist_nz[k] as f64 - pn * n as f64).abs() < 5.0 * sdn, "{d:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn large_mean_paths() {
        let mut rng = StreamRng::new(2, 0, Purpose::Oracle);
        let m = 500.0;
        let mean = (0..20_000).map(|_| poisson(&mut rng, m) as f64).sum::<f64>() / 20_000.0;
        assert!((mean - m).abs() < 5.0 * (m / 20_000.0f64).sqrt());
        let b = (0..20_000).map(|_| binomial(&mut rng, 1_000_000, 1e-3) as f64).sum::<f64>() / 20_000.0;
        assert!((b - 1000.0).abs() < 5.0 * (999.0f64 / 20_000.0).sqrt());
    }

    proptest! {
        #[test]
        fn thinning_composes(mean in 0.0f64..3.0, q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
            for d in [PairDistribution::Poisson { mean }, PairDistribution::Thermal { mean }] {
                let a = d.thin(q1).thin(q2);
                let b = d.thin(q1 * q2);
                prop_assert!((a.pgf(0.5) - b.pgf(0.5)).abs() < 1e-14);
            }
        }
    }
}
