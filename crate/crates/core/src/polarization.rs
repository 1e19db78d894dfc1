//! Single-photon polarization: Jones vectors, Stokes vectors, retarders and the
//! HWP → QWP → PBS analyzer used for projective measurements.
//!
//! Stokes components follow `(s1, s2, s3) = (⟨σz⟩, ⟨σx⟩, ⟨σy⟩)` in the `|H⟩, |V⟩`
//! basis, so `|H⟩ ↦ (1,0,0)`, `|D⟩ ↦ (0,1,0)` and `(|H⟩ + i|V⟩)/√2 ↦ (0,0,1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, apply, c, inner, matmul, CMat, C64, ONE, ZERO};
use crate::math::{acos, atan2, cos, sin, sqrt, wrap, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector(pub [C64; 2]);

impl JonesVector {
    pub const H: JonesVector = JonesVector([ONE, ZERO]);
    pub const V: JonesVector = JonesVector([ZERO, ONE]);

    pub fn new(h: C64, v: C64) -> Self {
        JonesVector([h, v])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn normalize(&self) -> Self {
        let n = sqrt(self.norm_sqr());
        JonesVector([self.0[0] / n, self.0[1] / n])
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &JonesVector) -> f64 {
        inner(&self.0, &other.0).norm_sqr()
    }

    pub fn stokes(&self) -> StokesVector {
        let n = self.norm_sqr();
        let [a, b] = self.0;
        let cross = a.conj() * b;
        StokesVector {
            s1: (a.norm_sqr() - b.norm_sqr()) / n,
            s2: 2.0 * cross.re / n,
            s3: 2.0 * cross.im / n,
        }
    }

    /// A pure state with the direction of `s`; the global phase makes the `H` amplitude real.
    pub fn from_stokes(s: &StokesVector) -> Self {
        let n = s.norm();
        let (s1, s2, s3) = if n > 0.0 {
            (s.s1 / n, s.s2 / n, s.s3 / n)
        } else {
            (1.0, 0.0, 0.0)
        };
        let theta = acos(s1.clamp(-1.0, 1.0));
        let phi = atan2(s3, s2);
        JonesVector([
            c(cos(theta / 2.0), 0.0),
            C64::from_polar(sin(theta / 2.0), phi),
        ])
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> CMat<2> {
        crate::linalg::outer(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn dot(&self, o: &StokesVector) -> f64 {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retarder {
    Half,
    Quarter,
}

impl Retarder {
    pub fn retardance(self) -> f64 {
        match self {
            Retarder::Half => PI,
            Retarder::Quarter => PI / 2.0,
        }
    }
}

/// Jones matrix of a retarder with its fast axis at `axis_angle` from horizontal.
/// The retardance is applied as a phase on the slow axis.
pub fn waveplate(kind: Retarder, axis_angle: f64) -> CMat<2> {
    let (cs, sn) = (cos(axis_angle), sin(axis_angle));
    let slow = C64::from_polar(1.0, kind.retardance());
    // R(θ) diag(1, e^{iδ}) R(-θ)
    [
        [c(cs * cs, 0.0) + slow * (sn * sn), c(cs * sn, 0.0) - slow * (cs * sn)],
        [c(cs * sn, 0.0) - slow * (cs * sn), c(sn * sn, 0.0) + slow * (cs * cs)],
    ]
}

/// Plate angles of one analyzer arm, each reduced into `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

impl AnalyzerSetting {
    pub fn new(qwp_angle: f64, hwp_angle: f64) -> Self {
        Self {
            qwp_angle: wrap(qwp_angle, PI),
            hwp_angle: wrap(hwp_angle, PI),
        }
    }
}

/// The state transmitted by the PBS after the photon crosses the HWP then the QWP:
/// transmission probability for a single-photon state `ρ₁` is `⟨ψ|ρ₁|ψ⟩`.
pub fn analyzer_projector(setting: &AnalyzerSetting) -> JonesVector {
    let q = waveplate(Retarder::Quarter, setting.qwp_angle);
    let h = waveplate(Retarder::Half, setting.hwp_angle);
    let total = matmul(&q, &h);
    JonesVector(apply(&adjoint(&total), &JonesVector::H.0))
}

/// Finds plate angles whose analyzer projects onto `target` (up to global phase).
///
/// Coarse grid followed by damped Gauss–Newton on the Stokes residual, which
/// converges to machine precision because the residual is evaluated exactly.
pub fn solve_plate_angles(target: &JonesVector) -> Result<AnalyzerSetting> {
    if (target.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized {
            what: "target Jones vector",
            norm_sqr: target.norm_sqr(),
        });
    }
    let goal = target.stokes();
    let residual = |q: f64, h: f64| -> [f64; 3] {
        let s = analyzer_projector(&AnalyzerSetting { qwp_angle: q, hwp_angle: h }).stokes();
        [s.s1 - goal.s1, s.s2 - goal.s2, s.s3 - goal.s3]
    };
    let cost = |r: &[f64; 3]| r[0] * r[0] + r[1] * r[1] + r[2] * r[2];

    const GRID: usize = 48;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..GRID {
        for j in 0..GRID {
            let q = PI * i as f64 / GRID as f64;
            let h = PI * j as f64 / GRID as f64;
            let e = cost(&residual(q, h));
            if e < best.2 {
                best = (q, h, e);
            }
        }
    }

    let (mut q, mut h, mut err) = best;
    let mut lambda = 1e-3;
    let step = 1e-7;
    for _ in 0..200 {
        if err < 1e-30 {
            break;
        }
        let r = residual(q, h);
        let rq1 = residual(q + step, h);
        let rq0 = residual(q - step, h);
        let rh1 = residual(q, h + step);
        let rh0 = residual(q, h - step);
        let jq: [f64; 3] = core::array::from_fn(|k| (rq1[k] - rq0[k]) / (2.0 * step));
        let jh: [f64; 3] = core::array::from_fn(|k| (rh1[k] - rh0[k]) / (2.0 * step));
        let a11: f64 = jq.iter().map(|x| x * x).sum();
        let a22: f64 = jh.iter().map(|x| x * x).sum();
        let a12: f64 = jq.iter().zip(&jh).map(|(x, y)| x * y).sum();
        let g1: f64 = jq.iter().zip(&r).map(|(x, y)| x * y).sum();
        let g2: f64 = jh.iter().zip(&r).map(|(x, y)| x * y).sum();
        let mut improved = false;
        for _ in 0..30 {
            let (b11, b22) = (a11 * (1.0 + lambda) + 1e-300, a22 * (1.0 + lambda) + 1e-300);
            let det = b11 * b22 - a12 * a12;
            if det == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let dq = -(b22 * g1 - a12 * g2) / det;
            let dh = -(b11 * g2 - a12 * g1) / det;
            let e = cost(&residual(q + dq, h + dh));
            if e < err {
                q += dq;
                h += dh;
                err = e;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(AnalyzerSetting::new(q, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs, sub};
    use proptest::prelude::*;

    fn unitarity_error(u: &CMat<2>) -> f64 {
        max_abs(&sub(&matmul(&adjoint(u), u), &identity()))
    }

    #[test]
    fn half_wave_axis_aligned_leaves_h() {
        let out = JonesVector(apply(&waveplate(Retarder::Half, 0.0), &JonesVector::H.0));
        assert!((out.overlap(&JonesVector::H) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_wave_at_22_5_deg_makes_diagonal() {
        let out = JonesVector(apply(&waveplate(Retarder::Half, PI / 8.0), &JonesVector::H.0));
        let d = JonesVector::new(c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0));
        assert!((out.overlap(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_wave_at_45_deg_makes_circular() {
        let out = JonesVector(apply(&waveplate(Retarder::Quarter, PI / 4.0), &JonesVector::H.0));
        let s = out.stokes();
        // Brute-force check of the Stokes conversion from the raw amplitudes.
        let [a, b] = out.0;
        let s3_direct = 2.0 * (a.re * b.im - a.im * b.re);
        assert!((s.s3 - s3_direct).abs() < 1e-15);
        assert!((s.s3.abs() - 1.0).abs() < 1e-12, "{s:?}");
        assert!(s.s1.abs() < 1e-12 && s.s2.abs() < 1e-12);
    }

    #[test]
    fn analyzer_reference_settings() {
        let h = analyzer_projector(&AnalyzerSetting::new(0.0, 0.0));
        assert!((h.overlap(&JonesVector::H) - 1.0).abs() < 1e-15);
        let d = analyzer_projector(&AnalyzerSetting::new(0.0, PI / 8.0));
        let target = JonesVector::new(c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0));
        assert!((d.overlap(&target) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn analyzer_setting_wraps_angles() {
        let s = AnalyzerSetting::new(-PI / 4.0, 5.0 * PI / 4.0);
        assert!((s.qwp_angle - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((s.hwp_angle - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn solve_plate_angles_reaches_arbitrary_states() {
        let targets = [
            StokesVector::new(1.0, 0.0, 0.0),
            StokesVector::new(-1.0, 0.0, 0.0),
            StokesVector::new(0.0, 0.0, 1.0),
            StokesVector::new(0.0, 0.0, -1.0),
            StokesVector::new(0.3, -0.4, 0.866_025_403_784_438_6),
        ];
        for t in targets {
            let psi = JonesVector::from_stokes(&t);
            let setting = solve_plate_angles(&psi).unwrap();
            let got = analyzer_projector(&setting);
            assert!(1.0 - got.overlap(&psi) < 1e-14, "{t:?}");
        }
    }

    #[test]
    fn solve_rejects_unnormalized_target() {
        let psi = JonesVector::new(c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(solve_plate_angles(&psi), Err(Error::NotNormalized { .. })));
    }

    proptest! {
        #[test]
        fn waveplates_are_unitary(angle in -10.0f64..10.0, half in any::<bool>()) {
            let kind = if half { Retarder::Half } else { Retarder::Quarter };
            prop_assert!(unitarity_error(&waveplate(kind, angle)) < 1e-12);
        }

        #[test]
        fn stokes_round_trip(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0) {
            let raw = JonesVector::new(c(re0, im0), c(re1, im1));
            prop_assume!(raw.norm_sqr() > 1e-3);
            let psi = raw.normalize();
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            let s = psi.stokes();
            prop_assert!(s.norm() <= 1.0 + 1e-9);
            let back = JonesVector::from_stokes(&s);
            prop_assert!((back.overlap(&psi) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn overlap_matches_stokes_relation(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
            let sa = StokesVector::new(a[0], a[1], a[2]);
            let sb = StokesVector::new(b[0], b[1], b[2]);
            prop_assume!(sa.norm() > 1e-3 && sb.norm() > 1e-3);
            let (ja, jb) = (JonesVector::from_stokes(&sa), JonesVector::from_stokes(&sb));
            let cosine = sa.dot(&sb) / (sa.norm() * sb.norm());
            prop_assert!((ja.overlap(&jb) - (1.0 + cosine) / 2.0).abs() < 1e-12);
        }
    }
}
