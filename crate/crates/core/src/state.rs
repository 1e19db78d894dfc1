//! Two-photon polarization states in the fixed basis `|HH⟩, |HV⟩, |VH⟩, |VV⟩`.

use core::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, c, conj, from_eigen, hermitian_eigen, hermiticity_error, kron2, matmul, max_abs, outer,
    scale, sub, trace, CMat, C64, ZERO,
};
use crate::math::sqrt;
use crate::polarization::JonesVector;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// A two-photon amplitude vector in the `HH, HV, VH, VV` basis.
pub type TwoPhoton = [C64; 4];

pub fn product_state(a: &JonesVector, b: &JonesVector) -> TwoPhoton {
    [a.0[0] * b.0[0], a.0[0] * b.0[1], a.0[1] * b.0[0], a.0[1] * b.0[1]]
}

/// `(|HH⟩ − |VV⟩)/√2`
pub fn phi_minus() -> TwoPhoton {
    let h = 1.0 / sqrt(2.0);
    [c(h, 0.0), ZERO, ZERO, c(-h, 0.0)]
}

pub fn phi_plus() -> TwoPhoton {
    let h = 1.0 / sqrt(2.0);
    [c(h, 0.0), ZERO, ZERO, c(h, 0.0)]
}

/// Hermitian, unit-trace 4×4 matrix. Positivity is only guaranteed for values
/// produced by [`nearest_physical`] or checked with [`DensityMatrix4::min_eigenvalue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(CMat<4>);

impl DensityMatrix4 {
    pub fn new(m: CMat<4>) -> Result<Self> {
        let herm = hermiticity_error(&m);
        if herm >= HERMITIAN_TOL {
            return Err(Error::Undefined("density matrix is not Hermitian"));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() >= TRACE_TOL || tr.im.abs() >= TRACE_TOL {
            return Err(Error::NotNormalized {
                what: "density matrix trace",
                norm_sqr: tr.re,
            });
        }
        Ok(Self(m))
    }

    pub fn pure(psi: &TwoPhoton) -> Result<Self> {
        let n: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized {
                what: "two-photon state",
                norm_sqr: n,
            });
        }
        Ok(Self(outer(psi)))
    }

    pub fn maximally_mixed() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = c(0.25, 0.0);
        }
        Self(m)
    }

    /// `p |ψ⟩⟨ψ| + (1 − p) I/4`
    pub fn werner(p: f64, psi: &TwoPhoton) -> Result<Self> {
        let pure = Self::pure(psi)?;
        Ok(Self::mix(&[(p, &pure), (1.0 - p, &Self::maximally_mixed())]))
    }

    /// Convex combination; weights are expected to sum to one.
    pub fn mix(parts: &[(f64, &DensityMatrix4)]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (w, rho) in parts {
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += rho.0[i][j] * *w;
                }
            }
        }
        Self(m)
    }

    pub fn matrix(&self) -> &CMat<4> {
        &self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigen(&self.0).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        trace(&matmul(&self.0, &self.0)).re
    }

    /// `(U ⊗ V) ρ (U ⊗ V)†`
    pub fn local_transform(&self, u: &CMat<2>, v: &CMat<2>) -> Self {
        let w = kron2(u, v);
        Self(matmul(&matmul(&w, &self.0), &adjoint(&w)))
    }

    /// Reduced state of the first photon.
    pub fn partial_trace_second(&self) -> CMat<2> {
        let m = &self.0;
        [
            [m[0][0] + m[1][1], m[0][2] + m[1][3]],
            [m[2][0] + m[3][1], m[2][2] + m[3][3]],
        ]
    }

    /// Reduced state of the second photon.
    pub fn partial_trace_first(&self) -> CMat<2> {
        let m = &self.0;
        [
            [m[0][0] + m[2][2], m[0][1] + m[2][3]],
            [m[1][0] + m[3][2], m[1][1] + m[3][3]],
        ]
    }

    /// `⟨ψ|ρ|ψ⟩` for a (not necessarily normalized) two-photon vector.
    pub fn expectation(&self, psi: &TwoPhoton) -> f64 {
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += psi[i].conj() * self.0[i][j] * psi[j];
            }
        }
        acc.re
    }
}

/// `⟨ψ|ρ|ψ⟩` for a unit-norm target.
pub fn fidelity(rho: &DensityMatrix4, target: &TwoPhoton) -> Result<f64> {
    let n: f64 = target.iter().map(|a| a.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized {
            what: "fidelity target",
            norm_sqr: n,
        });
    }
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += target[i].conj() * rho.0[i][j] * target[j];
        }
    }
    debug_assert!(acc.im.abs() < 1e-10);
    Ok(acc.re)
}

/// Concurrence squared, from the eigenvalues of `√ρ ρ̃ √ρ` with
/// `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`.
pub fn tangle(rho: &DensityMatrix4) -> Result<f64> {
    let c = concurrence(rho)?;
    Ok(c * c)
}

pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    let min = rho.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotPhysical { min_eigenvalue: min });
    }
    let flipped = spin_flip(&rho.0);
    // Rounding-level eigenvalues would enter as their square roots; drop them.
    let (mut values, vectors) = hermitian_eigen(&rho.0);
    let cutoff = 64.0 * f64::EPSILON * values[3].abs();
    for v in values.iter_mut() {
        *v = if *v > cutoff { sqrt(*v) } else { 0.0 };
    }
    let root = from_eigen(&values, &vectors);
    let r = matmul(&matmul(&root, &flipped), &root);
    let (values, _) = hermitian_eigen(&r);
    // Eigenvalues of R carry an absolute error of a few ulps of its norm.
    let floor = 64.0 * f64::EPSILON * values[3].abs();
    // ascending eigenvalues → descending λ
    let l: [f64; 4] = core::array::from_fn(|k| {
        let v = values[3 - k];
        if v > floor {
            sqrt(v)
        } else {
            0.0
        }
    });
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// `(σy⊗σy) ρ* (σy⊗σy)`
pub fn spin_flip(m: &CMat<4>) -> CMat<4> {
    let sy = [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]];
    let yy = kron2(&sy, &sy);
    matmul(&matmul(&yy, &conj(m)), &yy)
}

/// Projects a Hermitian matrix onto the density matrices by clipping negative
/// eigenvalues and renormalizing. Positive semidefinite inputs are returned
/// rescaled to unit trace only.
pub fn nearest_physical_matrix<const N: usize>(m: &CMat<N>) -> CMat<N> {
    let (mut values, vectors) = hermitian_eigen(m);
    if values[0] >= 0.0 {
        let tr = trace(m).re;
        return scale(m, 1.0 / tr);
    }
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        // Nothing positive survives; fall back to the maximally mixed state.
        let mut out = [[ZERO; N]; N];
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = c(1.0 / N as f64, 0.0);
        }
        return out;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
    from_eigen(&values, &vectors)
}

pub fn nearest_physical(raw: &CMat<4>) -> DensityMatrix4 {
    let mut m = nearest_physical_matrix(raw);
    // Remove residual anti-Hermitian rounding.
    for i in 0..4 {
        m[i][i].im = 0.0;
        for j in i + 1..4 {
            let h = (m[i][j] + m[j][i].conj()) * 0.5;
            m[i][j] = h;
            m[j][i] = h.conj();
        }
    }
    DensityMatrix4(m)
}

/// `½ ‖a − b‖₁`
pub fn trace_distance<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> f64 {
    let (values, _) = hermitian_eigen(&sub(a, b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn max_entry_difference(a: &DensityMatrix4, b: &DensityMatrix4) -> f64 {
    max_abs(&sub(&a.0, &b.0))
}

impl Serialize for DensityMatrix4 {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let rows: [[[f64; 2]; 4]; 4] =
            core::array::from_fn(|i| core::array::from_fn(|j| [self.0[i][j].re, self.0[i][j].im]));
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows = <[[[f64; 2]; 4]; 4]>::deserialize(d)?;
        let m: CMat<4> = core::array::from_fn(|i| core::array::from_fn(|j| c(rows[i][j][0], rows[i][j][1])));
        DensityMatrix4::new(m).map_err(de::Error::custom)
    }
}

impl fmt::Display for DensityMatrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            for (k, z) in row.iter().enumerate() {
                if k > 0 {
                    f.write_str("  ")?;
                }
                write!(f, "{:+.4}{:+.4}i", z.re, z.im)?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use nalgebra::{Complex, Matrix4, SMatrix};
    use proptest::prelude::*;

    fn random_unitary2(a: f64, b: f64, g: f64, d: f64) -> CMat<2> {
        // e^{iα} Rz(β) Ry(γ) Rz(δ)
        let ph = C64::from_polar(1.0, a);
        let (cg, sg) = ((g / 2.0).cos(), (g / 2.0).sin());
        let rz = |t: f64| [[C64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, C64::from_polar(1.0, t / 2.0)]];
        let ry = [[c(cg, 0.0), c(-sg, 0.0)], [c(sg, 0.0), c(cg, 0.0)]];
        let u = matmul(&matmul(&rz(b), &ry), &rz(d));
        core::array::from_fn(|i| core::array::from_fn(|j| u[i][j] * ph))
    }

    fn random_state(seed: &[f64]) -> DensityMatrix4 {
        // A = random complex 4x4, ρ = A A† / Tr
        let a: CMat<4> = core::array::from_fn(|i| core::array::from_fn(|j| c(seed[2 * (4 * i + j)], seed[2 * (4 * i + j) + 1])));
        let m = matmul(&a, &adjoint(&a));
        let tr = trace(&m).re;
        DensityMatrix4(scale(&m, 1.0 / tr))
    }

    /// Concurrence via the non-Hermitian product ρ ρ̃, diagonalized with a general
    /// real eigen solver on the 8×8 real embedding `[[Re, −Im], [Im, Re]]`, which
    /// carries every eigenvalue twice.
    fn wootters_oracle(rho: &DensityMatrix4) -> f64 {
        let to_na = |m: &CMat<4>| Matrix4::from_fn(|i, j| Complex::new(m[i][j].re, m[i][j].im));
        let r = to_na(&rho.0) * to_na(&spin_flip(&rho.0));
        let real = SMatrix::<f64, 8, 8>::from_fn(|i, j| {
            let z = r[(i % 4, j % 4)];
            match (i < 4, j < 4) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let ev = real.complex_eigenvalues();
        let mut all: Vec<f64> = ev.iter().map(|z| z.re.max(0.0).sqrt()).collect();
        all.sort_by(|a, b| b.total_cmp(a));
        let l: Vec<f64> = all.iter().step_by(2).copied().collect();
        (l[0] - l[1] - l[2] - l[3]).max(0.0)
    }

    #[test]
    fn fidelity_reference_values() {
        let bell = DensityMatrix4::pure(&phi_minus()).unwrap();
        assert!((fidelity(&bell, &phi_minus()).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix4::maximally_mixed();
        assert!((fidelity(&mixed, &phi_minus()).unwrap() - 0.25).abs() < 1e-15);
        let bad = [c(1.0, 0.0), c(1.0, 0.0), ZERO, ZERO];
        assert!(fidelity(&mixed, &bad).is_err());
    }

    #[test]
    fn tangle_reference_values() {
        let bell = DensityMatrix4::pure(&phi_minus()).unwrap();
        let t = tangle(&bell).unwrap();
        assert!((t - 1.0).abs() < 1e-12, "{t}");
        let hh = DensityMatrix4::pure(&product_state(&JonesVector::H, &JonesVector::H)).unwrap();
        assert!(tangle(&hh).unwrap().abs() < 1e-12);
        assert!(tangle(&DensityMatrix4::maximally_mixed()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn werner_tangle() {
        let w = DensityMatrix4::werner(0.96, &phi_minus()).unwrap();
        let closed = ((3.0 * 0.96 - 1.0) / 2.0f64).powi(2);
        let oracle = wootters_oracle(&w).powi(2);
        assert!((closed - 0.8836).abs() < 1e-12);
        assert!((oracle - 0.8836).abs() < 1e-9, "{oracle}");
        assert!((tangle(&w).unwrap() - 0.8836).abs() < 1e-9);
    }

    #[test]
    fn tangle_rejects_non_psd() {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = c(1.1, 0.0);
        m[3][3] = c(-0.1, 0.0);
        let raw = DensityMatrix4::new(m).unwrap();
        assert!(matches!(tangle(&raw), Err(Error::NotPhysical { .. })));
    }

    #[test]
    fn nearest_physical_clips_and_renormalizes() {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = c(1.1, 0.0);
        m[3][3] = c(-0.1, 0.0);
        let out = nearest_physical(&m);
        let mut expect = [[ZERO; 4]; 4];
        expect[0][0] = c(1.0, 0.0);
        assert!(max_abs(&sub(out.matrix(), &expect)) < 1e-12);
    }

    #[test]
    fn nearest_physical_is_identity_on_states() {
        let rho = DensityMatrix4::werner(0.7, &phi_minus()).unwrap();
        let out = nearest_physical(rho.matrix());
        assert!(max_entry_difference(&rho, &out) < 1e-12);
    }

    /// Grid-search oracle on real symmetric 3×3 states: no density matrix on the
    /// grid is closer (in trace distance) to the raw input than the projection.
    #[test]
    fn nearest_physical_beats_grid_on_toy_problem() {
        let raw: CMat<3> = [
            [c(0.62, 0.0), c(0.35, 0.0), c(-0.05, 0.0)],
            [c(0.35, 0.0), c(0.45, 0.0), c(0.30, 0.0)],
            [c(-0.05, 0.0), c(0.30, 0.0), c(-0.07, 0.0)],
        ];
        assert!(hermitian_eigen(&raw).0[0] < -0.05);
        let proj = nearest_physical_matrix(&raw);
        let ours = trace_distance(&raw, &proj);

        let steps: Vec<f64> = (0..9).map(|k| -1.0 + 0.25 * k as f64).collect();
        let mut best = f64::INFINITY;
        for &l00 in &steps[4..] {
            for &l11 in &steps[4..] {
                for &l22 in &steps[4..] {
                    for &l10 in &steps {
                        for &l20 in &steps {
                            for &l21 in &steps {
                                let l = [[l00, 0.0, 0.0], [l10, l11, 0.0], [l20, l21, l22]];
                                let mut s = [[ZERO; 3]; 3];
                                let mut tr = 0.0;
                                for i in 0..3 {
                                    for j in 0..3 {
                                        let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                                        s[i][j] = c(v, 0.0);
                                    }
                                    tr += s[i][i].re;
                                }
                                if tr == 0.0 {
                                    continue;
                                }
                                let s = scale(&s, 1.0 / tr);
                                best = best.min(trace_distance(&raw, &s));
                            }
                        }
                    }
                }
            }
        }
        assert!(ours <= best + 1e-12, "projection {ours} vs grid {best}");
    }

    #[test]
    fn serialization_round_trip() {
        let rho = DensityMatrix4::werner(0.9, &phi_minus()).unwrap();
        let json = serde_json::to_string(&rho).unwrap();
        assert!(json.starts_with("[[[0.47"), "{json}");
        let back: DensityMatrix4 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn partial_traces_of_bell_state_are_mixed() {
        let bell = DensityMatrix4::pure(&phi_minus()).unwrap();
        let half = scale(&identity::<2>(), 0.5);
        assert!(max_abs(&sub(&bell.partial_trace_first(), &half)) < 1e-15);
        assert!(max_abs(&sub(&bell.partial_trace_second(), &half)) < 1e-15);
    }

    proptest! {
        #[test]
        fn tangle_matches_general_eigen_oracle(seed in prop::collection::vec(-1.0f64..1.0, 32)) {
            let rho = random_state(&seed);
            let ours = tangle(&rho).unwrap();
            let oracle = wootters_oracle(&rho).powi(2);
            prop_assert!((ours - oracle).abs() < 1e-7, "{} vs {}", ours, oracle);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ours));
        }

        #[test]
        fn tangle_local_unitary_invariance(
            seed in prop::collection::vec(-1.0f64..1.0, 32),
            angles in prop::array::uniform8(-3.2f64..3.2),
        ) {
            let rho = random_state(&seed);
            let u = random_unitary2(angles[0], angles[1], angles[2], angles[3]);
            let v = random_unitary2(angles[4], angles[5], angles[6], angles[7]);
            let moved = rho.local_transform(&u, &v);
            prop_assert!((tangle(&rho).unwrap() - tangle(&moved).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn fidelity_bounded_and_linear(
            s1 in prop::collection::vec(-1.0f64..1.0, 32),
            s2 in prop::collection::vec(-1.0f64..1.0, 32),
            w in 0.0f64..1.0,
        ) {
            let (a, b) = (random_state(&s1), random_state(&s2));
            let target = phi_minus();
            let (fa, fb) = (fidelity(&a, &target).unwrap(), fidelity(&b, &target).unwrap());
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fa));
            let mix = DensityMatrix4::mix(&[(w, &a), (1.0 - w, &b)]);
            let fm = fidelity(&mix, &target).unwrap();
            prop_assert!((fm - (w * fa + (1.0 - w) * fb)).abs() < 1e-12);
        }

        #[test]
        fn projection_is_physical_and_optimal(
            seed in prop::collection::vec(-1.0f64..1.0, 32),
            noise in prop::collection::vec(-0.08f64..0.08, 16),
        ) {
            let rho = random_state(&seed);
            let mut raw = *rho.matrix();
            let mut k = 0;
            for i in 0..4 {
                for j in i..4 {
                    if i == j {
                        raw[i][i].re += noise[k];
                        k += 1;
                    } else {
                        let z = c(noise[k], noise[(k + 1) % 16]);
                        raw[i][j] += z;
                        raw[j][i] += z.conj();
                        k += 1;
                    }
                }
            }
            let tr = trace(&raw).re;
            let raw = scale(&raw, 1.0 / tr);
            let out = nearest_physical(&raw);
            prop_assert!(out.min_eigenvalue() >= -PSD_TOL);
            prop_assert!((trace(out.matrix()).re - 1.0).abs() < 1e-12);
            prop_assert!(hermiticity_error(out.matrix()) < 1e-12);
            // Clipping distance equals the total negative weight, the lower bound for any state.
            let neg: f64 = hermitian_eigen(&raw).0.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
            prop_assert!((trace_distance(&raw, out.matrix()) - neg).abs() < 1e-9);
            prop_assert!(trace_distance(&raw, out.matrix()) <= trace_distance(&raw, rho.matrix()) + 1e-12);
        }
    }
}
