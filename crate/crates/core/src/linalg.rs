//! Fixed-size complex matrices and the few dense solvers the crate needs.

use alloc::vec::Vec;
use num_complex::Complex;

use crate::math::{atan2, cos, sin, sqrt};

pub type C64 = Complex<f64>;

/// Square complex matrix stored row-major.
pub type CMat<const N: usize> = [[C64; N]; N];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity<const N: usize>() -> CMat<N> {
    let mut m = [[ZERO; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn matmul<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    let mut out = [[ZERO; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint<const N: usize>(a: &CMat<N>) -> CMat<N> {
    let mut out = [[ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn conj<const N: usize>(a: &CMat<N>) -> CMat<N> {
    let mut out = *a;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x = x.conj();
        }
    }
    out
}

pub fn trace<const N: usize>(a: &CMat<N>) -> C64 {
    (0..N).map(|i| a[i][i]).sum()
}

pub fn scale<const N: usize>(a: &CMat<N>, s: f64) -> CMat<N> {
    let mut out = *a;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    out
}

pub fn add<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn sub<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    add(a, &scale(b, -1.0))
}

/// Largest elementwise modulus.
pub fn max_abs<const N: usize>(a: &CMat<N>) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

/// `max |A - A†|`.
pub fn hermiticity_error<const N: usize>(a: &CMat<N>) -> f64 {
    max_abs(&sub(a, &adjoint(a)))
}

/// Kronecker product of two single-photon operators, first factor most significant.
pub fn kron2(a: &CMat<2>, b: &CMat<2>) -> CMat<4> {
    let mut out = [[ZERO; 4]; 4];
    for i1 in 0..2 {
        for j1 in 0..2 {
            for i2 in 0..2 {
                for j2 in 0..2 {
                    out[i1 * 2 + i2][j1 * 2 + j2] = a[i1][j1] * b[i2][j2];
                }
            }
        }
    }
    out
}

pub fn apply<const N: usize>(a: &CMat<N>, v: &[C64; N]) -> [C64; N] {
    let mut out = [ZERO; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| a[i][j] * v[j]).sum();
    }
    out
}

/// `⟨u|v⟩`
pub fn inner<const N: usize>(u: &[C64; N], v: &[C64; N]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `|v⟩⟨v|`
pub fn outer<const N: usize>(v: &[C64; N]) -> CMat<N> {
    let mut out = [[ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = v[i] * v[j].conj();
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as the
/// columns of the second value. Only the upper triangle's Hermitian part is
/// trusted; the input is symmetrized first.
pub fn hermitian_eigen<const N: usize>(m: &CMat<N>) -> ([f64; N], CMat<N>) {
    let mut a = *m;
    for i in 0..N {
        a[i][i] = c(a[i][i].re, 0.0);
        for j in i + 1..N {
            let h = (a[i][j] + a[j][i].conj()) * 0.5;
            a[i][j] = h;
            a[j][i] = h.conj();
        }
    }
    let mut v = identity::<N>();
    let scale = max_abs(&a).max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let off: f64 = (0..N)
            .flat_map(|p| (p + 1..N).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum();
        if off <= (1e-17 * scale) * (1e-17 * scale) {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let theta = 0.5 * atan2(2.0 * mag, a[q][q].re - a[p][p].re);
                let (cs, sn) = (cos(theta), sin(theta));
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]] restricted to (p, q).
                let u_pp = c(cs, 0.0);
                let u_pq = c(sn, 0.0);
                let u_qp = -phase.conj() * sn;
                let u_qq = phase.conj() * cs;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * u_pp + y * u_qp;
                    row[q] = x * u_pq + y * u_qq;
                }
                for k in 0..N {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = u_pp.conj() * x + u_qp.conj() * y;
                    a[q][k] = u_pq.conj() * x + u_qq.conj() * y;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
                a[p][p] = c(a[p][p].re, 0.0);
                a[q][q] = c(a[q][q].re, 0.0);
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * u_pp + y * u_qp;
                    row[q] = x * u_pq + y * u_qq;
                }
            }
        }
    }

    let mut order = [0usize; N];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let mut values = [0.0; N];
    let mut vectors = [[ZERO; N]; N];
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[src][src].re;
        for row in 0..N {
            vectors[row][dst] = v[row][src];
        }
    }
    (values, vectors)
}

/// Rebuilds `V diag(values) V†`.
pub fn from_eigen<const N: usize>(values: &[f64; N], vectors: &CMat<N>) -> CMat<N> {
    let mut out = [[ZERO; N]; N];
    for (k, &lambda) in values.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        for i in 0..N {
            for j in 0..N {
                out[i][j] += vectors[i][k] * vectors[j][k].conj() * lambda;
            }
        }
    }
    out
}

/// Square root of a positive semidefinite Hermitian matrix; negative eigenvalues are clipped.
pub fn psd_sqrt<const N: usize>(m: &CMat<N>) -> CMat<N> {
    let (mut values, vectors) = hermitian_eigen(m);
    for v in values.iter_mut() {
        *v = sqrt(v.max(0.0));
    }
    from_eigen(&values, &vectors)
}

/// Solves the dense real system `A x = b` (row-major `n × n`) by Gaussian
/// elimination with partial pivoting. Returns `None` for a numerically singular matrix.
pub fn solve_real(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m: Vec<f64> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[pivot * n + col].abs() <= 1e-14 * norm {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Inverts a dense real matrix column by column.
pub fn invert_real(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = alloc::vec![0.0; n * n];
    let mut e = alloc::vec![0.0; n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[col] = 1.0;
        let x = solve_real(a, &e, n)?;
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

/// 2-norm condition number of the 16 × 16 real matrix `a`.
pub fn condition_number_16(a: &[f64]) -> f64 {
    assert_eq!(a.len(), 256);
    let mut gram = [[ZERO; 16]; 16];
    for i in 0..16 {
        for j in 0..16 {
            let s: f64 = (0..16).map(|k| a[k * 16 + i] * a[k * 16 + j]).sum();
            gram[i][j] = c(s, 0.0);
        }
    }
    let (values, _) = hermitian_eigen(&gram);
    let lo = values[0].max(0.0);
    let hi = values[15];
    if lo == 0.0 {
        f64::INFINITY
    } else {
        sqrt(hi / lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(seed: u64) -> CMat<4> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            m[i][i] = c(next(), 0.0);
            for j in i + 1..4 {
                let z = c(next(), next());
                m[i][j] = z;
                m[j][i] = z.conj();
            }
        }
        m
    }

    #[test]
    fn eigen_reconstructs_and_is_unitary() {
        for seed in 0..50 {
            let m = random_hermitian(seed);
            let (vals, vecs) = hermitian_eigen(&m);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let back = from_eigen(&vals, &vecs);
            assert!(max_abs(&sub(&back, &m)) < 1e-12);
            let vv = matmul(&adjoint(&vecs), &vecs);
            assert!(max_abs(&sub(&vv, &identity())) < 1e-12);
        }
    }

    #[test]
    fn eigen_handles_degenerate_spectrum() {
        let m = identity::<4>();
        let (vals, _) = hermitian_eigen(&m);
        assert_eq!(vals, [1.0; 4]);
        let bell = outer(&[c(0.5f64.sqrt(), 0.0), ZERO, ZERO, c(-(0.5f64.sqrt()), 0.0)]);
        let (vals, _) = hermitian_eigen(&bell);
        assert!(vals[..3].iter().all(|v| v.abs() < 1e-14));
        assert!((vals[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = random_hermitian(7);
        let psd = matmul(&m, &adjoint(&m));
        let r = psd_sqrt(&psd);
        assert!(max_abs(&sub(&matmul(&r, &r), &psd)) < 1e-12);
    }

    #[test]
    fn solve_and_invert() {
        let a = [4.0, 1.0, 2.0, 1.0, 3.0, 0.0, 2.0, 0.0, 5.0];
        let x = solve_real(&a, &[1.0, 2.0, 3.0], 3).unwrap();
        for r in 0..3 {
            let s: f64 = (0..3).map(|k| a[r * 3 + k] * x[k]).sum();
            assert!((s - [1.0, 2.0, 3.0][r]).abs() < 1e-12);
        }
        assert!(solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_none());
        let inv = invert_real(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn condition_number_of_scaled_identity_is_one() {
        let mut a = [0.0; 256];
        for i in 0..16 {
            a[i * 16 + i] = 3.0;
        }
        assert!((condition_number_16(&a) - 1.0).abs() < 1e-12);
        a[0] = 30.0;
        assert!((condition_number_16(&a) - 10.0).abs() < 1e-10);
    }
}
