// Triangular index ranges are the native shape of these kernels.
#![allow(clippy::needless_range_loop)]

//! Dense and banded symmetric factorizations and the dense symmetric
//! eigensolver backing the spectral oracle.
//!
//! The eigensolver is the classical Householder tridiagonalization followed
//! by implicit-shift QL with accumulated rotations, the same routine family
//! every dense symmetric package ships. Generalized pairs `(A, M)` are
//! reduced through the Cholesky factor of `M`, which makes the returned
//! eigenvectors mass-orthonormal by construction.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, hypot, sqrt};

use crate::error::{Error, Result};
use crate::form::SymmetricForm;

/// Entry cap for the in-band factor of a sparse form; beyond this the
/// fill-in would leave desk scale.
const BAND_ENTRY_CAP: usize = 25_000_000;

/// Lower-triangular Cholesky factor of a dense SPD matrix.
#[derive(Debug)]
pub(crate) struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub(crate) fn factor(n: usize, a: &[f64]) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a[j * n + j];
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let dj = sqrt(diag);
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(DenseCholesky { n, l })
    }

    /// Solves `L y = b` in place.
    pub(crate) fn forward_into(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `L^T x = b` in place.
    pub(crate) fn backward_into(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `L L^T x = b` in place.
    pub(crate) fn solve_into(&self, b: &mut [f64]) {
        self.forward_into(b);
        self.backward_into(b);
    }
}

/// Cholesky factor of an SPD matrix stored inside its band.
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i-bw..=i]` at offsets `j - i + bw`.
    l: Vec<f64>,
}

impl BandCholesky {
    pub(crate) fn factor_form(form: &SymmetricForm) -> Result<Self> {
        let n = form.dim();
        let bw = form.bandwidth();
        let width = bw + 1;
        if n.saturating_mul(width) > BAND_ENTRY_CAP {
            return Err(Error::ProblemTooLarge {
                dim: n * width,
                max: BAND_ENTRY_CAP,
            });
        }
        let mut band = vec![0.0; n * width];
        for (i, j, v) in form.lower_triangle() {
            band[i * width + (j + bw - i)] = v;
        }
        Self::factor(n, bw, band)
    }

    fn factor(n: usize, bw: usize, mut band: Vec<f64>) -> Result<Self> {
        let width = bw + 1;
        let at = |i: usize, j: usize| i * width + (j + bw - i);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[at(i, j)];
                let kmin = j0.max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= band[at(i, k)] * band[at(j, k)];
                }
                if j < i {
                    band[at(i, j)] = s / band[at(j, j)];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    band[at(i, i)] = sqrt(s);
                }
            }
        }
        Ok(BandCholesky { n, bw, l: band })
    }

    pub(crate) fn solve_into(&self, b: &mut [f64]) {
        let width = self.bw + 1;
        let at = |i: usize, j: usize| i * width + (j + self.bw - i);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[at(i, k)] * b[k];
            }
            b[i] = s / self.l[at(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let kmax = (i + self.bw).min(self.n - 1);
            for k in (i + 1)..=kmax {
                s -= self.l[at(k, i)] * b[k];
            }
            b[i] = s / self.l[at(i, i)];
        }
    }
}

/// Factorization of an SPD form, dispatched on its storage.
pub(crate) enum SpdFactor {
    Dense(DenseCholesky),
    Band(BandCholesky),
}

impl SpdFactor {
    pub(crate) fn new(form: &SymmetricForm) -> Result<Self> {
        if form.is_sparse() {
            Ok(SpdFactor::Band(BandCholesky::factor_form(form)?))
        } else {
            Ok(SpdFactor::Dense(DenseCholesky::factor(
                form.dim(),
                &form.to_dense(),
            )?))
        }
    }

    pub(crate) fn solve_into(&self, b: &mut [f64]) {
        match self {
            SpdFactor::Dense(f) => f.solve_into(b),
            SpdFactor::Band(f) => f.solve_into(b),
        }
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_into(&mut x);
        x
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form with
/// accumulated transformations. On exit `v` holds the orthogonal matrix,
/// `d` the diagonal and `e[1..]` the subdiagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += fabs(*item);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                let fj = d[j];
                v[j * n + i] = fj;
                let mut g = e[j] + v[j * n + j] * fj;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * fj;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let fj = d[j];
                let gj = e[j];
                for k in j..i {
                    v[k * n + j] -= fj * e[k] + gj * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + (i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + (i + 1)] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + (i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, rotating the
/// columns of `v` along. Fails only if an eigenvalue refuses to converge,
/// which for well-formed input does not happen.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], v: &mut [f64]) -> Result<()> {
    const MAX_ITER: usize = 50;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(fabs(d[l]) + fabs(e[l]));
        let mut m = l;
        while m < n {
            if fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_ITER {
                    return Err(Error::EigenSolverFailed {
                        iterations: MAX_ITER,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0_f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0_f64;
                let mut s2 = 0.0_f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[k * n + (i + 1)];
                        v[k * n + (i + 1)] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Full eigendecomposition of a dense symmetric matrix. Returns the
/// eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns of a row-major `n x n` matrix.
pub(crate) fn sym_eigen_dense(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    debug_assert_eq!(a.len(), n * n);
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut d, &mut e, &mut v)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(core::cmp::Ordering::Equal));
    let values: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new_j] = v[k * n + old_j];
        }
    }
    Ok((values, vectors))
}

/// Eigendecomposition of the SPD pencil `(A, M)` through the Cholesky
/// reduction `M = L L^T`, `C = L^-1 A L^-T`. The returned eigenvectors are
/// M-orthonormal.
pub(crate) fn generalized_sym_eigen(
    n: usize,
    a: &[f64],
    m: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lm = DenseCholesky::factor(n, m)?;

    // W = L^-1 A, assembled column by column (columns of A are its rows by
    // symmetry).
    let mut w = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = a[i * n + j];
        }
        lm.forward_into(&mut col);
        for i in 0..n {
            w[i * n + j] = col[i];
        }
    }
    // C^T = L^-1 W^T, then symmetrize C to wash out roundoff asymmetry.
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        col.copy_from_slice(&w[i * n..(i + 1) * n]);
        lm.forward_into(&mut col);
        for j in 0..n {
            c[j * n + i] = col[j];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = avg;
            c[j * n + i] = avg;
        }
    }

    let (values, mut y) = sym_eigen_dense(n, &c)?;
    // Back-transform each eigenvector: x = L^-T y.
    for j in 0..n {
        for i in 0..n {
            col[i] = y[i * n + j];
        }
        lm.backward_into(&mut col);
        for i in 0..n {
            y[i * n + j] = col[i];
        }
    }
    Ok((values, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn tridiag_dense(n: usize, diag: f64, off: f64) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = diag;
            if i + 1 < n {
                a[i * n + i + 1] = off;
                a[(i + 1) * n + i] = off;
            }
        }
        a
    }

    /// Deterministic pseudo-random SPD matrix: B^T B + n I.
    fn random_spd(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).max(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let b: Vec<f64> = (0..n * n).map(|_| next()).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b[k * n + i] * b[k * n + j];
                }
                a[i * n + j] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let n = 5;
        let a = random_spd(n, 7);
        let f = DenseCholesky::factor(n, &a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64) - 1.5).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[i * n + j] * x_true[j];
            }
        }
        f.solve_into(&mut b);
        for (got, want) in b.iter().zip(&x_true) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert_eq!(
            DenseCholesky::factor(2, &a).unwrap_err(),
            Error::NotPositiveDefinite { pivot: 1 }
        );
    }

    #[test]
    fn band_solve_matches_dense() {
        let n = 8;
        let form = SymmetricForm::from_tridiagonal(
            n,
            &vec![4.0; n],
            &vec![-1.0; n - 1],
        )
        .unwrap();
        let band = BandCholesky::factor_form(&form).unwrap();
        let dense = DenseCholesky::factor(n, &form.to_dense()).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut xb = b.clone();
        band.solve_into(&mut xb);
        let mut xd = b;
        dense.solve_into(&mut xd);
        for (a, b) in xb.iter().zip(&xd) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn eigen_diagonal_matrix() {
        let n = 4;
        let mut a = vec![0.0; n * n];
        for (i, &val) in [3.0, 1.0, 4.0, 2.0].iter().enumerate() {
            a[i * n + i] = val;
        }
        let (vals, vecs) = sym_eigen_dense(n, &a).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0, 4.0]);
        // Eigenvector for value 1.0 is the coordinate direction 1; its
        // component sits in row 1, column 0.
        assert_relative_eq!(fabs(vecs[n]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigen_matches_finite_difference_spectrum() {
        // Second-difference matrix: all eigenvalues known in closed form.
        for n in [3usize, 10, 37] {
            let h = 1.0 / (n as f64 + 1.0);
            let scale = 1.0 / (h * h);
            let a = tridiag_dense(n, 2.0 * scale, -scale);
            let (vals, vecs) = sym_eigen_dense(n, &a).unwrap();
            for (k, &val) in vals.iter().enumerate() {
                let angle = (k + 1) as f64 * PI * h / 2.0;
                let exact = 4.0 * scale * (angle.sin() * angle.sin());
                assert_relative_eq!(val, exact, max_relative = 1e-12);
            }
            // Residual check A z = lambda z.
            for j in 0..n {
                for i in 0..n {
                    let mut az = 0.0;
                    for k in 0..n {
                        az += a[i * n + k] * vecs[k * n + j];
                    }
                    assert_relative_eq!(az, vals[j] * vecs[i * n + j], epsilon = 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn eigen_orthonormal_on_random_input() {
        let n = 20;
        let a = random_spd(n, 42);
        let (vals, vecs) = sym_eigen_dense(n, &a).unwrap();
        for j in 1..n {
            assert!(vals[j] >= vals[j - 1]);
        }
        for i in 0..n {
            for j in 0..n {
                let mut g = 0.0;
                for k in 0..n {
                    g += vecs[k * n + i] * vecs[k * n + j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(g, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn generalized_diagonal_pair() {
        let a = vec![2.0, 0.0, 0.0, 6.0];
        let m = vec![2.0, 0.0, 0.0, 2.0];
        let (vals, vecs) = generalized_sym_eigen(2, &a, &m).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-14);
        // M-orthonormality.
        for i in 0..2 {
            let xi = [vecs[i], vecs[2 + i]];
            let norm = 2.0 * (xi[0] * xi[0] + xi[1] * xi[1]);
            assert_relative_eq!(norm, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn generalized_matches_fem_closed_form() {
        // P1 elements of the second-derivative operator on a unit interval:
        // both matrices tridiagonal, generalized spectrum known exactly.
        let n = 24;
        let h = 1.0 / (n as f64 + 1.0);
        let a = tridiag_dense(n, 2.0 / h, -1.0 / h);
        let m = tridiag_dense(n, 4.0 * h / 6.0, h / 6.0);
        let (vals, _) = generalized_sym_eigen(n, &a, &m).unwrap();
        for (k, &val) in vals.iter().enumerate() {
            let t = ((k + 1) as f64 * PI * h).cos();
            let exact = (6.0 / (h * h)) * (1.0 - t) / (2.0 + t);
            assert_relative_eq!(val, exact, max_relative = 1e-11);
        }
    }
}
