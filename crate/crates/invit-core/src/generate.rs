//! Construction of test eigenproblems with exactly known or oracle-computed
//! spectral metadata, and of admissible starting vectors with a prescribed
//! Rayleigh quotient below the spectral gap.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::form::SymmetricForm;
use crate::linalg;
use crate::problem::{validate_metadata, Eigenproblem, SpectralMetadata};
use crate::vector::Vector;

/// Dense-decomposition cap of the spectral oracle.
pub const ORACLE_MAX_DIM: usize = 2000;

/// Eigenvalues within `CLUSTER_RTOL * lambda1` of the minimum are collected
/// into its eigenspace.
pub const CLUSTER_RTOL: f64 = 1e-8;

/// Below `GAP_FLOOR_RTOL * lambda1` the spectral gap makes every certificate
/// numerically vacuous; such problems are rejected rather than certified.
pub const GAP_FLOOR_RTOL: f64 = 1e-6;

/// Desk-scale cap on the dimension of the five-point grid problem.
pub const GRID_2D_MAX_DIM: usize = 10_000;

/// Diagonal model problem: `A = diag(sorted eigenvalues)`, `M = I`, with
/// exact metadata. Repeated minima are supported and produce a
/// higher-multiplicity eigenspace.
pub fn diagonal_problem(eigs: &[f64]) -> Result<Eigenproblem> {
    if eigs.is_empty() {
        return Err(Error::EmptyVector);
    }
    for &e in eigs {
        if e <= 0.0 || !e.is_finite() {
            return Err(Error::NonPositiveEigenvalue { value: e });
        }
    }
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let lambda1 = sorted[0];
    let multiplicity = sorted.iter().take_while(|&&e| e == lambda1).count();
    if multiplicity == sorted.len() {
        return Err(Error::GapUndefined);
    }
    let lambda2 = sorted[multiplicity];
    let n = sorted.len();
    let a = SymmetricForm::from_coo_symmetric(
        n,
        &sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect::<Vec<_>>(),
    )?;
    let m = SymmetricForm::identity(n)?;
    let basis = (0..multiplicity)
        .map(|i| Vector::basis(n, i))
        .collect::<Result<Vec<_>>>()?;
    let meta = SpectralMetadata::new(lambda1, lambda2, basis)?;
    Eigenproblem::new(a, m)?.with_metadata(meta)
}

/// Dirichlet second-difference operator on `(0, 1)` with `n` interior
/// points: `A = (n+1)^2 tridiag(-1, 2, -1)`, `M = I`. Metadata comes from
/// the dense oracle.
pub fn laplacian_1d(n: usize) -> Result<Eigenproblem> {
    if n < 3 {
        return Err(Error::GridTooSmall { n, min: 3 });
    }
    let scale = ((n + 1) * (n + 1)) as f64;
    let a = SymmetricForm::from_tridiagonal(n, &vec![2.0 * scale; n], &vec![-scale; n - 1])?;
    let m = SymmetricForm::identity(n)?;
    let p = Eigenproblem::new(a, m)?;
    let meta = spectral_oracle(&p)?;
    p.with_metadata(meta)
}

/// Five-point stencil on an `n x n` interior grid of the unit square,
/// scaled by `(n+1)^2`, `M = I`. The minimum eigenvalue is simple.
pub fn laplacian_2d(n: usize) -> Result<Eigenproblem> {
    if n < 3 {
        return Err(Error::GridTooSmall { n, min: 3 });
    }
    let dim = n * n;
    if dim > GRID_2D_MAX_DIM {
        return Err(Error::ProblemTooLarge {
            dim,
            max: GRID_2D_MAX_DIM,
        });
    }
    let scale = ((n + 1) * (n + 1)) as f64;
    let mut triples = Vec::with_capacity(3 * dim);
    let idx = |r: usize, c: usize| r * n + c;
    for r in 0..n {
        for c in 0..n {
            triples.push((idx(r, c), idx(r, c), 4.0 * scale));
            if c + 1 < n {
                triples.push((idx(r, c + 1), idx(r, c), -scale));
            }
            if r + 1 < n {
                triples.push((idx(r + 1, c), idx(r, c), -scale));
            }
        }
    }
    let a = SymmetricForm::from_coo_symmetric(dim, &triples)?;
    let m = SymmetricForm::identity(dim)?;
    let p = Eigenproblem::new(a, m)?;
    let meta = spectral_oracle(&p)?;
    p.with_metadata(meta)
}

/// P1 finite elements on `(0, 1)`: `A = (1/h) tridiag(-1, 2, -1)`,
/// `M = (h/6) tridiag(1, 4, 1)`, `h = 1/(n+1)`. A genuinely generalized
/// problem exercising a non-identity mass form.
pub fn fem1d_problem(n: usize) -> Result<Eigenproblem> {
    if n < 3 {
        return Err(Error::GridTooSmall { n, min: 3 });
    }
    let h = 1.0 / (n as f64 + 1.0);
    let a = SymmetricForm::from_tridiagonal(n, &vec![2.0 / h; n], &vec![-1.0 / h; n - 1])?;
    let m = SymmetricForm::from_tridiagonal(n, &vec![4.0 * h / 6.0; n], &vec![h / 6.0; n - 1])?;
    let p = Eigenproblem::new(a, m)?;
    let meta = spectral_oracle(&p)?;
    p.with_metadata(meta)
}

/// Dense generalized eigendecomposition supplying the minimum eigenvalue,
/// its mass-orthonormal eigenspace basis, and the infimum of the Rayleigh
/// quotient outside that eigenspace.
///
/// Eigenvalues within [`CLUSTER_RTOL`] `* lambda1` of the minimum form the
/// eigenspace cluster; the next eigenvalue is the gap edge. A gap below
/// [`GAP_FLOOR_RTOL`] `* lambda1` is rejected.
pub fn spectral_oracle(p: &Eigenproblem) -> Result<SpectralMetadata> {
    let n = p.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::ProblemTooLarge {
            dim: n,
            max: ORACLE_MAX_DIM,
        });
    }
    let a = p.energy_form().to_dense();
    let m = p.mass_form().to_dense();
    let (values, vectors) = linalg::generalized_sym_eigen(n, &a, &m)?;
    let lambda1 = values[0];
    if lambda1 <= 0.0 || lambda1.is_nan() {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    let cluster = values
        .iter()
        .take_while(|&&v| v - lambda1 <= CLUSTER_RTOL * lambda1)
        .count();
    if cluster == n {
        return Err(Error::GapUndefined);
    }
    let lambda2 = values[cluster];
    let floor = GAP_FLOOR_RTOL * lambda1;
    if lambda2 - lambda1 < floor {
        return Err(Error::GapTooSmall {
            gap: lambda2 - lambda1,
            floor,
        });
    }

    let mut basis: Vec<Vector> = (0..cluster)
        .map(|j| {
            let coords: Vec<f64> = (0..n).map(|k| vectors[k * n + j]).collect();
            Vector::new(coords)
        })
        .collect::<Result<Vec<_>>>()?;
    mass_orthonormalize(p, &mut basis)?;

    let meta = SpectralMetadata::new(lambda1, lambda2, basis)?;
    // Dense-solver self-check: the residual and Gram invariants must hold
    // against the owning problem before the metadata leaves this function.
    validate_metadata(p, &meta)?;
    Ok(meta)
}

/// Two passes of modified Gram-Schmidt in the mass inner product.
fn mass_orthonormalize(p: &Eigenproblem, basis: &mut [Vector]) -> Result<()> {
    for _ in 0..2 {
        for i in 0..basis.len() {
            let mut v = basis[i].clone();
            for chi in &basis[..i] {
                let coeff = p.mass_inner(&v, chi)?;
                v = v.axpy(-coeff, chi);
            }
            let norm = p.mass_norm(&v)?;
            if norm == 0.0 {
                return Err(Error::ZeroVector);
            }
            basis[i] = v.scale(1.0 / norm);
        }
    }
    Ok(())
}

/// Deterministic mass-normalized starting vector with the prescribed
/// Rayleigh quotient `lambda1 + gap_fraction * (lambda2 - lambda1)`.
///
/// The vector is a two-term combination `cos(theta) chi + sin(theta) z` of
/// the first eigenbasis vector and a seeded random mass-normalized direction
/// in the complement; `theta` comes from the closed-form Rayleigh quotient
/// of the combination, so the target is met by construction and the
/// standing assumption `lambda(u0) < lambda2` is guaranteed rather than
/// sampled for.
pub fn admissible_start(p: &Eigenproblem, gap_fraction: f64, seed: u64) -> Result<Vector> {
    let meta = p.metadata().ok_or(Error::MissingMetadata)?;
    if !(gap_fraction > 0.0 && gap_fraction < 1.0) {
        return Err(Error::GapFractionOutOfRange {
            value: gap_fraction,
        });
    }
    let chi = meta.basis()[0].clone();
    let target = meta.lambda1() + gap_fraction * meta.gap();

    let mut z = None;
    for attempt in 0u64..16 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let raw: Vec<f64> = (0..p.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let candidate = p.complement_project(&Vector::new(raw)?)?;
        let norm = p.mass_norm(&candidate)?;
        if norm > 1e-8 {
            z = Some(candidate.scale(1.0 / norm));
            break;
        }
    }
    let z = z.ok_or(Error::ZeroVector)?;

    let rho = p.rayleigh_quotient(&z)?;
    // lambda(cos t * chi + sin t * z) = lambda1 cos^2 t + rho sin^2 t, and
    // rho >= lambda2 > target keeps sin^2 t inside (0, 1).
    let sin_sq = (target - meta.lambda1()) / (rho - meta.lambda1());
    let s = sqrt(sin_sq);
    let c = sqrt(1.0 - sin_sq);
    let u0 = chi.scale(c).axpy(s, &z);
    p.m_normalize(&u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn diagonal_metadata_is_exact() {
        let p = diagonal_problem(&[1.0, 2.0]).unwrap();
        let meta = p.metadata().unwrap();
        assert_eq!(meta.lambda1(), 1.0);
        assert_eq!(meta.lambda2(), 2.0);
        assert_eq!(meta.multiplicity(), 1);
        assert_eq!(meta.basis()[0].as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn diagonal_repeated_minimum() {
        let p = diagonal_problem(&[1.0, 1.0, 3.0]).unwrap();
        let meta = p.metadata().unwrap();
        assert_eq!(meta.lambda1(), 1.0);
        assert_eq!(meta.lambda2(), 3.0);
        assert_eq!(meta.multiplicity(), 2);
    }

    #[test]
    fn diagonal_rejections() {
        assert_eq!(diagonal_problem(&[2.0]).unwrap_err(), Error::GapUndefined);
        assert_eq!(
            diagonal_problem(&[2.0, 2.0]).unwrap_err(),
            Error::GapUndefined
        );
        assert!(matches!(
            diagonal_problem(&[1.0, -2.0]).unwrap_err(),
            Error::NonPositiveEigenvalue { .. }
        ));
        assert!(diagonal_problem(&[]).is_err());
    }

    #[test]
    fn laplacian_1d_entries_and_minimum() {
        let p = laplacian_1d(3).unwrap();
        let a = p.energy_form();
        assert_eq!(a.entry(0, 0), 32.0);
        assert_eq!(a.entry(1, 0), -16.0);
        // Closed-form minimum of the second-difference spectrum.
        let exact = 16.0 * (2.0 - core::f64::consts::SQRT_2);
        assert_relative_eq!(p.metadata().unwrap().lambda1(), exact, max_relative = 1e-12);
        assert!(laplacian_1d(2).is_err());
    }

    #[test]
    fn laplacian_1d_large_grid_consistency() {
        let p = laplacian_1d(200).unwrap();
        let lambda1 = p.metadata().unwrap().lambda1();
        assert!((lambda1 - PI * PI).abs() / (PI * PI) < 0.005);
    }

    #[test]
    fn laplacian_1d_matches_closed_form_spectrum() {
        for n in [10usize, 50, 100] {
            let p = laplacian_1d(n).unwrap();
            let (values, _) = crate::linalg::generalized_sym_eigen(
                n,
                &p.energy_form().to_dense(),
                &p.mass_form().to_dense(),
            )
            .unwrap();
            let h = 1.0 / (n as f64 + 1.0);
            for (k, &v) in values.iter().enumerate() {
                let s = ((k + 1) as f64 * PI * h / 2.0).sin();
                let exact = 4.0 / (h * h) * s * s;
                assert_relative_eq!(v, exact, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_2d_tensor_spectrum() {
        let p = laplacian_2d(3).unwrap();
        let meta = p.metadata().unwrap();
        let exact = 16.0 * 2.0 * (2.0 - core::f64::consts::SQRT_2);
        assert_relative_eq!(meta.lambda1(), exact, max_relative = 1e-12);
        // Simple minimum; the next level is doubly degenerate by grid
        // symmetry, which the cluster logic must not absorb.
        assert_eq!(meta.multiplicity(), 1);
        let (values, _) = crate::linalg::generalized_sym_eigen(
            9,
            &p.energy_form().to_dense(),
            &p.mass_form().to_dense(),
        )
        .unwrap();
        assert_relative_eq!(values[1], values[2], max_relative = 1e-12);
        assert_relative_eq!(values[1], meta.lambda2(), max_relative = 1e-12);

        let p10 = laplacian_2d(10).unwrap();
        let two_pi_sq = 2.0 * PI * PI;
        let rel = (p10.metadata().unwrap().lambda1() - two_pi_sq).abs() / two_pi_sq;
        assert!(rel < 0.02, "relative deviation {rel}");
        assert!(laplacian_2d(101).is_err());
    }

    #[test]
    fn fem1d_mass_matrix_and_minimum() {
        let p = fem1d_problem(3).unwrap();
        let h: f64 = 0.25;
        let m = p.mass_form();
        assert_relative_eq!(m.entry(0, 0), 4.0 * h / 6.0, epsilon = 1e-15);
        assert_relative_eq!(m.entry(1, 0), h / 6.0, epsilon = 1e-15);

        let p = fem1d_problem(50).unwrap();
        let lambda1 = p.metadata().unwrap().lambda1();
        assert!((lambda1 - PI * PI).abs() / (PI * PI) < 0.001);
    }

    #[test]
    fn oracle_reproduces_exact_diagonal_metadata() {
        let p = diagonal_problem(&[1.0, 2.0, 3.0]).unwrap();
        let meta = spectral_oracle(&p).unwrap();
        assert_relative_eq!(meta.lambda1(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(meta.lambda2(), 2.0, epsilon = 1e-12);
        assert_eq!(meta.multiplicity(), 1);

        let a = SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 6.0)]).unwrap();
        let m = SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 2.0)]).unwrap();
        let meta = spectral_oracle(&Eigenproblem::new(a, m).unwrap()).unwrap();
        assert_relative_eq!(meta.lambda1(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(meta.lambda2(), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn oracle_rejects_vanishing_gap() {
        let a = SymmetricForm::from_coo_symmetric(2, &[(0, 0, 1.0), (1, 1, 1.0 + 5e-7)]).unwrap();
        let m = SymmetricForm::identity(2).unwrap();
        let p = Eigenproblem::new(a, m).unwrap();
        assert!(matches!(
            spectral_oracle(&p).unwrap_err(),
            Error::GapTooSmall { .. }
        ));
    }

    #[test]
    fn oracle_respects_dimension_cap() {
        let p = diagonal_problem(&[1.0, 2.0]).unwrap();
        assert!(spectral_oracle(&p).is_ok());
        // The cap itself is exercised through the constant; building a
        // 2001-dim problem here would dominate the suite runtime.
        assert_eq!(ORACLE_MAX_DIM, 2000);
    }

    #[test]
    fn admissible_start_hits_prescribed_quotient() {
        let p = diagonal_problem(&[1.0, 2.0]).unwrap();
        let u0 = admissible_start(&p, 0.5, 7).unwrap();
        assert_relative_eq!(p.rayleigh_quotient(&u0).unwrap(), 1.5, epsilon = 1e-10);
        assert_relative_eq!(p.mass_norm(&u0).unwrap(), 1.0, epsilon = 1e-14);

        // Small gap fraction drives the quotient toward the minimum.
        let u0 = admissible_start(&p, 1e-6, 7).unwrap();
        assert!(p.rayleigh_quotient(&u0).unwrap() - 1.0 < 2e-6);

        // Strictly below the gap edge for any admissible fraction.
        for seed in 0..20 {
            let u0 = admissible_start(&p, 0.97, seed).unwrap();
            assert!(p.rayleigh_quotient(&u0).unwrap() < 2.0);
        }
    }

    #[test]
    fn admissible_start_is_deterministic() {
        let p = fem1d_problem(10).unwrap();
        let a = admissible_start(&p, 0.3, 99).unwrap();
        let b = admissible_start(&p, 0.3, 99).unwrap();
        assert_eq!(a, b);
        let c = admissible_start(&p, 0.3, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn admissible_start_rejections() {
        let p = diagonal_problem(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            admissible_start(&p, 0.0, 1).unwrap_err(),
            Error::GapFractionOutOfRange { .. }
        ));
        assert!(matches!(
            admissible_start(&p, 1.0, 1).unwrap_err(),
            Error::GapFractionOutOfRange { .. }
        ));
        let bare = Eigenproblem::new(
            SymmetricForm::identity(2).unwrap(),
            SymmetricForm::identity(2).unwrap(),
        )
        .unwrap();
        assert_eq!(
            admissible_start(&bare, 0.5, 1).unwrap_err(),
            Error::MissingMetadata
        );
    }
}
