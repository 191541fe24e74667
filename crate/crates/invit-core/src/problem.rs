//! Generalized symmetric eigenproblems: a pair of SPD forms, the two inner
//! products and norms they induce, the Rayleigh quotient, and the spectral
//! projections onto the minimum eigenspace and its complement.

use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::error::{Error, Result};
use crate::form::SymmetricForm;
use crate::vector::{dot, Vector};

/// Relative residual bound every stored eigenbasis vector must satisfy
/// against its owning problem: `||A x - lambda1 M x|| <= RESIDUAL_RTOL ||A x||`.
pub const RESIDUAL_RTOL: f64 = 1e-10;

/// Entrywise deviation allowed on the Gram matrix of the stored eigenbasis.
pub const GRAM_TOL: f64 = 1e-12;

/// Minimum eigenvalue, the infimum of the Rayleigh quotient on the
/// complement of its eigenspace, and a mass-orthonormal basis of that
/// eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMetadata {
    lambda1: f64,
    lambda2: f64,
    basis: Vec<Vector>,
}

impl SpectralMetadata {
    /// Builds metadata after checking `0 < lambda1 < lambda2` and a nonempty
    /// basis. Residual and orthonormality are validated against a problem
    /// when the metadata is attached.
    pub fn new(lambda1: f64, lambda2: f64, basis: Vec<Vector>) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > lambda1)
            || !lambda1.is_finite()
            || !lambda2.is_finite()
        {
            return Err(Error::BadSpectralBounds { lambda1, lambda2 });
        }
        if basis.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(SpectralMetadata {
            lambda1,
            lambda2,
            basis,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn gap(&self) -> f64 {
        self.lambda2 - self.lambda1
    }

    pub fn multiplicity(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }
}

/// The weak eigenvalue problem `a(u, x) = lambda (u, x)` for an SPD pair
/// `(A, M)`, optionally decorated with spectral metadata.
#[derive(Debug, Clone)]
pub struct Eigenproblem {
    a: SymmetricForm,
    m: SymmetricForm,
    dim: usize,
    metadata: Option<SpectralMetadata>,
}

impl Eigenproblem {
    pub fn new(a: SymmetricForm, m: SymmetricForm) -> Result<Self> {
        if a.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: m.dim(),
            });
        }
        let dim = a.dim();
        Ok(Eigenproblem {
            a,
            m,
            dim,
            metadata: None,
        })
    }

    /// Attaches metadata after validating it against this problem:
    /// dimensions, eigen residuals, and mass-orthonormality of the basis.
    pub fn with_metadata(mut self, metadata: SpectralMetadata) -> Result<Self> {
        validate_metadata(&self, &metadata)?;
        self.metadata = Some(metadata);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energy_form(&self) -> &SymmetricForm {
        &self.a
    }

    pub fn mass_form(&self) -> &SymmetricForm {
        &self.m
    }

    pub fn metadata(&self) -> Option<&SpectralMetadata> {
        self.metadata.as_ref()
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        Ok(())
    }

    /// The energy form value `a(u, v) = u^T A v`.
    pub fn energy_inner(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(self.a.inner(u.as_slice(), v.as_slice()))
    }

    /// The mass form value `(u, v) = u^T M v`.
    pub fn mass_inner(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(self.m.inner(u.as_slice(), v.as_slice()))
    }

    /// Energy norm `||u|| = sqrt(a(u, u))`.
    pub fn energy_norm(&self, u: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        Ok(sqrt(self.a.inner(u.as_slice(), u.as_slice()).max(0.0)))
    }

    /// Mass norm `||u||_0 = sqrt((u, u))`, the weaker of the two norms.
    pub fn mass_norm(&self, u: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        Ok(sqrt(self.m.inner(u.as_slice(), u.as_slice()).max(0.0)))
    }

    /// Rayleigh quotient `lambda(u) = a(u, u) / (u, u)`, scale invariant.
    pub fn rayleigh_quotient(&self, u: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        if u.is_zero() {
            return Err(Error::ZeroVector);
        }
        let num = self.a.inner(u.as_slice(), u.as_slice());
        let den = self.m.inner(u.as_slice(), u.as_slice());
        Ok(num / den)
    }

    /// `u / ||u||_0`: same direction, unit mass norm.
    pub fn m_normalize(&self, u: &Vector) -> Result<Vector> {
        self.check_dim(u)?;
        let norm = self.mass_norm(u)?;
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(u.scale(1.0 / norm))
    }

    /// Projection onto the minimum eigenspace, expanded over the stored
    /// mass-orthonormal basis. Orthogonal in both inner products.
    pub fn project_e1(&self, u: &Vector) -> Result<Vector> {
        self.check_dim(u)?;
        let meta = self.metadata.as_ref().ok_or(Error::MissingMetadata)?;
        let mut acc = Vector::zeros(self.dim).expect("dim >= 1");
        for chi in meta.basis() {
            let coeff = self.m.inner(u.as_slice(), chi.as_slice());
            acc = acc.axpy(coeff, chi);
        }
        Ok(acc)
    }

    /// `Q u = u - P1 u`, the component in the orthogonal complement of the
    /// minimum eigenspace.
    pub fn complement_project(&self, u: &Vector) -> Result<Vector> {
        let p1 = self.project_e1(u)?;
        Ok(u.sub(&p1))
    }
}

/// Checks a metadata block against the problem that is about to own it.
pub(crate) fn validate_metadata(p: &Eigenproblem, meta: &SpectralMetadata) -> Result<()> {
    let n = p.dim();
    for chi in meta.basis() {
        if chi.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: chi.dim(),
            });
        }
    }
    // Eigen residual per basis vector, relative to ||A chi||.
    for (index, chi) in meta.basis().iter().enumerate() {
        let a_chi = p.a.matvec(chi.as_slice());
        let m_chi = p.m.matvec(chi.as_slice());
        let mut res_sq = 0.0;
        let mut a_sq = 0.0;
        for k in 0..n {
            let r = a_chi[k] - meta.lambda1() * m_chi[k];
            res_sq += r * r;
            a_sq += a_chi[k] * a_chi[k];
        }
        let relative = if a_sq > 0.0 {
            sqrt(res_sq / a_sq)
        } else {
            f64::INFINITY
        };
        if relative > RESIDUAL_RTOL {
            return Err(Error::MetadataResidual { index, relative });
        }
    }
    // Mass-orthonormality of the basis, entrywise on its Gram matrix.
    let mut max_dev = 0.0_f64;
    for (i, chi_i) in meta.basis().iter().enumerate() {
        let m_chi = p.m.matvec(chi_i.as_slice());
        for (j, chi_j) in meta.basis().iter().enumerate() {
            let g = dot(&m_chi, chi_j.as_slice());
            let want = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max(fabs(g - want));
        }
    }
    if max_dev > GRAM_TOL {
        return Err(Error::MetadataGram { max_deviation: max_dev });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn diag_problem(avals: &[f64]) -> Eigenproblem {
        let n = avals.len();
        let a = SymmetricForm::from_coo_symmetric(
            n,
            &avals
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, i, v))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let m = SymmetricForm::identity(n).unwrap();
        Eigenproblem::new(a, m).unwrap()
    }

    fn vec2(x: f64, y: f64) -> Vector {
        Vector::new(vec![x, y]).unwrap()
    }

    #[test]
    fn inner_products_on_diagonal_forms() {
        let p = diag_problem(&[1.0, 2.0]);
        assert_eq!(p.energy_inner(&vec2(1.0, 0.0), &vec2(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(p.energy_inner(&vec2(1.0, 1.0), &vec2(1.0, 1.0)).unwrap(), 3.0);
        assert_eq!(p.mass_inner(&vec2(3.0, 4.0), &vec2(3.0, 4.0)).unwrap(), 25.0);
        let m2 = Eigenproblem::new(
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 2.0)]).unwrap(),
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 2.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(m2.mass_inner(&vec2(1.0, 0.0), &vec2(1.0, 0.0)).unwrap(), 2.0);
    }

    #[test]
    fn norms() {
        let p = diag_problem(&[1.0, 2.0]);
        assert_eq!(p.mass_norm(&vec2(3.0, 4.0)).unwrap(), 5.0);
        let zero = Vector::zeros(2).unwrap();
        assert_eq!(p.mass_norm(&zero).unwrap(), 0.0);
        assert_eq!(p.energy_norm(&zero).unwrap(), 0.0);
        assert_relative_eq!(
            p.energy_norm(&vec2(1.0, 1.0)).unwrap(),
            3.0_f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rayleigh_quotient_examples() {
        let p = diag_problem(&[1.0, 2.0]);
        assert_eq!(p.rayleigh_quotient(&vec2(1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(p.rayleigh_quotient(&vec2(1.0, 1.0)).unwrap(), 1.5);
        assert_eq!(p.rayleigh_quotient(&Vector::zeros(2).unwrap()), Err(Error::ZeroVector));
        // Scale invariance.
        assert_eq!(
            p.rayleigh_quotient(&vec2(-3.5, -3.5)).unwrap(),
            p.rayleigh_quotient(&vec2(1.0, 1.0)).unwrap()
        );
        // Genuinely generalized pair.
        let g = Eigenproblem::new(
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 6.0)]).unwrap(),
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 2.0), (1, 1, 2.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(g.rayleigh_quotient(&vec2(0.0, 1.0)).unwrap(), 3.0);
    }

    #[test]
    fn m_normalize_examples() {
        let p = diag_problem(&[1.0, 2.0]);
        let u = p.m_normalize(&vec2(3.0, 4.0)).unwrap();
        assert_relative_eq!(u.as_slice()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(u.as_slice()[1], 0.8, epsilon = 1e-15);
        // Idempotence on an already-normalized vector.
        let again = p.m_normalize(&u).unwrap();
        for (a, b) in again.as_slice().iter().zip(u.as_slice()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        // Direction preserved, no sign flip.
        let v = p.m_normalize(&vec2(-3.0, -4.0)).unwrap();
        assert!(v.as_slice()[0] < 0.0);
        let scaled = Eigenproblem::new(
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 4.0), (1, 1, 4.0)]).unwrap(),
            SymmetricForm::from_coo_symmetric(2, &[(0, 0, 4.0), (1, 1, 4.0)]).unwrap(),
        )
        .unwrap();
        let w = scaled.m_normalize(&vec2(1.0, 0.0)).unwrap();
        assert_relative_eq!(w.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_eq!(w.as_slice()[1], 0.0);
        assert_eq!(p.m_normalize(&Vector::zeros(2).unwrap()), Err(Error::ZeroVector));
    }

    fn with_exact_metadata() -> Eigenproblem {
        let p = diag_problem(&[1.0, 2.0]);
        let meta = SpectralMetadata::new(1.0, 2.0, vec![Vector::basis(2, 0).unwrap()]).unwrap();
        p.with_metadata(meta).unwrap()
    }

    #[test]
    fn projections() {
        let p = with_exact_metadata();
        let u = vec2(0.6, 0.8);
        let pu = p.project_e1(&u).unwrap();
        assert_relative_eq!(pu.as_slice()[0], 0.6, epsilon = 1e-15);
        assert_eq!(pu.as_slice()[1], 0.0);
        // Inside the eigenspace the projection is the identity.
        let chi = vec2(1.0, 0.0);
        assert_eq!(p.project_e1(&chi).unwrap(), chi);
        // Orthogonal input maps to zero.
        let z = vec2(0.0, 1.0);
        assert!(p.project_e1(&z).unwrap().is_zero());
        // Partition of identity, exactly the same arithmetic.
        let q = p.complement_project(&u).unwrap();
        assert_eq!(pu.add(&q), u);
        // Complement of an eigenvector vanishes; orthogonal input survives.
        assert!(p.complement_project(&chi).unwrap().is_zero());
        assert_eq!(p.complement_project(&z).unwrap(), z);
        // Idempotence.
        let ppu = p.project_e1(&pu).unwrap();
        for (a, b) in ppu.as_slice().iter().zip(pu.as_slice()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_requires_metadata() {
        let p = diag_problem(&[1.0, 2.0]);
        assert_eq!(
            p.project_e1(&vec2(1.0, 0.0)).unwrap_err(),
            Error::MissingMetadata
        );
    }

    #[test]
    fn metadata_validation_rejects_bad_blocks() {
        let p = diag_problem(&[1.0, 2.0]);
        // Wrong eigenvalue: the residual check fires.
        let meta = SpectralMetadata::new(1.5, 2.0, vec![Vector::basis(2, 0).unwrap()]).unwrap();
        assert!(matches!(
            p.clone().with_metadata(meta).unwrap_err(),
            Error::MetadataResidual { .. }
        ));
        // Non-normalized basis: the Gram check fires.
        let meta = SpectralMetadata::new(
            1.0,
            2.0,
            vec![Vector::new(vec![2.0, 0.0]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            p.with_metadata(meta).unwrap_err(),
            Error::MetadataResidual { .. } | Error::MetadataGram { .. }
        ));
        assert!(SpectralMetadata::new(2.0, 1.0, vec![vec2(1.0, 0.0)]).is_err());
        assert!(SpectralMetadata::new(-1.0, 1.0, vec![vec2(1.0, 0.0)]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = diag_problem(&[1.0, 2.0]);
        let u3 = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            p.energy_inner(&u3, &u3).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
