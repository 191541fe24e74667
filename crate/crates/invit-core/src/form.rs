//! Symmetric positive-definite bilinear forms.
//!
//! A form is a square matrix in either a dense row-major layout or a
//! compressed-sparse-row layout with both triangles stored. Construction
//! enforces exact symmetry of the stored entries and validates positive
//! definiteness by running a symmetric factorization once (dense Cholesky
//! for dense storage, banded Cholesky for sparse storage). Dense storage is
//! the default at desk scale; the sparse layout is what the problem
//! generators emit for banded matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, PartialEq)]
enum Storage {
    /// Row-major `n * n` entries, exactly symmetric as stored.
    Dense(Vec<f64>),
    /// CSR with both triangles present, so `A x` is a plain row sweep.
    Csr {
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

#[derive(Clone, PartialEq)]
pub struct SymmetricForm {
    n: usize,
    storage: Storage,
}

impl SymmetricForm {
    /// Builds a dense form from `n * n` row-major entries. The entries are
    /// symmetrized (both mirror slots receive the same averaged value) and
    /// the result must factor as SPD.
    pub fn from_dense(n: usize, mut entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::BadShape);
        }
        for (index, &x) in entries.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (entries[i * n + j] + entries[j * n + i]);
                entries[i * n + j] = avg;
                entries[j * n + i] = avg;
            }
        }
        linalg::DenseCholesky::factor(n, &entries)?;
        Ok(SymmetricForm {
            n,
            storage: Storage::Dense(entries),
        })
    }

    /// Builds a sparse form from coordinate triples covering one triangle
    /// (or both; each unordered pair may appear once). Mirrored entries are
    /// inserted so the stored matrix is exactly symmetric.
    pub fn from_coo_symmetric(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadShape);
        }
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triples {
            if i >= n || j >= n {
                return Err(Error::BadShape);
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { index: i * n + j });
            }
            if per_row[i].iter().any(|&(c, _)| c == j) {
                return Err(Error::DuplicateEntry { row: i, col: j });
            }
            per_row[i].push((j, v));
            if i != j {
                if per_row[j].iter().any(|&(c, _)| c == i) {
                    return Err(Error::DuplicateEntry { row: j, col: i });
                }
                per_row[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let form = SymmetricForm {
            n,
            storage: Storage::Csr {
                row_ptr,
                col_idx,
                values,
            },
        };
        linalg::BandCholesky::factor_form(&form)?;
        Ok(form)
    }

    /// Sparse identity, handy as a mass form.
    pub fn identity(n: usize) -> Result<Self> {
        let triples: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        SymmetricForm::from_coo_symmetric(n, &triples)
    }

    /// Sparse symmetric tridiagonal form with constant-index layout:
    /// `diag` on the main diagonal, `off` on the first sub/super diagonal.
    pub fn from_tridiagonal(n: usize, diag: &[f64], off: &[f64]) -> Result<Self> {
        if diag.len() != n || off.len() + 1 != n {
            return Err(Error::BadShape);
        }
        let mut triples = Vec::with_capacity(2 * n);
        for (i, &d) in diag.iter().enumerate() {
            triples.push((i, i, d));
        }
        for (i, &e) in off.iter().enumerate() {
            triples.push((i + 1, i, e));
        }
        SymmetricForm::from_coo_symmetric(n, &triples)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr { .. })
    }

    /// `y = A x` on raw slices.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        match &self.storage {
            Storage::Dense(a) => {
                for i in 0..self.n {
                    let row = &a[i * self.n..(i + 1) * self.n];
                    y[i] = crate::vector::dot(row, x);
                }
            }
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for i in 0..self.n {
                    let mut s = 0.0;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        s += values[k] * x[col_idx[k]];
                    }
                    y[i] = s;
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// The bilinear form value `u^T A v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::vector::dot(u, &self.matvec(v))
    }

    /// Densified row-major copy (used by the dense spectral oracle).
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                let mut a = vec![0.0; self.n * self.n];
                for i in 0..self.n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        a[i * self.n + col_idx[k]] = values[k];
                    }
                }
                a
            }
        }
    }

    /// Nonzero entries of the lower triangle as `(row, col, value)` with
    /// `row >= col`, row-major order. This is the on-disk coordinate layout.
    pub fn lower_triangle(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        match &self.storage {
            Storage::Dense(a) => {
                for i in 0..self.n {
                    for j in 0..=i {
                        let v = a[i * self.n + j];
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
            }
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for i in 0..self.n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        let j = col_idx[k];
                        if j <= i && values[k] != 0.0 {
                            out.push((i, j, values[k]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest `|i - j|` over stored entries; 0 for a diagonal matrix.
    pub(crate) fn bandwidth(&self) -> usize {
        match &self.storage {
            Storage::Dense(_) => self.n.saturating_sub(1),
            Storage::Csr {
                row_ptr, col_idx, ..
            } => {
                let mut bw = 0;
                for i in 0..self.n {
                    for &c in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
                        bw = bw.max(i.abs_diff(c));
                    }
                }
                bw
            }
        }
    }

    /// Entry accessor for small-scale checks; O(row nnz) on sparse storage.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(a) => a[i * self.n + j],
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    if col_idx[k] == j {
                        return values[k];
                    }
                }
                0.0
            }
        }
    }
}

impl fmt::Debug for SymmetricForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.storage {
            Storage::Dense(_) => write!(f, "SymmetricForm(dense, n = {})", self.n),
            Storage::Csr { values, .. } => {
                write!(f, "SymmetricForm(csr, n = {}, nnz = {})", self.n, values.len())
            }
        }
    }
}
