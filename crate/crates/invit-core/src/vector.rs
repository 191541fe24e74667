//! Dense real vectors with finite coordinates.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of the space `R^n`, `n >= 1`, with all entries finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (index, &x) in coords.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        Ok(Vector { coords })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Vector::new(vec![0.0; dim])
    }

    /// The `i`-th coordinate unit vector of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::BadShape);
        }
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Vector::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&x| x == 0.0)
    }

    /// Euclidean dot product. The problem-aware inner products live on
    /// [`crate::problem::Eigenproblem`].
    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector {
            coords: self.coords.iter().map(|&x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Vector").field(&self.coords).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(Vector::new(vec![]), Err(Error::EmptyVector));
        assert_eq!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteEntry { index: 1 })
        );
        assert_eq!(
            Vector::new(vec![f64::INFINITY]),
            Err(Error::NonFiniteEntry { index: 0 })
        );
    }

    #[test]
    fn arithmetic() {
        let u = Vector::new(vec![1.0, 2.0]).unwrap();
        let v = Vector::new(vec![3.0, -1.0]).unwrap();
        assert_eq!(u.dot(&v), 1.0);
        assert_eq!(u.add(&v).as_slice(), &[4.0, 1.0]);
        assert_eq!(u.sub(&v).as_slice(), &[-2.0, 3.0]);
        assert_eq!(u.axpy(2.0, &v).as_slice(), &[7.0, 0.0]);
        assert_eq!(u.scale(-1.0).as_slice(), &[-1.0, -2.0]);
    }

    #[test]
    fn basis_vectors() {
        let e1 = Vector::basis(3, 1).unwrap();
        assert_eq!(e1.as_slice(), &[0.0, 1.0, 0.0]);
        assert!(Vector::basis(3, 3).is_err());
        assert!(Vector::zeros(2).unwrap().is_zero());
    }
}
