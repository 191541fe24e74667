//! Approximate inverse iteration for the minimum eigenvalue of a generalized
//! symmetric eigenproblem, together with a per-step verification ledger that
//! checks every certified convergence bound against the realized trajectory.
//!
//! The crate works on the weak form of the problem: a pair of symmetric
//! positive-definite bilinear forms, the energy form `a(u, v)` and the mass
//! form `(u, v)`, realized at desk scale as dense or banded-sparse matrices
//! on `R^n`. One outer step normalizes the iterate in the mass norm, solves
//! (or approximately solves) the correction equation
//! `a(w, x) = a(u, x) - lambda(u) (u, x)`, and continues with the normalized
//! `u - v`, where `v` may deviate from the exact correction `w` by at most
//! `eta * ||w||` in the energy norm.
//!
//! Everything here is `no_std` (with `alloc`): pure computation, no IO. The
//! companion CLI crate carries file formats and batch drivers.
//!
//! Module map:
//! - [`vector`], [`form`], [`problem`]: vectors, SPD forms, the two inner
//!   products, Rayleigh quotient and the spectral projections.
//! - [`generate`]: test problems with exactly known or oracle-computed
//!   spectral data, and admissible starting vectors.
//! - [`correction`]: exact, perturbed, and truncated-CG solutions of the
//!   correction equation with certified relative energy error.
//! - [`iterate`]: the outer loop producing a [`iterate::Trajectory`] of
//!   per-step scalars.
//! - [`bounds`]: closed-form bound evaluators and the trajectory verifier.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod correction;
pub mod error;
pub mod form;
pub mod generate;
pub mod iterate;
mod linalg;
pub mod problem;
pub mod vector;

pub use bounds::{BoundInputs, InequalityId, VerificationReport};
pub use correction::{CorrectionContext, CorrectionResult, PerturbationPolicy, SolverMode};
pub use error::{Error, Result};
pub use form::SymmetricForm;
pub use iterate::{RunConfig, Runner, StepRecord, StopReason, Trajectory};
pub use problem::{Eigenproblem, SpectralMetadata};
pub use vector::Vector;
