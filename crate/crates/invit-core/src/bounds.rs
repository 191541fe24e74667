//! Closed-form evaluators for the certified convergence bounds and the
//! per-step verifier that checks a trajectory against every one of them.
//!
//! Each inequality carries a short ledger id (`T3.1`, `L3.2`, ...) used in
//! reports and serialized artifacts. Every check applies the same
//! floating-point slack: `lhs <= rhs * (1 + REL_SLACK) + ABS_SLACK`. The
//! slack absorbs double-precision roundoff in the recorded norms without
//! masking genuine violations; with a correct implementation a violation is
//! impossible, so a failing entry points at a bug or a broken precondition,
//! which is exactly what the ledger exists to catch.

use alloc::vec::Vec;
use libm::{fabs, pow, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterate::{StepRecord, Trajectory};
use crate::problem::SpectralMetadata;

/// Multiplicative slack on every ledger inequality.
pub const REL_SLACK: f64 = 1e-9;

/// Additive slack on every ledger inequality.
pub const ABS_SLACK: f64 = 1e-12;

/// Tolerance floor beyond which the update-norm bound is reported as
/// infinite instead of overflowing toward it.
const ETA_POLE_GUARD: f64 = 1e-12;

/// The scalar inputs every bound depends on: the two spectral constants and
/// the accuracy parameter of the inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    lambda1: f64,
    lambda2: f64,
    eta: f64,
}

impl BoundInputs {
    pub fn new(lambda1: f64, lambda2: f64, eta: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > lambda1)
            || !lambda1.is_finite()
            || !lambda2.is_finite()
        {
            return Err(Error::BadSpectralBounds { lambda1, lambda2 });
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::EtaOutOfRange { value: eta });
        }
        Ok(BoundInputs {
            lambda1,
            lambda2,
            eta,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        if !(self.lambda1..=self.lambda2).contains(&lambda) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                lo: self.lambda1,
                hi: self.lambda2,
            });
        }
        Ok(())
    }

    /// The fraction subtracted from one in the contraction factor.
    /// Kept separate so differencing it stays free of the cancellation
    /// against the leading one when the factor sits close to it.
    fn contraction_fraction(&self, lambda: f64) -> f64 {
        let one = 1.0 - self.eta * self.eta;
        let gap = self.lambda2 - lambda;
        let num = one * lambda * gap * gap;
        let den = self.lambda2 * self.lambda2 * lambda + one * gap * gap * (lambda - self.lambda1);
        num / den
    }

    /// Per-step contraction factor of the distance to the minimum
    /// eigenvalue, a strictly increasing function of `lambda` on
    /// `[lambda1, lambda2]` with `q(lambda2) = 1`.
    pub fn q_factor(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(1.0 - self.contraction_fraction(lambda))
    }

    /// Closed-form derivative of the contraction factor, positive on the
    /// open interval.
    pub fn q_derivative(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        let one = 1.0 - self.eta * self.eta;
        let gap = self.lambda2 - lambda;
        let l2sq = self.lambda2 * self.lambda2;
        let num = one * gap * (one * self.lambda1 * gap * gap * gap + 2.0 * l2sq * lambda * lambda);
        let den = l2sq * lambda + one * gap * gap * (lambda - self.lambda1);
        Ok(num / (den * den))
    }

    /// Limit of the contraction factors at the fully converged end:
    /// `1 - (1 - eta^2) ((lambda2 - lambda1) / lambda2)^2`.
    pub fn q_limit(&self) -> f64 {
        let ratio = (self.lambda2 - self.lambda1) / self.lambda2;
        1.0 - (1.0 - self.eta * self.eta) * ratio * ratio
    }

    /// The sharp matrix-case limit rate
    /// `(1 - (1 - eta)(lambda2 - lambda1)/lambda2)^2`. Reporting
    /// comparator only: the certified factor [`Self::q_limit`] is never
    /// below it, and trajectories are never checked against it.
    pub fn kn_optimal_rate(&self) -> f64 {
        let r = 1.0 - (1.0 - self.eta) * (self.lambda2 - self.lambda1) / self.lambda2;
        r * r
    }

    /// Certified lower bound for the squared energy norm of the exact
    /// correction: `((lambda2 - lambda)/lambda2)^2 (lambda - lambda1)`.
    /// Ledger id `L3.1`.
    pub fn correction_norm_lower_bound(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= self.lambda1 && lambda < self.lambda2) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                lo: self.lambda1,
                hi: self.lambda2,
            });
        }
        let r = (self.lambda2 - lambda) / self.lambda2;
        Ok(r * r * (lambda - self.lambda1))
    }

    /// Certified lower bound for the Rayleigh-quotient decrease
    /// `lambda - lambda'` given the squared correction norm. Ledger id
    /// `L3.2`. Monotone increasing in `w_norm_sq`.
    pub fn rayleigh_decrease_lower_bound(&self, lambda: f64, w_norm_sq: f64) -> Result<f64> {
        if w_norm_sq < 0.0 {
            return Err(Error::NegativeNormSq { value: w_norm_sq });
        }
        let one = 1.0 - self.eta * self.eta;
        Ok(lambda * one * w_norm_sq / (lambda + one * w_norm_sq))
    }

    /// Certified upper bound for the squared energy norm of the inexact
    /// update: `((1 + eta)/(1 - eta)) (lambda2/lambda1) (lambda - lambda1)`.
    /// Ledger id `L3.3`. Diverges at the eta pole; reported as infinite
    /// just below it.
    pub fn update_norm_upper_bound(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        if self.eta > 1.0 - ETA_POLE_GUARD {
            return Ok(f64::INFINITY);
        }
        let amplification = (1.0 + self.eta) / (1.0 - self.eta);
        Ok(amplification * (self.lambda2 / self.lambda1) * (lambda - self.lambda1))
    }

    /// The explicit constant in the squared iterate-distance bound
    /// `||u - u'||^2 <= c (lambda - lambda1)`, valid once
    /// `||v||^2 <= lambda1 / 4`:
    /// `c = 4 (1 + sqrt(lambda2/lambda1))^2 ((1+eta)/(1-eta)) (lambda2/lambda1)`.
    ///
    /// Assembled from the two displayed steps of the proof chain: the
    /// triangle estimate `||u - u'|| <= 2 (1 + sqrt(lambda2/lambda1)) ||v||`
    /// combined with the update-norm bound. Ledger id `L3.4`.
    pub fn iterate_distance_constant(&self) -> f64 {
        let ratio = self.lambda2 / self.lambda1;
        let tri = 1.0 + sqrt(ratio);
        4.0 * tri * tri * ((1.0 + self.eta) / (1.0 - self.eta)) * ratio
    }

    /// Certified upper bound for the squared energy distance to the minimum
    /// eigenspace: `(lambda2/(lambda2 - lambda1)) (lambda - lambda1)`.
    /// Ledger id `T3.2`.
    pub fn eigenspace_distance_upper_bound(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= self.lambda1 && lambda < self.lambda2) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                lo: self.lambda1,
                hi: self.lambda2,
            });
        }
        Ok(self.lambda2 / (self.lambda2 - self.lambda1) * (lambda - self.lambda1))
    }

    /// Samples `q` on an equispaced grid of `[lambda1, lambda2]` and
    /// cross-checks the closed-form derivative against central finite
    /// differences. True iff `q` is strictly increasing across the samples,
    /// the derivative is positive at interior samples, and analytic and
    /// differenced derivatives agree to 1e-6 relative.
    pub fn q_monotonicity_check(&self, n_samples: usize) -> bool {
        if n_samples < 2 {
            return false;
        }
        let span = self.lambda2 - self.lambda1;
        let delta = span / (n_samples - 1) as f64;
        let fd_h = span * 1e-5;
        let mut prev = None;
        for i in 0..n_samples {
            let lambda = if i + 1 == n_samples {
                self.lambda2
            } else {
                self.lambda1 + i as f64 * delta
            };
            let q = match self.q_factor(lambda) {
                Ok(q) => q,
                Err(_) => return false,
            };
            if let Some(p) = prev {
                if q <= p {
                    return false;
                }
            }
            prev = Some(q);
            let interior = i > 0 && i + 1 < n_samples;
            if interior {
                let analytic = match self.q_derivative(lambda) {
                    Ok(d) => d,
                    Err(_) => return false,
                };
                if analytic <= 0.0 || analytic.is_nan() {
                    return false;
                }
                if lambda - fd_h > self.lambda1 && lambda + fd_h < self.lambda2 {
                    // Central difference of q through its fraction part;
                    // identical in exact arithmetic, but it does not lose
                    // the signal against the leading one when q is near it.
                    let hi = self.contraction_fraction(lambda + fd_h);
                    let lo = self.contraction_fraction(lambda - fd_h);
                    let fd = -(hi - lo) / (2.0 * fd_h);
                    if fabs(fd - analytic) > 1e-6 * fabs(analytic) {
                        return false;
                    }
                }
            }
        }
        // The factor closes the interval at exactly one.
        self.q_factor(self.lambda2).map(|q| q == 1.0).unwrap_or(false)
    }
}

/// Ledger ids of the certified inequalities, in the order they are checked
/// within each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityId {
    #[serde(rename = "T3.1")]
    T31,
    #[serde(rename = "L3.1")]
    L31,
    #[serde(rename = "L3.2")]
    L32,
    #[serde(rename = "L3.3")]
    L33,
    #[serde(rename = "L3.4")]
    L34,
    #[serde(rename = "T3.2")]
    T32,
    #[serde(rename = "E2.5")]
    E25,
    #[serde(rename = "E2.7")]
    E27,
    #[serde(rename = "E3.8")]
    E38,
}

impl InequalityId {
    pub const ALL: [InequalityId; 9] = [
        InequalityId::T31,
        InequalityId::L31,
        InequalityId::L32,
        InequalityId::L33,
        InequalityId::L34,
        InequalityId::T32,
        InequalityId::E25,
        InequalityId::E27,
        InequalityId::E38,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::T31 => "T3.1",
            InequalityId::L31 => "L3.1",
            InequalityId::L32 => "L3.2",
            InequalityId::L33 => "L3.3",
            InequalityId::L34 => "L3.4",
            InequalityId::T32 => "T3.2",
            InequalityId::E25 => "E2.5",
            InequalityId::E27 => "E2.7",
            InequalityId::E38 => "E3.8",
        }
    }
}

impl core::fmt::Display for InequalityId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One inequality evaluated at one step, stored in `lhs <= rhs`
/// orientation. Inapplicable entries (hypothesis not met, data not
/// recorded) count as vacuous passes and carry no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: InequalityId,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub margin: Option<f64>,
    pub applicable: bool,
    pub pass: bool,
}

impl CheckEntry {
    fn evaluated(id: InequalityId, lhs: f64, rhs: f64) -> CheckEntry {
        let pass = lhs <= rhs * (1.0 + REL_SLACK) + ABS_SLACK;
        CheckEntry {
            id,
            lhs: Some(lhs),
            rhs: Some(rhs),
            margin: Some(rhs - lhs),
            applicable: true,
            pass,
        }
    }

    fn vacuous(id: InequalityId) -> CheckEntry {
        CheckEntry {
            id,
            lhs: None,
            rhs: None,
            margin: None,
            applicable: false,
            pass: true,
        }
    }

    /// An applicable check whose bound could not even be evaluated (the
    /// recorded data sits outside the bound's domain).
    fn unevaluable(id: InequalityId) -> CheckEntry {
        CheckEntry {
            id,
            lhs: None,
            rhs: None,
            margin: None,
            applicable: true,
            pass: false,
        }
    }
}

/// All checks for one recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepChecks {
    pub k: usize,
    pub checks: Vec<CheckEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub id: InequalityId,
}

/// Outcome of certifying a trajectory: one entry per inequality per step,
/// plus the run-level verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub steps: Vec<StepChecks>,
    pub all_pass: bool,
    pub first_failure: Option<Failure>,
    /// Smallest observed margin of the per-step contraction check;
    /// tightness telemetry, never asserted against.
    pub min_margin_t31: Option<f64>,
}

impl VerificationReport {
    pub fn empty() -> Self {
        VerificationReport {
            steps: Vec::new(),
            all_pass: true,
            first_failure: None,
            min_margin_t31: None,
        }
    }
}

/// Certifies a slice of step records against the bound set for the given
/// spectral constants. `eta_run` is the run-level accuracy budget and only
/// feeds the geometric envelope; the per-step checks use the certificate
/// `eta_used` each record actually carries.
pub fn verify_records(
    records: &[StepRecord],
    lambda1: f64,
    lambda2: f64,
    eta_run: f64,
) -> Result<VerificationReport> {
    let run_inputs = BoundInputs::new(lambda1, lambda2, eta_run)?;
    if records.is_empty() {
        return Ok(VerificationReport::empty());
    }
    let lambda0 = records[0].lambda.clamp(lambda1, lambda2);
    let q0 = run_inputs.q_factor(lambda0)?;
    let gap0 = records[0].lambda - lambda1;

    let mut steps = Vec::with_capacity(records.len());
    let mut all_pass = true;
    let mut first_failure = None;
    let mut min_margin_t31: Option<f64> = None;

    for (pos, rec) in records.iter().enumerate() {
        let b = BoundInputs::new(lambda1, lambda2, rec.eta_used)?;
        // Rounding can leave lambda a few ulps under lambda1; the bound
        // evaluators see the clamped value, the linear gap terms the raw one.
        let lambda_eval = rec.lambda.max(lambda1);
        let gap = rec.lambda - lambda1;
        let gap_next = rec.lambda_next - lambda1;
        let w_sq = rec.w_norm * rec.w_norm;
        let v_sq = rec.v_norm * rec.v_norm;

        let mut checks = Vec::with_capacity(InequalityId::ALL.len());

        // (a) contraction of the distance to the minimum eigenvalue
        checks.push(match b.q_factor(lambda_eval) {
            Ok(q) => CheckEntry::evaluated(InequalityId::T31, gap_next, q * gap),
            Err(_) => CheckEntry::unevaluable(InequalityId::T31),
        });
        // (b) lower bound on the exact correction norm
        checks.push(match b.correction_norm_lower_bound(lambda_eval.min(lambda2)) {
            Ok(bound) => CheckEntry::evaluated(InequalityId::L31, bound, w_sq),
            Err(_) => CheckEntry::unevaluable(InequalityId::L31),
        });
        // (c) lower bound on the Rayleigh-quotient decrease
        checks.push(match b.rayleigh_decrease_lower_bound(lambda_eval, w_sq) {
            Ok(bound) => {
                CheckEntry::evaluated(InequalityId::L32, bound, rec.lambda - rec.lambda_next)
            }
            Err(_) => CheckEntry::unevaluable(InequalityId::L32),
        });
        // (d) upper bound on the inexact update norm
        checks.push(match b.update_norm_upper_bound(lambda_eval) {
            Ok(bound) => CheckEntry::evaluated(InequalityId::L33, v_sq, bound),
            Err(_) => CheckEntry::unevaluable(InequalityId::L33),
        });
        // (e) iterate distance, applicable once the update is small
        checks.push(if v_sq <= lambda1 / 4.0 {
            let c = b.iterate_distance_constant();
            CheckEntry::evaluated(InequalityId::L34, rec.u_diff_norm * rec.u_diff_norm, c * gap)
        } else {
            CheckEntry::vacuous(InequalityId::L34)
        });
        // (f) distance to the eigenspace, needs the recorded projection
        checks.push(match rec.subspace_dist {
            Some(dist) => match b.eigenspace_distance_upper_bound(lambda_eval.min(lambda2)) {
                Ok(bound) => CheckEntry::evaluated(InequalityId::T32, dist * dist, bound),
                Err(_) => CheckEntry::unevaluable(InequalityId::T32),
            },
            None => CheckEntry::vacuous(InequalityId::T32),
        });
        // (g) energy-orthogonality split, exact solves only
        checks.push(if rec.eta_used == 0.0 {
            let split = fabs(
                rec.u_minus_w_norm * rec.u_minus_w_norm - (rec.lambda + w_sq),
            );
            CheckEntry::evaluated(InequalityId::E25, split, 1e-10 * rec.lambda)
        } else {
            CheckEntry::vacuous(InequalityId::E25)
        });
        // (h) the inexact step cannot collapse the update
        checks.push(CheckEntry::evaluated(
            InequalityId::E27,
            (1.0 - rec.eta_used) * rec.u_minus_w_norm,
            rec.u_minus_v_norm,
        ));
        // (i) geometric envelope from the starting quotient
        checks.push(CheckEntry::evaluated(
            InequalityId::E38,
            gap_next,
            pow(q0, (pos + 1) as f64) * gap0,
        ));

        for entry in &checks {
            if entry.id == InequalityId::T31 && entry.applicable {
                if let Some(m) = entry.margin {
                    min_margin_t31 = Some(match min_margin_t31 {
                        Some(cur) if cur <= m => cur,
                        _ => m,
                    });
                }
            }
            if entry.applicable && !entry.pass {
                all_pass = false;
                if first_failure.is_none() {
                    first_failure = Some(Failure {
                        step: rec.k,
                        id: entry.id,
                    });
                }
            }
        }
        steps.push(StepChecks { k: rec.k, checks });
    }

    Ok(VerificationReport {
        steps,
        all_pass,
        first_failure,
        min_margin_t31,
    })
}

/// Certifies a trajectory against the bound set for its problem's spectral
/// metadata.
pub fn verify_trajectory(
    t: &Trajectory,
    meta: &SpectralMetadata,
    eta_run: f64,
) -> Result<VerificationReport> {
    verify_records(&t.records, meta.lambda1(), meta.lambda2(), eta_run)
}
