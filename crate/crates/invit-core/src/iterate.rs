//! The outer iteration: normalize, solve the correction equation to the
//! configured accuracy, step to the normalized `u - v`, record, stop.

use alloc::vec::Vec;
use libm::fabs;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundInputs;
use crate::correction::{CorrectionContext, CorrectionResult, PerturbationPolicy, SolverMode};
use crate::error::{Error, Result};
use crate::problem::{Eigenproblem, SpectralMetadata};
use crate::vector::Vector;

/// Relative slack on the per-step monotone decrease of the Rayleigh
/// quotient. Near convergence the decrease can sit at rounding level; the
/// check is clamped by this slack instead of altering the iterate.
pub const MONOTONICITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Accuracy budget of the inner solve, `0 <= eta < 1`.
    pub eta: f64,
    pub solver_mode: SolverMode,
    #[serde(default)]
    pub policy: PerturbationPolicy,
    pub max_steps: usize,
    /// Stop once `lambda_k - lambda1 <= stop_tol` (metadata available) or
    /// once the per-step decrement falls below it (no metadata).
    pub stop_tol: f64,
    #[serde(default = "default_true")]
    pub record_subspace_distance: bool,
    /// Iteration cap for the truncated-CG solver; 0 means the problem
    /// dimension plus a safety margin.
    #[serde(default)]
    pub cg_max_iter: usize,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::EtaOutOfRange { value: self.eta });
        }
        if self.max_steps < 1 {
            return Err(Error::BadConfig("max_steps must be at least 1"));
        }
        if self.stop_tol <= 0.0 || self.stop_tol.is_nan() {
            return Err(Error::BadConfig("stop_tol must be positive"));
        }
        self.policy.validate()
    }

    fn cg_budget(&self, dim: usize) -> usize {
        if self.cg_max_iter == 0 {
            2 * dim + 8
        } else {
            self.cg_max_iter
        }
    }
}

/// Every scalar produced by one iteration step. Energy norms unless the
/// name says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// Rayleigh quotient of the incoming iterate.
    pub lambda: f64,
    /// Rayleigh quotient of the outgoing iterate.
    pub lambda_next: f64,
    pub w_norm: f64,
    pub v_norm: f64,
    pub v_norm_mass: f64,
    pub u_minus_w_norm: f64,
    pub u_minus_v_norm: f64,
    /// `||u_k - u_{k+1}||` after renormalization.
    pub u_diff_norm: f64,
    /// `||u_k - P1 u_k||`, recorded when requested and metadata is present.
    pub subspace_dist: Option<f64>,
    /// The accuracy certificate this step's `v` actually carries.
    pub eta_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    /// Distance to the known minimum eigenvalue fell below the tolerance.
    GapToLambda1,
    /// Per-step decrement fell below the tolerance (no metadata runs).
    Decrement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    TolReached { criterion: StopCriterion },
    EigenvectorFixedPoint,
    MaxSteps,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// Final iterate, mass-normalized.
    pub final_u: Vector,
    pub stop_reason: StopReason,
    pub config: RunConfig,
}

impl Trajectory {
    pub fn final_lambda(&self) -> Option<f64> {
        self.records.last().map(|r| r.lambda_next)
    }
}

/// Outcome of a single step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: Vector,
    pub record: StepRecord,
    /// The incoming iterate was already an eigenvector; `next` is the
    /// unchanged input.
    pub fixed_point: bool,
}

/// Per-run state: the problem and the factorization shared by all steps.
pub struct Runner<'a> {
    problem: &'a Eigenproblem,
    correction: CorrectionContext<'a>,
}

impl<'a> Runner<'a> {
    pub fn new(problem: &'a Eigenproblem) -> Result<Self> {
        Ok(Runner {
            problem,
            correction: CorrectionContext::new(problem)?,
        })
    }

    pub fn problem(&self) -> &Eigenproblem {
        self.problem
    }

    pub fn correction(&self) -> &CorrectionContext<'a> {
        &self.correction
    }

    /// One iteration step on a mass-normalized iterate.
    pub fn step(&self, u: &Vector, k: usize, cfg: &RunConfig) -> Result<StepOutcome> {
        cfg.validate()?;
        let p = self.problem;
        let lambda = p.rayleigh_quotient(u)?;

        let subspace_dist = match (cfg.record_subspace_distance, p.metadata()) {
            (true, Some(_)) => Some(p.energy_norm(&p.complement_project(u)?)?),
            _ => None,
        };

        // The exact correction decides between a fixed point and a real
        // step; the configured solver reuses it as its reference.
        let exact = self.correction.exact(u)?;
        let w = exact.w_ref.clone().expect("exact solve carries w_ref");
        if self.correction.is_fixed_point(u, &w)? {
            let w_norm = p.energy_norm(&w)?;
            let u_norm = p.energy_norm(u)?;
            let record = StepRecord {
                k,
                lambda,
                lambda_next: lambda,
                w_norm,
                v_norm: 0.0,
                v_norm_mass: 0.0,
                u_minus_w_norm: u_norm,
                u_minus_v_norm: u_norm,
                u_diff_norm: 0.0,
                subspace_dist,
                eta_used: 0.0,
            };
            return Ok(StepOutcome {
                next: u.clone(),
                record,
                fixed_point: true,
            });
        }

        let result: CorrectionResult = match cfg.solver_mode {
            SolverMode::Exact => exact,
            SolverMode::Perturbed => {
                self.correction.perturb_from(u, w.clone(), cfg.eta, &cfg.policy)?
            }
            SolverMode::TruncatedCg => {
                self.correction
                    .cg_from(u, w.clone(), cfg.eta, cfg.cg_budget(p.dim()))?
            }
        };

        let v = &result.v;
        let u_minus_v = u.sub(v);
        let next = p.m_normalize(&u_minus_v)?;
        let lambda_next = p.rayleigh_quotient(&next)?;
        if lambda_next > lambda + MONOTONICITY_RTOL * fabs(lambda) {
            return Err(Error::MonotonicityViolated {
                lambda,
                lambda_next,
            });
        }

        let record = StepRecord {
            k,
            lambda,
            lambda_next,
            w_norm: p.energy_norm(&w)?,
            v_norm: p.energy_norm(v)?,
            v_norm_mass: p.mass_norm(v)?,
            u_minus_w_norm: p.energy_norm(&u.sub(&w))?,
            u_minus_v_norm: p.energy_norm(&u_minus_v)?,
            u_diff_norm: p.energy_norm(&u.sub(&next))?,
            subspace_dist,
            eta_used: result.eta_actual,
        };
        Ok(StepOutcome {
            next,
            record,
            fixed_point: false,
        })
    }

    /// Runs the iteration from `u0` (normalized internally) until the
    /// tolerance, a fixed point, or the step budget stops it.
    pub fn run(&self, u0: &Vector, cfg: &RunConfig) -> Result<Trajectory> {
        cfg.validate()?;
        let p = self.problem;
        let mut u = p.m_normalize(u0)?;
        if let Some(meta) = p.metadata() {
            let lambda0 = p.rayleigh_quotient(&u)?;
            if lambda0 >= meta.lambda2() {
                return Err(Error::PreconditionViolated {
                    lambda: lambda0,
                    lambda2: meta.lambda2(),
                });
            }
        }

        let mut records = Vec::new();
        let mut stop_reason = StopReason::MaxSteps;
        for k in 0..cfg.max_steps {
            let outcome = self.step(&u, k, cfg).map_err(|e| e.at_step(k))?;
            let record = outcome.record.clone();
            records.push(outcome.record);
            u = outcome.next;
            if outcome.fixed_point {
                stop_reason = StopReason::EigenvectorFixedPoint;
                break;
            }
            let reached = match p.metadata() {
                Some(meta) => {
                    if record.lambda_next - meta.lambda1() <= cfg.stop_tol {
                        Some(StopCriterion::GapToLambda1)
                    } else {
                        None
                    }
                }
                None => {
                    if record.lambda - record.lambda_next <= cfg.stop_tol {
                        Some(StopCriterion::Decrement)
                    } else {
                        None
                    }
                }
            };
            if let Some(criterion) = reached {
                stop_reason = StopReason::TolReached { criterion };
                break;
            }
        }
        Ok(Trajectory {
            records,
            final_u: u,
            stop_reason,
            config: cfg.clone(),
        })
    }
}

/// Convenience wrapper building a [`Runner`] for a single run.
pub fn run(p: &Eigenproblem, u0: &Vector, cfg: &RunConfig) -> Result<Trajectory> {
    Runner::new(p)?.run(u0, cfg)
}

/// Checks the tail behavior of the iterates: wherever the recorded update
/// satisfies the small-correction hypothesis `||v||^2 <= lambda1 / 4`, the
/// squared step length must stay below the certified constant times the
/// distance of the Rayleigh quotient from the minimum.
pub fn cauchy_tail_check(t: &Trajectory, meta: &SpectralMetadata) -> Result<bool> {
    if t.records.len() < 2 {
        return Err(Error::BadConfig(
            "tail check needs a trajectory with at least two records",
        ));
    }
    for rec in &t.records {
        if rec.v_norm * rec.v_norm > meta.lambda1() / 4.0 {
            continue;
        }
        let b = BoundInputs::new(meta.lambda1(), meta.lambda2(), rec.eta_used)?;
        let c = b.iterate_distance_constant();
        let lhs = rec.u_diff_norm * rec.u_diff_norm;
        let rhs = c * (rec.lambda - meta.lambda1());
        if lhs > rhs * (1.0 + 1e-9) + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Suffix sums of the recorded step lengths, telemetry for the Cauchy-tail
/// behavior. `out[k] = sum_{j >= k} ||u_j - u_{j+1}||`.
pub fn tail_diff_sums(t: &Trajectory) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.records.len());
    let mut acc = 0.0;
    for rec in t.records.iter().rev() {
        acc += rec.u_diff_norm;
        out.push(acc);
    }
    out.reverse();
    out
}
