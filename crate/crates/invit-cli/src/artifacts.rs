//! On-disk artifacts: the trajectory in CSV and JSON, the verification
//! report, spectral metadata, and the plot-ready rate table. All CSV files
//! carry fixed headers and full-precision numbers; the only timestamp in
//! any artifact is the single `created_unix` key of `trajectory.json`.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use invit_core::bounds::{BoundInputs, VerificationReport};
use invit_core::iterate::{StepRecord, StopReason};
use invit_core::{Eigenproblem, RunConfig, Trajectory, Vector};

use crate::error::{CliError, CliResult};
use crate::numfmt::{fmt_f64, parse_f64};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_HEADER: &str = "k,lambda,lambda_next,w_norm,v_norm,v_norm_mass,\
u_minus_w_norm,u_minus_v_norm,u_diff_norm,subspace_dist,eta_used";

pub const RATES_HEADER: &str =
    "k,lambda_minus_lambda1,empirical_ratio,q_of_lambda_k,q_limit,kn_optimal";

pub const SUMMARY_HEADER: &str =
    "eta,gap_fraction,seed,steps_to_tol,all_pass,min_margin_T31,steps_trend";

pub fn write_trajectory_csv(path: &Path, records: &[StepRecord]) -> CliResult<()> {
    let mut text = String::from(TRAJECTORY_HEADER);
    text.push('\n');
    for r in records {
        let subspace = r.subspace_dist.map(fmt_f64).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.lambda),
            fmt_f64(r.lambda_next),
            fmt_f64(r.w_norm),
            fmt_f64(r.v_norm),
            fmt_f64(r.v_norm_mass),
            fmt_f64(r.u_minus_w_norm),
            fmt_f64(r.u_minus_v_norm),
            fmt_f64(r.u_diff_norm),
            subspace,
            fmt_f64(r.eta_used),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Strict reader: exact header, exact field count, finite numbers,
/// non-negative norms. Inequality-level sanity stays with the verifier.
pub fn read_trajectory_csv(path: &Path) -> CliResult<Vec<StepRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::usage("empty trajectory file"))?;
    if header != TRAJECTORY_HEADER {
        return Err(CliError::usage(format!(
            "unexpected trajectory header {header:?}"
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(CliError::usage(format!(
                "line {}: expected 11 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| CliError::usage(format!("line {}: bad {what}", lineno + 2));
        let k: usize = fields[0].parse().map_err(|_| bad("step index"))?;
        let mut scalars = [0.0_f64; 9];
        for (slot, idx) in [1usize, 2, 3, 4, 5, 6, 7, 8, 10].iter().enumerate() {
            let x = parse_f64(fields[*idx]).ok_or_else(|| bad("number"))?;
            if !x.is_finite() {
                return Err(bad("non-finite number"));
            }
            scalars[slot] = x;
        }
        let subspace_dist = if fields[9].is_empty() {
            None
        } else {
            let x = parse_f64(fields[9]).ok_or_else(|| bad("subspace_dist"))?;
            if !x.is_finite() {
                return Err(bad("non-finite subspace_dist"));
            }
            Some(x)
        };
        let record = StepRecord {
            k,
            lambda: scalars[0],
            lambda_next: scalars[1],
            w_norm: scalars[2],
            v_norm: scalars[3],
            v_norm_mass: scalars[4],
            u_minus_w_norm: scalars[5],
            u_minus_v_norm: scalars[6],
            u_diff_norm: scalars[7],
            subspace_dist,
            eta_used: scalars[8],
        };
        for (name, value) in [
            ("w_norm", record.w_norm),
            ("v_norm", record.v_norm),
            ("v_norm_mass", record.v_norm_mass),
            ("u_minus_w_norm", record.u_minus_w_norm),
            ("u_minus_v_norm", record.u_minus_v_norm),
            ("u_diff_norm", record.u_diff_norm),
        ] {
            if value < 0.0 {
                return Err(CliError::usage(format!(
                    "line {}: negative {name}",
                    lineno + 2
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// The JSON form of a trajectory, embedding its configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryDoc {
    pub schema_version: u32,
    /// Seconds since the epoch; the single timestamp key in any artifact.
    pub created_unix: u64,
    pub config: RunConfig,
    pub stop_reason: StopReason,
    pub final_u: Vector,
    pub records: Vec<StepRecord>,
}

impl TrajectoryDoc {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        TrajectoryDoc {
            schema_version: SCHEMA_VERSION,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: t.config.clone(),
            stop_reason: t.stop_reason,
            final_u: t.final_u.clone(),
            records: t.records.clone(),
        }
    }
}

pub fn write_trajectory_json(path: &Path, t: &Trajectory) -> CliResult<()> {
    write_json(path, &TrajectoryDoc::from_trajectory(t))
}

pub fn read_trajectory_json(path: &Path) -> CliResult<TrajectoryDoc> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let doc: TrajectoryDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("bad trajectory json: {e}")))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::usage(format!(
            "unsupported trajectory schema_version {}",
            doc.schema_version
        )));
    }
    Ok(doc)
}

/// The verification report artifact. `lambda1`, `lambda2` and `eta` record
/// what the checks ran against; a metadata-free run yields an empty,
/// vacuously passing report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub metadata_present: bool,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub eta: Option<f64>,
    #[serde(flatten)]
    pub report: VerificationReport,
}

impl ReportDoc {
    pub fn certified(lambda1: f64, lambda2: f64, eta: f64, report: VerificationReport) -> Self {
        ReportDoc {
            schema_version: SCHEMA_VERSION,
            metadata_present: true,
            lambda1: Some(lambda1),
            lambda2: Some(lambda2),
            eta: Some(eta),
            report,
        }
    }

    pub fn metadata_absent() -> Self {
        ReportDoc {
            schema_version: SCHEMA_VERSION,
            metadata_present: false,
            lambda1: None,
            lambda2: None,
            eta: None,
            report: VerificationReport::empty(),
        }
    }
}

pub fn write_report_json(path: &Path, doc: &ReportDoc) -> CliResult<()> {
    write_json(path, doc)
}

pub fn read_report_json(path: &Path) -> CliResult<ReportDoc> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad report json: {e}")))
}

/// Spectral constants of a generated problem, with the eigen residual of
/// every stored basis vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetadataDoc {
    pub schema_version: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub multiplicity: usize,
    pub residuals: Vec<f64>,
}

impl MetadataDoc {
    pub fn from_problem(p: &Eigenproblem) -> CliResult<Self> {
        let meta = p
            .metadata()
            .ok_or_else(|| CliError::usage("problem carries no spectral metadata"))?;
        let a = p.energy_form();
        let m = p.mass_form();
        let residuals = meta
            .basis()
            .iter()
            .map(|chi| {
                let a_chi = a.matvec(chi.as_slice());
                let m_chi = m.matvec(chi.as_slice());
                let mut res_sq = 0.0;
                let mut a_sq = 0.0;
                for k in 0..p.dim() {
                    let r = a_chi[k] - meta.lambda1() * m_chi[k];
                    res_sq += r * r;
                    a_sq += a_chi[k] * a_chi[k];
                }
                (res_sq / a_sq.max(f64::MIN_POSITIVE)).sqrt()
            })
            .collect();
        Ok(MetadataDoc {
            schema_version: SCHEMA_VERSION,
            lambda1: meta.lambda1(),
            lambda2: meta.lambda2(),
            multiplicity: meta.multiplicity(),
            residuals,
        })
    }
}

pub fn write_metadata_json(path: &Path, doc: &MetadataDoc) -> CliResult<()> {
    write_json(path, doc)
}

pub fn read_metadata_json(path: &Path) -> CliResult<MetadataDoc> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let doc: MetadataDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("bad metadata json: {e}")))?;
    if !(doc.lambda1 > 0.0 && doc.lambda2 > doc.lambda1) {
        return Err(CliError::usage(format!(
            "metadata must satisfy 0 < lambda1 < lambda2, got ({}, {})",
            doc.lambda1, doc.lambda2
        )));
    }
    Ok(doc)
}

/// Plot-ready per-step rate data: realized contraction next to the
/// certified factor, its converged limit, and the sharp matrix-case limit.
pub fn write_rates_csv(
    path: &Path,
    records: &[StepRecord],
    lambda1: f64,
    lambda2: f64,
    eta: f64,
) -> CliResult<()> {
    let b = BoundInputs::new(lambda1, lambda2, eta)
        .map_err(|e| CliError::usage(format!("rates: {e}")))?;
    let q_limit = b.q_limit();
    let kn = b.kn_optimal_rate();
    let mut text = String::from(RATES_HEADER);
    text.push('\n');
    for r in records {
        let gap = r.lambda - lambda1;
        let ratio = (r.lambda_next - lambda1) / gap;
        let q = b
            .q_factor(r.lambda.clamp(lambda1, lambda2))
            .expect("clamped into range");
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(gap),
            fmt_f64(ratio),
            fmt_f64(q),
            fmt_f64(q_limit),
            fmt_f64(kn),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// One sweep cell for `summary.csv`.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub eta: f64,
    pub gap_fraction: f64,
    pub seed: u64,
    pub steps_to_tol: usize,
    pub all_pass: bool,
    pub min_margin_t31: Option<f64>,
    /// Steps compared with the same cell at the previous eta: `na`, `up`,
    /// `flat`, or `down`. Reported trend only, never asserted.
    pub steps_trend: &'static str,
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.eta,
            r.gap_fraction,
            r.seed,
            r.steps_to_tol,
            r.all_pass,
            r.min_margin_t31.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            r.steps_trend,
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
