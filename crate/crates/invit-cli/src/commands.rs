//! The four CLI verbs. Each returns `Ok` only when its artifacts are
//! written and, where applicable, every certified inequality held.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use invit_core::bounds::{verify_records, verify_trajectory, InequalityId, VerificationReport};
use invit_core::correction::PerturbationPolicy;
use invit_core::generate::admissible_start;
use invit_core::iterate::{Runner, StopReason, Trajectory};
use invit_core::{Eigenproblem, RunConfig};

use crate::artifacts::{
    read_metadata_json, read_trajectory_csv, read_trajectory_json, write_metadata_json,
    write_rates_csv, write_report_json, write_summary_csv, write_trajectory_csv,
    write_trajectory_json, MetadataDoc, ReportDoc, SummaryRow,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{OutputFormat, RunManifest};
use crate::mtx;

/// Writes the problem matrices and their spectral constants:
/// `A.mtx`, `M.mtx`, `metadata.json`.
pub fn cmd_generate(manifest: &RunManifest, base: &Path, out: &Path) -> CliResult<()> {
    let problem = manifest.generator.build(base)?;
    let doc = MetadataDoc::from_problem(&problem)?;
    fs::create_dir_all(out)?;
    mtx::write_matrix(&out.join("A.mtx"), problem.energy_form())?;
    mtx::write_matrix(&out.join("M.mtx"), problem.mass_form())?;
    write_metadata_json(&out.join("metadata.json"), &doc)?;
    Ok(())
}

/// One full pipeline run: build, iterate, certify, write artifacts.
/// Fails with a verification error when any ledger check fails.
pub fn cmd_run(manifest: &RunManifest, base: &Path, out: &Path) -> CliResult<()> {
    let problem = manifest.generator.build(base)?;
    let u0 = manifest.start_vector(&problem, base)?;
    let runner = Runner::new(&problem)?;
    let trajectory = runner.run(&u0, &manifest.run)?;
    fs::create_dir_all(out)?;
    let report = write_run_artifacts(manifest, &problem, &trajectory, out)?;
    match report {
        Some(doc) if !doc.report.all_pass => Err(CliError::VerifyFailed(describe_failure(
            &doc.report,
        ))),
        _ => Ok(()),
    }
}

/// Writes the per-run artifact set into `out` and returns the report
/// document when metadata made verification possible.
fn write_run_artifacts(
    manifest: &RunManifest,
    problem: &Eigenproblem,
    trajectory: &Trajectory,
    out: &Path,
) -> CliResult<Option<ReportDoc>> {
    let eta = manifest.run.eta;
    if manifest.wants(OutputFormat::Csv) {
        write_trajectory_csv(&out.join("trajectory.csv"), &trajectory.records)?;
        if let Some(meta) = problem.metadata() {
            write_rates_csv(
                &out.join("rates.csv"),
                &trajectory.records,
                meta.lambda1(),
                meta.lambda2(),
                eta,
            )?;
        }
    }
    if manifest.wants(OutputFormat::Json) {
        write_trajectory_json(&out.join("trajectory.json"), trajectory)?;
    }
    let doc = match problem.metadata() {
        Some(meta) => {
            let report = verify_trajectory(trajectory, meta, eta)?;
            Some(ReportDoc::certified(
                meta.lambda1(),
                meta.lambda2(),
                eta,
                report,
            ))
        }
        None => Some(ReportDoc::metadata_absent()),
    };
    if manifest.wants(OutputFormat::Json) {
        if let Some(doc) = &doc {
            write_report_json(&out.join("report.json"), doc)?;
        }
    }
    Ok(doc)
}

struct Cell {
    index: usize,
    eta: f64,
    gap_fraction: f64,
    seed: u64,
}

struct CellOutcome {
    index: usize,
    eta: f64,
    gap_fraction: f64,
    seed: u64,
    steps: usize,
    all_pass: bool,
    min_margin_t31: Option<f64>,
    error: Option<String>,
}

/// Cross product of the sweep lists, one run per cell, executed by a small
/// worker pool. Cell artifacts land in per-cell directories; cell failures
/// are recorded and the sweep continues.
pub fn cmd_sweep(
    manifest: &RunManifest,
    base: &Path,
    out: &Path,
    workers: usize,
) -> CliResult<()> {
    let sweep = manifest
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::usage("sweep requires a sweep block in the manifest"))?;
    let problem = manifest.generator.build(base)?;
    if problem.metadata().is_none() {
        return Err(CliError::usage(
            "sweep requires a metadata-bearing problem (the cells need admissible starts)",
        ));
    }
    let runner = Runner::new(&problem)?;
    fs::create_dir_all(out)?;

    let mut cells = Vec::new();
    for &eta in &sweep.eta {
        for &gap_fraction in &sweep.gap_fraction {
            for &seed in &sweep.seeds {
                cells.push(Cell {
                    index: cells.len(),
                    eta,
                    gap_fraction,
                    seed,
                });
            }
        }
    }

    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<CellOutcome>> = Mutex::new(Vec::with_capacity(cells.len()));
    let pool = workers.max(1).min(cells.len());
    std::thread::scope(|scope| {
        for _ in 0..pool {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let outcome = run_cell(manifest, &problem, &runner, &cells[i], out);
                outcomes.lock().expect("no panics hold this lock").push(outcome);
            });
        }
    });

    let mut outcomes = outcomes.into_inner().expect("workers joined");
    outcomes.sort_by_key(|o| o.index);

    // Steps trend against the previous eta of the same (gap, seed) cell.
    let mut previous_steps: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    for o in &outcomes {
        let key = (o.gap_fraction.to_bits(), o.seed);
        let trend = match previous_steps.get(&key) {
            None => "na",
            Some(&prev) if o.steps > prev => "up",
            Some(&prev) if o.steps < prev => "down",
            Some(_) => "flat",
        };
        previous_steps.insert(key, o.steps);
        if !o.all_pass {
            failures += 1;
        }
        if let Some(err) = &o.error {
            eprintln!(
                "cell eta={} gap_fraction={} seed={}: {err}",
                o.eta, o.gap_fraction, o.seed
            );
        }
        rows.push(SummaryRow {
            eta: o.eta,
            gap_fraction: o.gap_fraction,
            seed: o.seed,
            steps_to_tol: o.steps,
            all_pass: o.all_pass,
            min_margin_t31: o.min_margin_t31,
            steps_trend: trend,
        });
    }
    write_summary_csv(&out.join("summary.csv"), &rows)?;
    if failures > 0 {
        return Err(CliError::VerifyFailed(format!(
            "{failures} of {} sweep cells failed; see summary.csv",
            rows.len()
        )));
    }
    Ok(())
}

fn run_cell(
    manifest: &RunManifest,
    problem: &Eigenproblem,
    runner: &Runner<'_>,
    cell: &Cell,
    out: &Path,
) -> CellOutcome {
    let failed = |error: String| CellOutcome {
        index: cell.index,
        eta: cell.eta,
        gap_fraction: cell.gap_fraction,
        seed: cell.seed,
        steps: 0,
        all_pass: false,
        min_margin_t31: None,
        error: Some(error),
    };

    let cfg = RunConfig {
        eta: cell.eta,
        policy: PerturbationPolicy {
            seed: cell.seed,
            ..manifest.run.policy.clone()
        },
        ..manifest.run.clone()
    };
    let u0 = match admissible_start(problem, cell.gap_fraction, cell.seed) {
        Ok(u0) => u0,
        Err(e) => return failed(format!("start vector: {e}")),
    };
    let trajectory = match runner.run(&u0, &cfg) {
        Ok(t) => t,
        Err(e) => return failed(format!("run: {e}")),
    };
    let meta = problem.metadata().expect("checked by cmd_sweep");
    let report = match verify_trajectory(&trajectory, meta, cell.eta) {
        Ok(r) => r,
        Err(e) => return failed(format!("verify: {e}")),
    };

    let cell_dir = out.join("cells").join(format!(
        "eta{}_gap{}_seed{}",
        cell.eta, cell.gap_fraction, cell.seed
    ));
    if let Err(e) = fs::create_dir_all(&cell_dir) {
        return failed(format!("cell dir: {e}"));
    }
    let cell_manifest = RunManifest {
        run: cfg,
        ..manifest.clone()
    };
    if let Err(e) = write_run_artifacts(&cell_manifest, problem, &trajectory, &cell_dir) {
        return failed(format!("artifacts: {e}"));
    }

    CellOutcome {
        index: cell.index,
        eta: cell.eta,
        gap_fraction: cell.gap_fraction,
        seed: cell.seed,
        steps: trajectory.records.len(),
        all_pass: report.all_pass,
        min_margin_t31: report.min_margin_t31,
        error: match trajectory.stop_reason {
            StopReason::MaxSteps => Some("hit max_steps before the tolerance".to_string()),
            _ => None,
        },
    }
}

/// Re-certifies a serialized trajectory against serialized spectral
/// constants, writes `report.json`, and prints a per-inequality table.
pub fn cmd_verify(
    trajectory_path: &Path,
    metadata_path: &Path,
    eta: f64,
    out: &Path,
) -> CliResult<()> {
    let meta = read_metadata_json(metadata_path)?;
    let records = match trajectory_path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_trajectory_csv(trajectory_path)?,
        Some("json") => read_trajectory_json(trajectory_path)?.records,
        other => {
            return Err(CliError::usage(format!(
                "trajectory file must end in .csv or .json, got {other:?}"
            )))
        }
    };
    let report = verify_records(&records, meta.lambda1, meta.lambda2, eta)
        .map_err(|e| CliError::usage(format!("verify: {e}")))?;
    print_report_table(&report);
    fs::create_dir_all(out)?;
    let doc = ReportDoc::certified(meta.lambda1, meta.lambda2, eta, report);
    write_report_json(&out.join("report.json"), &doc)?;
    if doc.report.all_pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(describe_failure(&doc.report)))
    }
}

fn describe_failure(report: &VerificationReport) -> String {
    match report.first_failure {
        Some(f) => format!("first failure at step {} check {}", f.step, f.id),
        None => "no failing check recorded".to_string(),
    }
}

fn print_report_table(report: &VerificationReport) {
    println!("{:<6} {:>10} {:>8} {:>14}", "check", "applicable", "passed", "min margin");
    for id in InequalityId::ALL {
        let mut applicable = 0usize;
        let mut passed = 0usize;
        let mut min_margin = f64::INFINITY;
        for step in &report.steps {
            for entry in &step.checks {
                if entry.id != id || !entry.applicable {
                    continue;
                }
                applicable += 1;
                if entry.pass {
                    passed += 1;
                }
                if let Some(m) = entry.margin {
                    min_margin = min_margin.min(m);
                }
            }
        }
        let margin = if applicable == 0 {
            "-".to_string()
        } else {
            format!("{min_margin:.3e}")
        };
        println!("{:<6} {applicable:>10} {passed:>8} {margin:>14}", id.as_str());
    }
    println!(
        "steps: {}  all_pass: {}{}",
        report.steps.len(),
        report.all_pass,
        match report.first_failure {
            Some(f) => format!("  first_failure: step {} {}", f.step, f.id),
            None => String::new(),
        }
    );
}

/// Resolves the output directory: flag beats manifest beats `out`.
pub fn resolve_out(cli_out: Option<PathBuf>, manifest: &RunManifest) -> PathBuf {
    cli_out
        .or_else(|| manifest.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
