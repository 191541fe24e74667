//! End-to-end checks of the installed binary: exit codes, artifact layout,
//! fault localization, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invit_cli::artifacts::{
    read_report_json, read_trajectory_csv, write_trajectory_csv, TRAJECTORY_HEADER,
};

fn invit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary spawns")
}

fn manifest_json(extra: &str) -> String {
    format!(
        r#"{{
  "schema_version": 1,
  "generator": {{"kind": "diagonal", "params": {{"eigenvalues": [1.0,2.0,3.0,4.0,5.0,6.0,7.0,8.0,9.0,10.0]}}, "seed": 3}},
  "run": {{
    "eta": 0.5,
    "solver_mode": "perturbed",
    "policy": {{"kind": "worst-of-n", "n_candidates": 16, "seed": 5}},
    "max_steps": 4000,
    "stop_tol": 1e-10
  }},
  "start": {{"gap_fraction": 0.5, "seed": 11}},
  "output_dir": "out"{extra}
}}"#
    )
}

fn write_manifest(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("manifest.json");
    fs::write(&path, manifest_json(extra)).unwrap();
    path
}

#[test]
fn run_produces_passing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    let out = invit(&["run", "--manifest", "manifest.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["trajectory.csv", "trajectory.json", "rates.csv", "report.json"] {
        assert!(dir.path().join("out").join(file).exists(), "{file}");
    }
    let report = read_report_json(&dir.path().join("out/report.json")).unwrap();
    assert!(report.report.all_pass);
    assert_eq!(report.eta, Some(0.5));
}

#[test]
fn invalid_eta_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    let out = invit(
        &["run", "--manifest", "manifest.json", "--override", "run.eta=1.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = invit(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_point_start_yields_single_row() {
    let dir = tempfile::tempdir().unwrap();
    // Start exactly on the minimum eigenvector, supplied through the
    // vector-file interface.
    fs::write(dir.path().join("e1.txt"), "1.0\n0\n0\n0\n0\n0\n0\n0\n0\n0\n").unwrap();
    write_manifest(dir.path(), "");
    let out = invit(
        &[
            "run",
            "--manifest",
            "manifest.json",
            "--override",
            "start.vector_path=e1.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], TRAJECTORY_HEADER);
    let json = fs::read_to_string(dir.path().join("out/trajectory.json")).unwrap();
    assert!(json.contains("eigenvector_fixed_point"));
}

#[test]
fn generate_then_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    let gen = invit(&["generate", "--manifest", "manifest.json"], dir.path());
    assert!(gen.status.success());
    let run = invit(&["run", "--manifest", "manifest.json"], dir.path());
    assert!(run.status.success());

    let verify = invit(
        &[
            "verify",
            "--trajectory",
            "out/trajectory.csv",
            "--metadata",
            "out/metadata.json",
            "--eta",
            "0.5",
            "--out",
            "recheck",
        ],
        dir.path(),
    );
    assert!(
        verify.status.success(),
        "{}",
        String::from_utf8_lossy(&verify.stderr)
    );
    let stdout = String::from_utf8_lossy(&verify.stdout);
    assert!(stdout.contains("T3.1"));
    assert!(stdout.contains("all_pass: true"));

    // Margins recompute identically from the serialized trajectory.
    let original = read_report_json(&dir.path().join("out/report.json")).unwrap();
    let recheck = read_report_json(&dir.path().join("recheck/report.json")).unwrap();
    for (a, b) in original.report.steps.iter().zip(&recheck.report.steps) {
        for (ca, cb) in a.checks.iter().zip(&b.checks) {
            assert_eq!(ca.margin, cb.margin);
            assert_eq!(ca.pass, cb.pass);
        }
    }
}

#[test]
fn corrupted_trajectory_fails_verification_with_location() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    assert!(invit(&["generate", "--manifest", "manifest.json"], dir.path())
        .status
        .success());
    assert!(invit(&["run", "--manifest", "manifest.json"], dir.path())
        .status
        .success());

    let traj_path = dir.path().join("out/trajectory.csv");
    let mut records = read_trajectory_csv(&traj_path).unwrap();
    let original = read_report_json(&dir.path().join("out/report.json")).unwrap();
    let target = records.len() / 3;
    let margin = original.report.steps[target]
        .checks
        .iter()
        .find(|c| c.id == invit_core::InequalityId::T31)
        .unwrap()
        .margin
        .unwrap();
    records[target].lambda_next += 10.0 * margin;
    write_trajectory_csv(&traj_path, &records).unwrap();

    let verify = invit(
        &[
            "verify",
            "--trajectory",
            "out/trajectory.csv",
            "--metadata",
            "out/metadata.json",
            "--eta",
            "0.5",
            "--out",
            "recheck",
        ],
        dir.path(),
    );
    assert_eq!(verify.status.code(), Some(1));
    let report = read_report_json(&dir.path().join("recheck/report.json")).unwrap();
    let failure = report.report.first_failure.unwrap();
    assert_eq!(failure.step, target);
    assert_eq!(failure.id, invit_core::InequalityId::T31);
}

#[test]
fn missing_subspace_column_disables_only_that_check() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    assert!(invit(&["generate", "--manifest", "manifest.json"], dir.path())
        .status
        .success());
    let run = invit(
        &[
            "run",
            "--manifest",
            "manifest.json",
            "--override",
            "run.record_subspace_distance=false",
        ],
        dir.path(),
    );
    assert!(run.status.success());
    let verify = invit(
        &[
            "verify",
            "--trajectory",
            "out/trajectory.csv",
            "--metadata",
            "out/metadata.json",
            "--eta",
            "0.5",
            "--out",
            "recheck",
        ],
        dir.path(),
    );
    assert!(verify.status.success());
    let report = read_report_json(&dir.path().join("recheck/report.json")).unwrap();
    assert!(report.report.all_pass);
    for step in &report.report.steps {
        let t32 = step
            .checks
            .iter()
            .find(|c| c.id == invit_core::InequalityId::T32)
            .unwrap();
        assert!(!t32.applicable);
        assert!(t32.pass);
    }
}

#[test]
fn sweep_writes_summary_and_cell_dirs() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(
        dir.path(),
        r#",
  "sweep": {"eta": [0.1, 0.5], "gap_fraction": [0.5], "seeds": [1, 2, 3]}"#,
    );
    let out = invit(
        &["sweep", "--manifest", "manifest.json", "--workers", "3"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(
        lines[0],
        "eta,gap_fraction,seed,steps_to_tol,all_pass,min_margin_T31,steps_trend"
    );
    // First eta block has no predecessor; the second block carries a trend.
    assert!(lines[1].ends_with(",na"));
    assert!(
        lines[4].ends_with(",up") || lines[4].ends_with(",flat") || lines[4].ends_with(",down")
    );
    assert!(dir
        .path()
        .join("out/cells/eta0.5_gap0.5_seed3/report.json")
        .exists());
}

#[test]
fn shipped_sweep_manifest_yields_ninety_passing_cells() {
    // The full 3 x 3 x 10 sweep from the repository manifest.
    let manifest = concat!(env!("CARGO_MANIFEST_DIR"), "/../../manifests/diag10-sweep.json");
    let dir = tempfile::tempdir().unwrap();
    let out = invit(
        &["sweep", "--manifest", manifest, "--workers", "4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/diag10-sweep/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 1 + 90);
    for line in &lines[1..] {
        assert!(line.contains(",true,"), "{line}");
    }
}

#[test]
fn empty_sweep_lists_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(
        dir.path(),
        r#",
  "sweep": {"eta": [], "gap_fraction": [0.5], "seeds": [1]}"#,
    );
    let out = invit(&["sweep", "--manifest", "manifest.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic_up_to_the_timestamp_key() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path(), "");
    for out_dir in ["a", "b"] {
        let out = invit(
            &["run", "--manifest", "manifest.json", "--out", out_dir],
            dir.path(),
        );
        assert!(out.status.success());
    }
    for file in ["trajectory.csv", "rates.csv", "report.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    // trajectory.json may differ only in the single timestamp key.
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"created_unix\""))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(
        strip(&dir.path().join("a/trajectory.json")),
        strip(&dir.path().join("b/trajectory.json"))
    );
}
