use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use invit_cli::commands::{cmd_generate, cmd_run, cmd_sweep, cmd_verify, resolve_out};
use invit_cli::error::CliResult;
use invit_cli::manifest::RunManifest;

/// Approximate inverse iteration for the minimum eigenvalue of generalized
/// symmetric eigenproblems, with per-step certification of its convergence
/// bounds.
#[derive(Parser)]
#[command(name = "invit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured problem as A.mtx, M.mtx and metadata.json.
    Generate {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (defaults to the manifest's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-key manifest override, e.g. run.eta=0.3; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// One iteration run with trajectory, rates and verification report.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Cross product of eta, gap_fraction and seeds; one run per cell.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent sweep cells.
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-certify a serialized trajectory against serialized metadata.
    Verify {
        /// trajectory.csv or trajectory.json from a previous run.
        #[arg(long)]
        trajectory: PathBuf,
        /// metadata.json from `generate`.
        #[arg(long)]
        metadata: PathBuf,
        /// Run-level accuracy budget the envelope check uses.
        #[arg(long)]
        eta: f64,
        /// Where report.json lands (default: current directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate {
            manifest,
            out,
            overrides,
        } => {
            let base = manifest_base(&manifest);
            let m = RunManifest::load(&manifest, &overrides)?;
            cmd_generate(&m, &base, &resolve_out(out, &m))
        }
        Command::Run {
            manifest,
            out,
            overrides,
        } => {
            let base = manifest_base(&manifest);
            let m = RunManifest::load(&manifest, &overrides)?;
            cmd_run(&m, &base, &resolve_out(out, &m))
        }
        Command::Sweep {
            manifest,
            out,
            workers,
            overrides,
        } => {
            let base = manifest_base(&manifest);
            let m = RunManifest::load(&manifest, &overrides)?;
            cmd_sweep(&m, &base, &resolve_out(out, &m), workers)
        }
        Command::Verify {
            trajectory,
            metadata,
            eta,
            out,
        } => cmd_verify(&trajectory, &metadata, eta, &out),
    }
}

/// Relative paths inside a manifest resolve against its directory.
fn manifest_base(manifest: &std::path::Path) -> PathBuf {
    manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
