//! The JSON manifest is the single configuration source for every command;
//! flags only pick the manifest path and apply dotted-key overrides, so a
//! sweep is reproducible from one file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use invit_core::generate::{
    admissible_start, diagonal_problem, fem1d_problem, laplacian_1d, laplacian_2d,
    spectral_oracle, ORACLE_MAX_DIM,
};
use invit_core::{Eigenproblem, RunConfig, Vector};

use crate::error::{CliError, CliResult};
use crate::{mtx, vecio};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Diagonal {
        eigenvalues: Vec<f64>,
    },
    Laplacian1d {
        n: usize,
    },
    Laplacian2d {
        n: usize,
    },
    Fem1d {
        n: usize,
    },
    MatrixMarket {
        a: PathBuf,
        #[serde(default)]
        m: Option<PathBuf>,
        #[serde(default = "default_true")]
        compute_metadata: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    /// Builds the problem, attaching metadata where the generator defines
    /// it. Matrix-market paths resolve against `base`.
    pub fn build(&self, base: &Path) -> CliResult<Eigenproblem> {
        match &self.kind {
            GeneratorKind::Diagonal { eigenvalues } => {
                diagonal_problem(eigenvalues).map_err(generator_error)
            }
            GeneratorKind::Laplacian1d { n } => laplacian_1d(*n).map_err(generator_error),
            GeneratorKind::Laplacian2d { n } => laplacian_2d(*n).map_err(generator_error),
            GeneratorKind::Fem1d { n } => fem1d_problem(*n).map_err(generator_error),
            GeneratorKind::MatrixMarket {
                a,
                m,
                compute_metadata,
            } => {
                let a_form = mtx::read_matrix(&base.join(a))?;
                let m_form = match m {
                    Some(m) => mtx::read_matrix(&base.join(m))?,
                    None => invit_core::SymmetricForm::identity(a_form.dim())
                        .map_err(generator_error)?,
                };
                let p = Eigenproblem::new(a_form, m_form).map_err(generator_error)?;
                if *compute_metadata && p.dim() <= ORACLE_MAX_DIM {
                    let meta = spectral_oracle(&p).map_err(generator_error)?;
                    p.with_metadata(meta).map_err(generator_error)
                } else {
                    Ok(p)
                }
            }
        }
    }
}

fn generator_error(e: invit_core::Error) -> CliError {
    CliError::Runtime(format!("generator: {e}"))
}

/// How the starting vector is produced: a prescribed-quotient construction
/// (needs metadata) or a vector file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StartSpec {
    pub gap_fraction: f64,
    pub seed: Option<u64>,
    pub vector_path: Option<PathBuf>,
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec {
            gap_fraction: 0.5,
            seed: None,
            vector_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub eta: Vec<f64>,
    pub gap_fraction: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub generator: GeneratorSpec,
    pub run: RunConfig,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl RunManifest {
    /// Loads a manifest, applies `key=value` overrides onto the raw JSON,
    /// then deserializes and validates.
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad manifest json: {e}")))?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let manifest: RunManifest = serde_json::from_value(value)
            .map_err(|e| CliError::usage(format!("bad manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.run
            .validate()
            .map_err(|e| CliError::usage(format!("run config: {e}")))?;
        if self.start.vector_path.is_none()
            && !(self.start.gap_fraction > 0.0 && self.start.gap_fraction < 1.0)
        {
            return Err(CliError::usage(format!(
                "start.gap_fraction {} outside (0, 1)",
                self.start.gap_fraction
            )));
        }
        if self.formats.is_empty() {
            return Err(CliError::usage("formats must not be empty"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.eta.is_empty() || sweep.gap_fraction.is_empty() || sweep.seeds.is_empty() {
                return Err(CliError::usage("sweep lists must be nonempty"));
            }
            for &eta in &sweep.eta {
                if !(0.0..1.0).contains(&eta) {
                    return Err(CliError::usage(format!("sweep eta {eta} outside [0, 1)")));
                }
            }
            for &g in &sweep.gap_fraction {
                if !(g > 0.0 && g < 1.0) {
                    return Err(CliError::usage(format!(
                        "sweep gap_fraction {g} outside (0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    /// The starting vector for a single run: the prescribed-quotient
    /// construction by default, or the configured vector file.
    pub fn start_vector(&self, p: &Eigenproblem, base: &Path) -> CliResult<Vector> {
        match &self.start.vector_path {
            Some(rel) => vecio::read_vector(&base.join(rel)),
            None => {
                if p.metadata().is_none() {
                    return Err(CliError::usage(
                        "problem carries no spectral metadata; configure start.vector_path",
                    ));
                }
                let seed = self.start.seed.unwrap_or(self.generator.seed);
                admissible_start(p, self.start.gap_fraction, seed)
                    .map_err(|e| CliError::Runtime(format!("start vector: {e}")))
            }
        }
    }
}

/// Applies one `dotted.path=value` override onto raw JSON. The value is
/// parsed as JSON when possible and falls back to a bare string.
fn apply_override(root: &mut Value, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("override {item:?} is not key=value")))?;
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            return Err(CliError::usage(format!(
                "override {key:?}: {} is not an object",
                parts[..i].join(".")
            )));
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split never yields zero parts")
}
