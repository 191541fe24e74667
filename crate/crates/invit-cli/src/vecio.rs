//! Vector files: one scalar per line in plain text, or a JSON array.

use std::fs;
use std::path::Path;

use invit_core::Vector;

use crate::error::{CliError, CliResult};
use crate::numfmt::{fmt_f64, parse_f64};

/// Reads a vector from either supported layout, sniffing a leading `[`
/// for the JSON form.
pub fn read_vector(path: &Path) -> CliResult<Vector> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let coords: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad json vector {}: {e}", path.display())))?
    } else {
        let mut coords = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let x = parse_f64(trimmed).ok_or_else(|| {
                CliError::usage(format!(
                    "{}:{}: not a scalar: {trimmed:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            coords.push(x);
        }
        coords
    };
    Vector::new(coords).map_err(|e| CliError::usage(format!("bad vector data: {e}")))
}

/// Writes the plain-text layout.
pub fn write_vector(path: &Path, v: &Vector) -> CliResult<()> {
    let mut text = String::new();
    for &x in v.as_slice() {
        text.push_str(&fmt_f64(x));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
