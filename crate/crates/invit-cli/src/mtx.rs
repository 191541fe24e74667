//! Matrix Market coordinate files for symmetric real matrices: lower
//! triangle stored, 1-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use invit_core::SymmetricForm;

use crate::error::{CliError, CliResult};
use crate::numfmt::fmt_f64;

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

/// Writes the lower triangle of a symmetric form, one coordinate entry per
/// line with 1-based indices.
pub fn write_matrix(path: &Path, form: &SymmetricForm) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let triples = form.lower_triangle();
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {} {}", form.dim(), form.dim(), triples.len())?;
    for (i, j, v) in triples {
        writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a symmetric coordinate file back into a form. The banner must
/// declare exactly the symmetric real coordinate layout; entries must sit
/// on or below the diagonal and may not repeat. Positive definiteness is
/// validated by the form constructor.
pub fn read_matrix(path: &Path) -> CliResult<SymmetricForm> {
    let file = File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let banner = lines
        .next()
        .ok_or_else(|| CliError::usage("empty matrix file"))??;
    let banner_fields: Vec<&str> = banner.split_whitespace().collect();
    let expected: Vec<&str> = HEADER.split_whitespace().collect();
    if banner_fields != expected {
        return Err(CliError::usage(format!(
            "unsupported matrix banner {banner:?}; expected {HEADER:?}"
        )));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(CliError::usage("size line must read `rows cols nnz`"));
                }
                let rows: usize = parse_field(fields[0], "rows")?;
                let cols: usize = parse_field(fields[1], "cols")?;
                let nnz: usize = parse_field(fields[2], "nnz")?;
                if rows != cols || rows == 0 {
                    return Err(CliError::usage(format!(
                        "matrix must be square and nonempty, got {rows} x {cols}"
                    )));
                }
                dims = Some((rows, cols, nnz));
                triples.reserve(nnz);
            }
            Some((rows, _, nnz)) => {
                if fields.len() != 3 {
                    return Err(CliError::usage("entry line must read `i j value`"));
                }
                if triples.len() == nnz {
                    return Err(CliError::usage("more entries than the size line declares"));
                }
                let i: usize = parse_field(fields[0], "row index")?;
                let j: usize = parse_field(fields[1], "column index")?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| CliError::usage(format!("bad value {:?}", fields[2])))?;
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(CliError::usage(format!("index ({i}, {j}) out of range")));
                }
                if j > i {
                    return Err(CliError::usage(format!(
                        "entry ({i}, {j}) lies above the diagonal; store the lower triangle"
                    )));
                }
                triples.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, _, nnz) =
        dims.ok_or_else(|| CliError::usage("matrix file ends before the size line"))?;
    if triples.len() != nnz {
        return Err(CliError::usage(format!(
            "size line declares {nnz} entries, file has {}",
            triples.len()
        )));
    }
    SymmetricForm::from_coo_symmetric(rows, &triples)
        .map_err(|e| CliError::usage(format!("matrix rejected: {e}")))
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.parse()
        .map_err(|_| CliError::usage(format!("bad {what} {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use invit_core::generate::laplacian_1d;

    #[test]
    fn roundtrip_preserves_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let p = laplacian_1d(3).unwrap();
        write_matrix(&path, p.energy_form()).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.to_dense(), p.energy_form().to_dense());
    }

    #[test]
    fn rejects_foreign_banners_and_bad_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mtx");

        std::fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
        assert!(matches!(read_matrix(&path), Err(CliError::Usage(_))));

        std::fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n").unwrap();
        assert!(matches!(read_matrix(&path), Err(CliError::Usage(_))));

        std::fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n").unwrap();
        assert!(matches!(read_matrix(&path), Err(CliError::Usage(_))));

        // Structurally fine but indefinite: the form constructor refuses.
        std::fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 -1.0\n").unwrap();
        assert!(matches!(read_matrix(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn comments_and_blank_lines_are_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.mtx");
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n\n2 2 2\n1 1 2.0\n\n2 2 3.0\n",
        )
        .unwrap();
        let form = read_matrix(&path).unwrap();
        assert_eq!(form.entry(0, 0), 2.0);
        assert_eq!(form.entry(1, 1), 3.0);
    }
}
