//! MatrixMarket coordinate files for exchanging operators with external
//! solvers. Symmetric matrices are written as their lower triangle.

use std::io::Write;

use thiserror::Error;

use crate::sparse::{CsrMatrix, SparseError, SymmetricMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixMarketError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported header: {0}")]
    Unsupported(String),
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Largest dimension accepted from a file; guards against absurd headers.
pub const MAX_DIMENSION: usize = 1 << 28;

/// Storage kind declared in the banner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

pub fn write_symmetric<W: Write>(matrix: &SymmetricMatrix, mut out: W) -> std::io::Result<()> {
    let lower: Vec<(usize, usize, f64)> = matrix.triplets().filter(|&(i, j, _)| i >= j).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", matrix.dim(), matrix.dim(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_general<W: Write>(matrix: &CsrMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", matrix.nrows(), matrix.ncols(), matrix.nnz())?;
    for (i, j, v) in matrix.triplets() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Reads a real coordinate matrix. Symmetric files are expanded to both
/// triangles; duplicate entries are summed.
pub fn parse_matrix_market(text: &str) -> Result<(CsrMatrix, Symmetry), MatrixMarketError> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| MatrixMarketError::Unsupported("empty input".into()))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(MatrixMarketError::Unsupported(banner.trim().to_string()));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(MatrixMarketError::Unsupported(format!("field type {}", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(MatrixMarketError::Unsupported(format!("symmetry {other}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| MatrixMarketError::Syntax { line: 2, message: "missing size line".into() })?;
    let dims = parse_usizes(size, size_line + 1, 3)?;
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    if nrows > MAX_DIMENSION || ncols > MAX_DIMENSION {
        return Err(MatrixMarketError::Syntax { line: size_line + 1, message: format!("dimension {nrows}x{ncols} too large") });
    }
    if symmetry == Symmetry::Symmetric && nrows != ncols {
        return Err(MatrixMarketError::Syntax { line: size_line + 1, message: "symmetric matrix must be square".into() });
    }

    let mut triplets = Vec::with_capacity(nnz.min(1 << 20));
    let mut found = 0usize;
    for (idx, line) in body {
        let no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(MatrixMarketError::Syntax { line: no, message: format!("expected `row col value`, found {} fields", fields.len()) });
        }
        let idx = parse_usizes(&fields[..2].join(" "), no, 2)?;
        let (i, j) = (idx[0], idx[1]);
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(MatrixMarketError::Syntax { line: no, message: format!("index ({i}, {j}) outside {nrows}x{ncols}") });
        }
        let v: f64 = fields[2].parse().map_err(|_| MatrixMarketError::Syntax { line: no, message: format!("bad value {:?}", fields[2]) })?;
        found += 1;
        if found > nnz {
            return Err(MatrixMarketError::EntryCount { expected: nnz, found });
        }
        triplets.push((i - 1, j - 1, v));
        if symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if found != nnz {
        return Err(MatrixMarketError::EntryCount { expected: nnz, found });
    }
    Ok((CsrMatrix::from_triplets(nrows, ncols, &triplets)?, symmetry))
}

/// Reads a file that must describe a symmetric matrix (either banner).
pub fn parse_symmetric(text: &str) -> Result<SymmetricMatrix, MatrixMarketError> {
    let (matrix, _) = parse_matrix_market(text)?;
    Ok(SymmetricMatrix::new(matrix)?)
}

fn parse_usizes(text: &str, line: usize, count: usize) -> Result<Vec<usize>, MatrixMarketError> {
    let values: Result<Vec<usize>, _> = text.split_whitespace().map(str::parse).collect();
    match values {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(MatrixMarketError::Syntax { line, message: format!("expected {count} non-negative integers, found {text:?}") }),
    }
}
