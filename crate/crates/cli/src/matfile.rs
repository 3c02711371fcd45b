//! Text matrix files: line 1 is `rows cols complex|real`, then one line per
//! entry in row-major order (`re im` for complex, `re` alone for real).
//! Values are written with the shortest decimal form that parses back to the
//! same bits, so write-then-read is exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use varproj_core::matcore::DenseMatrix;

use crate::CmdError;

pub fn format_matrix(m: &DenseMatrix<f64>) -> String {
    let complex = m.data().iter().any(|v| v.im != 0.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        m.rows(),
        m.cols(),
        if complex { "complex" } else { "real" }
    );
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if complex {
                let _ = writeln!(out, "{} {}", v.re, v.im);
            } else {
                let _ = writeln!(out, "{}", v.re);
            }
        }
    }
    out
}

pub fn write_matrix(path: &Path, m: &DenseMatrix<f64>) -> Result<(), CmdError> {
    std::fs::write(path, format_matrix(m))
        .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix<f64>, CmdError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CmdError::input("empty matrix file"))?;
    let mut parts = header.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CmdError::input(format!("bad header {header:?}")))?;
    let cols: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CmdError::input(format!("bad header {header:?}")))?;
    let kind = parts
        .next()
        .ok_or_else(|| CmdError::input(format!("bad header {header:?}")))?;
    let complex = match kind {
        "complex" => true,
        "real" => false,
        other => return Err(CmdError::input(format!("unknown kind {other:?}"))),
    };
    if parts.next().is_some() {
        return Err(CmdError::input(format!("trailing tokens in header {header:?}")));
    }
    if rows == 0 || cols == 0 {
        return Err(CmdError::input("matrix dimensions must be positive"));
    }

    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let line = lines
                .next()
                .ok_or_else(|| CmdError::input(format!("missing entry ({i},{j})")))?;
            let mut toks = line.split_whitespace();
            let re: f64 = toks
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CmdError::input(format!("bad entry line {line:?}")))?;
            let im: f64 = if complex {
                toks.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CmdError::input(format!("bad entry line {line:?}")))?
            } else {
                0.0
            };
            if toks.next().is_some() {
                return Err(CmdError::input(format!("trailing tokens in entry {line:?}")));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(CmdError::input(format!("non-finite entry {line:?}")));
            }
            m.set(i, j, Complex::new(re, im));
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(CmdError::input("trailing lines after matrix entries"));
    }
    Ok(m)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix<f64>, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::input(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

/// Real vectors ride on the same format as a k-by-1 real matrix.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CmdError> {
    let m = DenseMatrix::from_fn(v.len(), 1, |i, _| Complex::new(v[i], 0.0));
    write_matrix(path, &m)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, CmdError> {
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(CmdError::input(format!(
            "{}: expected a single-column vector file",
            path.display()
        )));
    }
    if m.data().iter().any(|v| v.im != 0.0) {
        return Err(CmdError::input(format!(
            "{}: expected a real vector file",
            path.display()
        )));
    }
    Ok(m.data().iter().map(|v| v.re).collect())
}
