//! Text formats for matrices and sparse signals.
//!
//! Matrix files start with `key value` header lines (`format-version`, `m`,
//! `n`, `ensemble`, `seed`) followed by `M` rows of `N` whitespace-separated
//! values. Signal files hold `N` on the first line, then one `index value`
//! pair per line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::omp::SparseVector;
use crate::sensing::{Ensemble, SensingMatrix};

pub const MATRIX_FORMAT: &str = "omplab-matrix v1";

pub fn matrix_to_text(phi: &SensingMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format-version {MATRIX_FORMAT}");
    let _ = writeln!(out, "m {}", phi.m());
    let _ = writeln!(out, "n {}", phi.n());
    let _ = writeln!(out, "ensemble {}", phi.ensemble());
    match phi.seed() {
        Some(s) => {
            let _ = writeln!(out, "seed {s}");
        }
        None => out.push_str("seed none\n"),
    }
    for r in 0..phi.m() {
        let row: Vec<String> = (0..phi.n()).map(|c| format!("{:.16e}", phi.dense().get(r, c))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (idx, raw) = lines
        .next()
        .ok_or_else(|| Error::parse(0, format!("missing header `{key}`")))?;
    match raw.trim().split_once(' ') {
        Some((k, v)) if k == key => Ok((idx + 1, v.trim())),
        _ => Err(Error::parse(idx + 1, format!("expected header `{key}`"))),
    }
}

fn number<T: std::str::FromStr>(line: usize, what: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {raw:?}")))
}

pub fn matrix_from_text(text: &str) -> Result<SensingMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (line, version) = header(&mut lines, "format-version")?;
    if version != MATRIX_FORMAT {
        return Err(Error::parse(line, format!("unsupported format {version:?}")));
    }
    let (line, m) = header(&mut lines, "m")?;
    let m: usize = number(line, "m", m)?;
    let (line, n) = header(&mut lines, "n")?;
    let n: usize = number(line, "n", n)?;
    let (line, ensemble) = header(&mut lines, "ensemble")?;
    let ensemble: Ensemble = ensemble.parse().map_err(|_| Error::parse(line, format!("unknown ensemble {ensemble:?}")))?;
    let (line, seed) = header(&mut lines, "seed")?;
    let seed = match seed {
        "none" => None,
        s => Some(number(line, "seed", s)?),
    };

    let mut entries = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (idx, raw) in lines {
        let line = idx + 1;
        if rows == m {
            return Err(Error::parse(line, format!("more than {m} rows")));
        }
        let before = entries.len();
        for tok in raw.split_whitespace() {
            let v: f64 = number(line, "entry", tok)?;
            if !v.is_finite() {
                return Err(Error::parse(line, "non-finite entry"));
            }
            entries.push(v);
        }
        if entries.len() - before != n {
            return Err(Error::parse(line, format!("expected {n} values, found {}", entries.len() - before)));
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::parse(0, format!("expected {m} rows, found {rows}")));
    }
    SensingMatrix::tagged(DenseMatrix::new(m, n, entries)?, ensemble, seed)
}

pub fn signal_to_text(x: &SparseVector) -> String {
    let mut out = format!("{}\n", x.dim());
    for (i, v) in x.iter() {
        let _ = writeln!(out, "{i} {v:.16e}");
    }
    out
}

pub fn signal_from_text(text: &str) -> Result<SparseVector> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (idx, first) = lines.next().ok_or_else(|| Error::parse(1, "missing dimension line"))?;
    let n: usize = number(idx + 1, "dimension", first.trim())?;
    let mut entries = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let (i, v) = raw
            .trim()
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(line, "expected `index value`"))?;
        entries.push((number(line, "index", i)?, number(line, "value", v.trim())?));
    }
    SparseVector::new(n, entries)
}

/// Reads a dense measurement vector: whitespace-separated values.
pub fn vector_from_text(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| number(i + 1, "value", tok))
        .collect()
}

pub fn vector_to_text(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x:.16e}");
    }
    out
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<SensingMatrix> {
    matrix_from_text(&read_to_string(path)?)
}

pub fn write_matrix(path: &Path, phi: &SensingMatrix) -> Result<()> {
    write_string(path, &matrix_to_text(phi))
}

pub fn read_signal(path: &Path) -> Result<SparseVector> {
    signal_from_text(&read_to_string(path)?)
}

pub fn write_signal(path: &Path, x: &SparseVector) -> Result<()> {
    write_string(path, &signal_to_text(x))
}
