//! MatrixMarket coordinate (sparse matrices) and array (vectors) formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Serialises `m` as `matrix coordinate real general`, one-based indices.
pub fn matrix_to_string(m: &SparseMatrix) -> String {
    let mut s = String::with_capacity(32 * (m.nnz() + 2));
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for i in 0..m.nrows() {
        for (j, v) in m.row_iter(i) {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    s
}

/// Parses `matrix coordinate real|integer general|symmetric`.
pub fn matrix_from_str(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket input".into()))?
        .to_ascii_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() < 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field type {}", words[3])));
    }
    let symmetric = match words[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let size = body
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims = parse_numbers::<usize>(size, 3)?;
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut t = TripletBuilder::with_capacity(nrows, ncols, if symmetric { 2 * nnz } else { nnz });
    let mut count = 0;
    for line in body {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("bad entry line: {line}")));
        }
        let i: usize = parse(f[0])?;
        let j: usize = parse(f[1])?;
        let v: f64 = parse(f[2])?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::Parse(format!("index out of range: {line}")));
        }
        t.push(i - 1, j - 1, v);
        if symmetric && i != j {
            t.push(j - 1, i - 1, v);
        }
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {count}")));
    }
    Ok(t.build())
}

/// Serialises a vector as `matrix array real general` with one column.
pub fn vector_to_string(v: &[f64]) -> String {
    let mut s = String::with_capacity(24 * (v.len() + 2));
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn vector_from_str(text: &str) -> Result<Vec<f64>> {
    let mut body = text.lines().filter(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let size = body
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims = parse_numbers::<usize>(size, 2)?;
    if dims[1] != 1 {
        return Err(Error::Parse("only single-column arrays are supported".into()));
    }
    let v: Vec<f64> = body.map(|l| parse(l.trim())).collect::<Result<_>>()?;
    if v.len() != dims[0] {
        return Err(Error::Parse(format!("expected {} values, found {}", dims[0], v.len())));
    }
    Ok(v)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    fs::write(path, matrix_to_string(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    matrix_from_str(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    fs::write(path, vector_to_string(v))?;
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    vector_from_str(&fs::read_to_string(path)?)
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse '{s}'")))
}

fn parse_numbers<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} numbers in '{line}'")));
    }
    Ok(v)
}
