//! Dense matrix files: plain CSV and MatrixMarket (`array` or `coordinate`).
//!
//! Values are written with 17 significant digits, which reads back to the
//! same `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    MatrixMarket,
}

impl Format {
    /// `.mtx` and `.mm` are MatrixMarket, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "mtx" || e == "mm" => Format::MatrixMarket,
            _ => Format::Csv,
        }
    }
}

fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 =
        tok.trim().parse().map_err(|_| Nmf2Error::Parse { line, msg: format!("not a number: {:?}", tok.trim()) })?;
    if !v.is_finite() {
        return Err(Nmf2Error::Parse { line, msg: format!("non-finite value {v}") });
    }
    Ok(v)
}

/// Reads a matrix, detecting MatrixMarket by its banner line.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Nmf2Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(text)
    } else {
        parse_csv(text)
    }
}

/// Comma-separated rows; blank lines and lines starting with `#` are skipped.
pub fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    // The reader's own line counter ignores comments, and a record's byte
    // offset can point at comment lines skipped before it.
    let line_at = |p: Option<&csv::Position>| {
        p.map_or(0, |p| {
            let bytes = text.as_bytes();
            let mut at = p.byte() as usize;
            while bytes.get(at) == Some(&b'#') {
                at = bytes[at..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |k| at + k + 1);
            }
            1 + bytes[..at].iter().filter(|&&b| b == b'\n').count()
        })
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Nmf2Error::Parse { line: line_at(e.position()), msg: e.to_string() })?;
        let line = line_at(rec.position());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec.iter().map(|f| parse_value(f, line)).collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Nmf2Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Nmf2Error::Shape("no rows in input".into()));
    }
    DenseMatrix::from_rows(&rows)
}

/// MatrixMarket `real`, `integer` or `pattern` data in `general` or
/// `symmetric` layout.
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or(Nmf2Error::Parse { line: 1, msg: "empty file".into() })?;
    let words: Vec<String> = banner.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(Nmf2Error::Parse { line: 1, msg: format!("bad banner {banner:?}") });
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Nmf2Error::Parse { line: 1, msg: format!("unsupported layout {other}") }),
    };
    let pattern = match words[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(Nmf2Error::Parse { line: 1, msg: format!("unsupported field {other}") }),
    };
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Nmf2Error::Parse { line: 1, msg: format!("unsupported symmetry {other}") }),
    };

    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (size_line, size) = body.next().ok_or(Nmf2Error::Parse { line: 2, msg: "missing size line".into() })?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Nmf2Error::Parse { line: size_line, msg: format!("bad size {t:?}") }))
        .collect::<Result<_>>()?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(Nmf2Error::Parse {
            line: size_line,
            msg: format!("expected {expected} integers on the size line"),
        });
    }
    let (m, n) = (dims[0], dims[1]);
    if m == 0 || n == 0 {
        return Err(Nmf2Error::Shape(format!("{m}×{n} matrix")));
    }
    if symmetric && m != n {
        return Err(Nmf2Error::Parse { line: size_line, msg: "symmetric matrix must be square".into() });
    }
    let mut out = DenseMatrix::zeros(m, n);

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in body {
            let toks: Vec<&str> = l.split_whitespace().collect();
            let want = if pattern { 2 } else { 3 };
            if toks.len() != want {
                return Err(Nmf2Error::Parse { line, msg: format!("expected {want} fields") });
            }
            let idx = |t: &str, max: usize| -> Result<usize> {
                let k: usize = t.parse().map_err(|_| Nmf2Error::Parse { line, msg: format!("bad index {t:?}") })?;
                if k == 0 || k > max {
                    return Err(Nmf2Error::Parse { line, msg: format!("index {k} out of range 1..={max}") });
                }
                Ok(k - 1)
            };
            let (i, j) = (idx(toks[0], m)?, idx(toks[1], n)?);
            let v = if pattern { 1.0 } else { parse_value(toks[2], line)? };
            out[(i, j)] += v;
            if symmetric && i != j {
                out[(j, i)] += v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(Nmf2Error::Parse { line: size_line, msg: format!("expected {nnz} entries, found {seen}") });
        }
    } else {
        // Column-major; the symmetric layout stores the lower triangle.
        let mut slots = Vec::new();
        for j in 0..n {
            let start = if symmetric { j } else { 0 };
            for i in start..m {
                slots.push((i, j));
            }
        }
        let mut k = 0;
        for (line, l) in body {
            for tok in l.split_whitespace() {
                let &(i, j) = slots.get(k).ok_or(Nmf2Error::Parse { line, msg: "too many values".into() })?;
                let v = parse_value(tok, line)?;
                out[(i, j)] = v;
                if symmetric {
                    out[(j, i)] = v;
                }
                k += 1;
            }
        }
        if k != slots.len() {
            return Err(Nmf2Error::Parse {
                line: size_line,
                msg: format!("expected {} values, found {k}", slots.len()),
            });
        }
    }
    Ok(out)
}

pub fn to_csv(a: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|&x| fmt_value(x)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// MatrixMarket `array real general`.
pub fn to_matrix_market(a: &DenseMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    s.push_str(&format!("{} {}\n", a.rows(), a.cols()));
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            s.push_str(&fmt_value(a[(i, j)]));
            s.push('\n');
        }
    }
    s
}

/// MatrixMarket `coordinate real general` listing the nonzero entries.
pub fn to_matrix_market_coordinate(a: &DenseMatrix) -> String {
    let mut entries = Vec::new();
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            if a[(i, j)] != 0.0 {
                entries.push(format!("{} {} {}", i + 1, j + 1, fmt_value(a[(i, j)])));
            }
        }
    }
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    s.push_str(&format!("{} {} {}\n", a.rows(), a.cols(), entries.len()));
    for e in entries {
        s.push_str(&e);
        s.push('\n');
    }
    s
}

/// Writes `a` in the format implied by the extension of `path`.
pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let text = match Format::from_path(path) {
        Format::Csv => to_csv(a),
        Format::MatrixMarket => to_matrix_market(a),
    };
    let mut f = fs::File::create(path).map_err(|e| Nmf2Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
