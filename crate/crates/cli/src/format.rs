//! Matrix files.
//!
//! Dense text: the dimension on the first line, then one whitespace
//! separated row per line. JSON: `{"dim": d, "rows": [[...], ...]}`.
//! Both reject matrices that are not symmetric to 1e-12 relative.

use std::fmt;
use std::path::Path;

use cpa_core::SymMatrix;
use serde_json::{json, Value};

/// Relative tolerance for `|a_ij - a_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    DenseText,
    Json,
}

impl Format {
    /// `.json` files are JSON, everything else dense text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::DenseText,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug)]
pub enum ReadError {
    Io(std::io::Error),
    Parse(ParseError),
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadError::Io(e) => write!(f, "{e}"),
            ReadError::Parse(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ReadError {}

pub fn read_matrix(path: &Path) -> Result<SymMatrix, ReadError> {
    let text = std::fs::read_to_string(path).map_err(ReadError::Io)?;
    parse(&text, Format::from_path(path)).map_err(ReadError::Parse)
}

pub fn parse(text: &str, format: Format) -> Result<SymMatrix, ParseError> {
    match format {
        Format::DenseText => parse_dense(text),
        Format::Json => parse_json(text),
    }
}

/// Shortest decimal that parses back to `v`, in plain or exponent form,
/// whichever is shorter.
pub fn format_f64(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

pub fn to_dense(x: &SymMatrix) -> String {
    let mut out = format!("{}\n", x.dim());
    for row in x.rows() {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn to_json(x: &SymMatrix) -> String {
    let v = json!({ "dim": x.dim(), "rows": x.rows() });
    let mut s = serde_json::to_string_pretty(&v).expect("finite matrix serializes");
    s.push('\n');
    s
}

pub fn serialize(x: &SymMatrix, format: Format) -> String {
    match format {
        Format::DenseText => to_dense(x),
        Format::Json => to_json(x),
    }
}

/// A token with its 1-based column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        let offset = tok.as_ptr() as usize - line.as_ptr() as usize;
        (line[..offset].chars().count() + 1, tok)
    })
}

fn parse_number(tok: &str, line: usize, column: usize) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(ParseError::at(
            line,
            column,
            format!("non-finite entry '{tok}'"),
        )),
        Err(_) => Err(ParseError::at(
            line,
            column,
            format!("expected a number, found '{tok}'"),
        )),
    }
}

fn parse_dense(text: &str) -> Result<SymMatrix, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let Some(first) = lines.first() else {
        return Err(ParseError::at(1, 1, "empty file"));
    };
    let mut head = tokens(first);
    let (col, tok) = head
        .next()
        .ok_or_else(|| ParseError::at(1, 1, "expected the dimension"))?;
    let d: usize = tok.parse().ok().filter(|d| *d > 0).ok_or_else(|| {
        ParseError::at(
            1,
            col,
            format!("expected a positive dimension, found '{tok}'"),
        )
    })?;
    if let Some((col, tok)) = head.next() {
        return Err(ParseError::at(
            1,
            col,
            format!("unexpected '{tok}' after the dimension"),
        ));
    }

    let mut rows = Vec::with_capacity(d);
    // token positions, for symmetry diagnostics
    let mut columns = Vec::with_capacity(d);
    for i in 0..d {
        let line_no = i + 2;
        let Some(line) = lines.get(i + 1) else {
            return Err(ParseError::at(
                line_no,
                1,
                format!("expected row {} of {d}", i + 1),
            ));
        };
        let mut row = Vec::with_capacity(d);
        let mut cols = Vec::with_capacity(d);
        for (col, tok) in tokens(line) {
            if row.len() == d {
                return Err(ParseError::at(
                    line_no,
                    col,
                    format!("row has more than {d} entries"),
                ));
            }
            row.push(parse_number(tok, line_no, col)?);
            cols.push(col);
        }
        if row.len() < d {
            let end = line.chars().count() + 1;
            return Err(ParseError::at(
                line_no,
                end,
                format!("row has {} entries, expected {d}", row.len()),
            ));
        }
        rows.push(row);
        columns.push(cols);
    }
    for (k, line) in lines.iter().enumerate().skip(d + 1) {
        if let Some((col, tok)) = tokens(line).next() {
            return Err(ParseError::at(
                k + 1,
                col,
                format!("unexpected '{tok}' after the last row"),
            ));
        }
    }
    if let Some((i, j)) = asymmetry(&rows) {
        return Err(ParseError::at(
            i + 2,
            columns[i][j],
            format!(
                "matrix is not symmetric: entry ({}, {}) = {} but ({}, {}) = {}",
                i + 1,
                j + 1,
                rows[i][j],
                j + 1,
                i + 1,
                rows[j][i]
            ),
        ));
    }
    Ok(SymMatrix::from_rows_with_tol(&rows, SYMMETRY_TOL).expect("checked above"))
}

/// First pair `i > j` (in row order) that breaks the symmetry rule.
fn asymmetry(rows: &[Vec<f64>]) -> Option<(usize, usize)> {
    let d = rows.len();
    (0..d)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .find(|&(i, j)| {
            let (a, b) = (rows[i][j], rows[j][i]);
            (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs())
        })
}

fn parse_json(text: &str) -> Result<SymMatrix, ParseError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ParseError::at(e.line(), e.column(), e.to_string()))?;
    // serde_json values carry no positions; structural errors point at the
    // start of the document.
    let fail = |msg: String| ParseError::at(1, 1, msg);
    let d = v
        .get("dim")
        .and_then(Value::as_u64)
        .filter(|d| *d > 0)
        .ok_or_else(|| fail("\"dim\" must be a positive integer".into()))? as usize;
    let rows = v
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| fail("\"rows\" must be an array".into()))?;
    if rows.len() != d {
        return Err(fail(format!(
            "\"rows\" has {} rows, expected {d}",
            rows.len()
        )));
    }
    let mut parsed = Vec::with_capacity(d);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == d)
            .ok_or_else(|| fail(format!("rows[{i}] must be an array of {d} numbers")))?;
        let values: Option<Vec<f64>> = row.iter().map(Value::as_f64).collect();
        parsed.push(values.ok_or_else(|| fail(format!("rows[{i}] contains a non-number")))?);
    }
    if let Some((i, j)) = asymmetry(&parsed) {
        return Err(fail(format!(
            "matrix is not symmetric: rows[{i}][{j}] = {} but rows[{j}][{i}] = {}",
            parsed[i][j], parsed[j][i]
        )));
    }
    Ok(SymMatrix::from_rows_with_tol(&parsed, SYMMETRY_TOL).expect("checked above"))
}
