//! Matrix Market dense-array and JSON matrix files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{FieldTag, Matrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Json,
}

impl MatrixFormat {
    /// `.json` files are JSON, everything else Matrix Market.
    pub fn from_path(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => MatrixFormat::Json,
            _ => MatrixFormat::MatrixMarket,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mm" | "mtx" | "matrixmarket" => Ok(MatrixFormat::MatrixMarket),
            "json" => Ok(MatrixFormat::Json),
            other => Err(format!(
                "unknown matrix format '{other}' (expected mm or json)"
            )),
        }
    }
}

pub fn read_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    match format {
        MatrixFormat::MatrixMarket => parse_matrix_market(&text),
        MatrixFormat::Json => parse_json(&text),
    }
}

pub fn write_matrix(m: &Matrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let text = match format {
        MatrixFormat::MatrixMarket => format_matrix_market(m),
        MatrixFormat::Json => format_json(m)?,
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_json(text: &str) -> Result<Matrix> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
}

pub fn format_json(m: &Matrix) -> Result<String> {
    let mut s = serde_json::to_string_pretty(m)?;
    s.push('\n');
    Ok(s)
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - line.as_ptr() as usize + 1, tok))
}

fn parse_number<T: FromStr>(tok: &str, line: usize, col: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, col, format!("invalid {what} '{tok}'")))
}

pub fn parse_matrix_market(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "empty file"))?;
    let head: Vec<(usize, &str)> = tokens(header).collect();
    if head.len() != 5 || !head[0].1.eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(Error::parse(
            1,
            1,
            "expected header '%%MatrixMarket matrix array <real|complex> general'",
        ));
    }
    let expect = |idx: usize, want: &str| -> Result<()> {
        let (col, tok) = head[idx];
        if tok.eq_ignore_ascii_case(want) {
            Ok(())
        } else {
            Err(Error::parse(
                1,
                col,
                format!("expected '{want}', found '{tok}'"),
            ))
        }
    };
    expect(1, "matrix")?;
    expect(2, "array")?;
    let (field_col, field_tok) = head[3];
    let field = match field_tok.to_ascii_lowercase().as_str() {
        "real" | "integer" => FieldTag::Real,
        "complex" => FieldTag::Complex,
        _ => {
            return Err(Error::parse(
                1,
                field_col,
                format!("unsupported field '{field_tok}' (expected real or complex)"),
            ))
        }
    };
    expect(4, "general")?;

    let mut content = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = content
        .next()
        .ok_or_else(|| Error::parse(2, 1, "missing size line"))?;
    let dims: Vec<(usize, &str)> = tokens(size).collect();
    if dims.len() != 2 {
        return Err(Error::parse(
            size_line,
            1,
            "size line must contain exactly 'rows cols'",
        ));
    }
    let rows: usize = parse_number(dims[0].1, size_line, dims[0].0, "row count")?;
    let cols: usize = parse_number(dims[1].1, size_line, dims[1].0, "column count")?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(
            size_line,
            1,
            "matrix dimensions must be positive",
        ));
    }

    let per_entry = if field == FieldTag::Complex { 2 } else { 1 };
    let total = rows * cols;
    let mut values: Vec<C64> = Vec::with_capacity(total);
    let mut last_line = size_line;
    for (ln, line) in content {
        last_line = ln;
        let toks: Vec<(usize, &str)> = tokens(line).collect();
        if values.len() == total {
            return Err(Error::parse(
                ln,
                toks[0].0,
                format!("more entries than the {rows}x{cols} header declares"),
            ));
        }
        if toks.len() != per_entry {
            return Err(Error::parse(
                ln,
                toks[0].0,
                format!(
                    "expected {per_entry} value(s) per {field} entry, found {}",
                    toks.len()
                ),
            ));
        }
        let re: f64 = parse_number(toks[0].1, ln, toks[0].0, "value")?;
        let im: f64 = if per_entry == 2 {
            parse_number(toks[1].1, ln, toks[1].0, "value")?
        } else {
            0.0
        };
        values.push(C64::new(re, im));
    }
    if values.len() != total {
        return Err(Error::parse(
            last_line + 1,
            1,
            format!(
                "expected {total} entries for a {rows}x{cols} matrix, found {}",
                values.len()
            ),
        ));
    }
    // Array format lists entries column by column.
    Ok(Matrix::from_dmatrix(
        DMatrix::from_column_slice(rows, cols, &values),
        field,
    ))
}

pub fn format_matrix_market(m: &Matrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "%%MatrixMarket matrix array {} general", m.field());
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for z in m.as_dmatrix().iter() {
        match m.field() {
            FieldTag::Real => {
                let _ = writeln!(out, "{:.16e}", z.re);
            }
            FieldTag::Complex => {
                let _ = writeln!(out, "{:.16e} {:.16e}", z.re, z.im);
            }
        }
    }
    out
}
