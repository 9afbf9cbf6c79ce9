//! Plain-text integer matrix format shared by every tool in the crate.
//!
//! A file holds one matrix: a header line `R C`, then `R` lines of `C`
//! space-separated base-10 integers.  Vectors are 1xC matrices.  Files are
//! ASCII with LF line endings; blank lines after the last row are ignored.

use std::fs;
use std::path::Path;

use crate::error::{FiberError, Result};

/// A parsed matrix: `rows * cols` entries in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<i64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> FiberError {
    FiberError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses matrix text.  Line numbers in errors are 1-based.
pub fn parse_matrix(text: &str) -> Result<TextMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line"))?;
    let header_fields: Vec<&str> = header.split_whitespace().collect();
    if header_fields.len() != 2 {
        return Err(parse_err(
            1,
            format!(
                "header must be two integers `R C`, got {} fields",
                header_fields.len()
            ),
        ));
    }
    let rows: usize = header_fields[0]
        .parse()
        .map_err(|_| parse_err(1, format!("bad row count {:?}", header_fields[0])))?;
    let cols: usize = header_fields[1]
        .parse()
        .map_err(|_| parse_err(1, format!("bad column count {:?}", header_fields[1])))?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(1, "matrix dimensions must be positive"));
    }

    let mut entries = Vec::with_capacity(rows * cols);
    let mut filled = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if filled == rows {
            return Err(parse_err(
                lineno,
                format!("unexpected extra row; header declared {rows}"),
            ));
        }
        let mut count = 0usize;
        for field in line.split_whitespace() {
            let value: i64 = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad integer {field:?}")))?;
            entries.push(value);
            count += 1;
        }
        if count != cols {
            return Err(parse_err(
                lineno,
                format!("expected {cols} entries in row, got {count}"),
            ));
        }
        filled += 1;
    }
    if filled != rows {
        return Err(parse_err(
            text.lines().count(),
            format!("expected {rows} rows, got {filled}"),
        ));
    }
    Ok(TextMatrix {
        rows,
        cols,
        entries,
    })
}

/// Renders a matrix in the shared format, LF-terminated.
pub fn format_matrix(rows: usize, cols: usize, entries: &[i64]) -> String {
    debug_assert_eq!(rows * cols, entries.len());
    let mut out = format!("{rows} {cols}\n");
    for r in 0..rows {
        let row = &entries[r * cols..(r + 1) * cols];
        let rendered: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&rendered.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<TextMatrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text)
}

pub fn write_matrix(path: &Path, rows: usize, cols: usize, entries: &[i64]) -> Result<()> {
    fs::write(path, format_matrix(rows, cols, entries))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_a_small_matrix() {
        let text = format_matrix(2, 3, &[1, -2, 3, 0, 5, -6]);
        assert_eq!(text, "2 3\n1 -2 3\n0 5 -6\n");
        let parsed = parse_matrix(&text).unwrap();
        assert_eq!(parsed.rows, 2);
        assert_eq!(parsed.cols, 3);
        assert_eq!(parsed.entries, vec![1, -2, 3, 0, 5, -6]);
    }

    #[test]
    fn tolerates_trailing_blank_lines() {
        let parsed = parse_matrix("1 2\n4 7\n\n\n").unwrap();
        assert_eq!(parsed.entries, vec![4, 7]);
    }

    #[test]
    fn rejects_bad_header() {
        let err = parse_matrix("2\n1 2\n").unwrap_err();
        assert!(matches!(err, FiberError::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_short_row_with_line_number() {
        let err = parse_matrix("2 3\n1 2 3\n4 5\n").unwrap_err();
        match err {
            FiberError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_integer_entries() {
        let err = parse_matrix("1 2\n1 x\n").unwrap_err();
        assert!(matches!(err, FiberError::Parse { line: 2, .. }));
    }

    #[test]
    fn rejects_missing_rows() {
        assert!(parse_matrix("3 1\n1\n2\n").is_err());
    }
}
