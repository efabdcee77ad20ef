//! Canonical tabular text format shared by every file-producing component.
//!
//! Layout:
//!
//! ```text
//! # giglite-table v1
//! node_type<TAB>node_id<TAB>age<TAB>country
//! user<TAB>0<TAB>23<TAB>US
//! ```
//!
//! Line 1 is the fixed version line, line 2 the tab-separated header, then
//! one row per line. Cells must not contain tabs or newlines; an empty cell
//! is a missing value. Floats are written in shortest round-trip form, so a
//! table written by this module reads back bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::TableError;

pub const TABLE_VERSION_LINE: &str = "# giglite-table v1";

/// A parsed table: named columns and string cells.
///
/// Cells stay as raw strings at this layer; typed parsing (`f32`, `u64`)
/// happens through the helpers below so error messages carry row/column
/// context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(columns: Vec<String>) -> Self {
        RawTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn parse(text: &str) -> Result<RawTable, TableError> {
        let mut lines = text.split_inclusive('\n');
        let version = lines.next().ok_or_else(|| TableError::Format {
            line: 1,
            msg: "empty file".to_string(),
        })?;
        if version.trim_end_matches('\n') != TABLE_VERSION_LINE {
            return Err(TableError::Format {
                line: 1,
                msg: format!("expected `{TABLE_VERSION_LINE}`"),
            });
        }
        let header = lines.next().ok_or_else(|| TableError::Format {
            line: 2,
            msg: "missing header row".to_string(),
        })?;
        if !header.ends_with('\n') {
            return Err(TableError::Format {
                line: 2,
                msg: "truncated header (no trailing newline)".to_string(),
            });
        }
        let columns: Vec<String> = header
            .trim_end_matches('\n')
            .split('\t')
            .map(str::to_string)
            .collect();
        if columns.iter().any(|c| c.is_empty()) {
            return Err(TableError::Format {
                line: 2,
                msg: "empty column name".to_string(),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 3;
            if !line.ends_with('\n') {
                return Err(TableError::Format {
                    line: line_no,
                    msg: "truncated row (no trailing newline)".to_string(),
                });
            }
            let cells: Vec<String> = line
                .trim_end_matches('\n')
                .split('\t')
                .map(str::to_string)
                .collect();
            if cells.len() != columns.len() {
                return Err(TableError::Format {
                    line: line_no,
                    msg: format!("expected {} cells, found {}", columns.len(), cells.len()),
                });
            }
            rows.push(cells);
        }
        Ok(RawTable { columns, rows })
    }

    pub fn read(path: &Path) -> Result<RawTable, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        RawTable::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(TABLE_VERSION_LINE);
        out.push('\n');
        out.push_str(&self.columns.join("\t"));
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_text()).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Rejects cells that would corrupt the format on write.
    pub fn validate_cells(&self) -> Result<(), TableError> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.contains('\t') || cell.contains('\n') {
                    return Err(TableError::Cell {
                        line: r + 3,
                        column: self.columns[c].clone(),
                        msg: "cell contains tab or newline".to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Shortest round-trip decimal form of an `f32`. Non-finite values are
/// rejected everywhere upstream, so this only sees finite inputs.
pub fn fmt_f32(v: f32) -> String {
    debug_assert!(v.is_finite());
    ryu::Buffer::new().format_finite(v).to_string()
}

/// Shortest round-trip decimal form of an `f64`.
pub fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite());
    ryu::Buffer::new().format_finite(v).to_string()
}

pub fn parse_f32(cell: &str, line: usize, column: &str) -> Result<f32, TableError> {
    let v: f32 = cell.parse().map_err(|_| TableError::Cell {
        line,
        column: column.to_string(),
        msg: format!("not a float: `{cell}`"),
    })?;
    if !v.is_finite() {
        return Err(TableError::Cell {
            line,
            column: column.to_string(),
            msg: format!("non-finite float: `{cell}`"),
        });
    }
    Ok(v)
}

pub fn parse_u64(cell: &str, line: usize, column: &str) -> Result<u64, TableError> {
    cell.parse().map_err(|_| TableError::Cell {
        line,
        column: column.to_string(),
        msg: format!("not an unsigned integer: `{cell}`"),
    })
}

pub fn parse_i64(cell: &str, line: usize, column: &str) -> Result<i64, TableError> {
    cell.parse().map_err(|_| TableError::Cell {
        line,
        column: column.to_string(),
        msg: format!("not an integer: `{cell}`"),
    })
}
