//! CSV assembly with provenance metadata.
//!
//! Every command builds its whole table in memory and writes it in one
//! pass, so a failure partway through a sweep never leaves a truncated
//! file behind. The table starts with `#`-prefixed metadata lines (the
//! scenario hash, the command line, the seed) so any CSV can be traced
//! back to the exact configuration that produced it, followed by a
//! conventional header row and the data rows.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, which
//! is deterministic and lossless; byte-identical scenarios therefore give
//! byte-identical files regardless of how many worker threads computed
//! the rows.

use std::io::Write;
use std::path::Path;

/// An in-memory CSV table with `#` metadata lines.
#[derive(Debug, Clone)]
pub struct Table {
    metadata: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// Starts a table with the given column names.
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a `# key = value` provenance line.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    /// Appends one data row; the cell count must match the header.
    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.header.len(),
            "row width must match the header"
        );
        debug_assert!(
            cells.iter().all(|c| !c.contains(',') && !c.contains('\n')),
            "cells must not need CSV quoting"
        );
        self.rows.push(cells);
    }

    /// Renders the complete file contents.
    pub fn render(&self) -> String {
        let mut text = String::new();
        for (key, value) in &self.metadata {
            text.push_str(&format!("# {key} = {value}\n"));
        }
        text.push_str(&self.header.join(","));
        text.push('\n');
        for row in &self.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    }

    /// Writes to the path, or to stdout when no path is given.
    pub fn write(&self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(path) => std::fs::write(path, self.render()),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(self.render().as_bytes())
            }
        }
    }
}

/// Shortest lossless decimal rendering of a float.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}
