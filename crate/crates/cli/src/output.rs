//! CSV assembly and atomic file writes.
//!
//! Files are built fully in memory, written to a dot-prefixed temporary in
//! the target directory, then renamed into place, so a failed run never
//! leaves a truncated CSV behind. Floats are serialized at 17 significant
//! digits (round-trip exact for f64), lines end with LF.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use marglik::textio::float17;

/// In-memory CSV under construction.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Csv {
            buf,
            columns: header.split(',').count(),
        }
    }

    /// Append one row of already-formatted cells.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(
            cells.len(),
            self.columns,
            "row width does not match the header"
        );
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(c);
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Cell formatters: floats get the full 17 digits, counts stay plain.
pub fn f(x: f64) -> String {
    float17(x)
}

pub fn u(x: usize) -> String {
    x.to_string()
}

/// Write `contents` to `dir/name` atomically (temp file + rename).
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    std::fs::write(&tmp, contents)
        .with_context(|| format!("cannot write temporary file {}", tmp.display()))?;
    std::fs::rename(&tmp, &dest)
        .with_context(|| format!("cannot move {} into place", dest.display()))?;
    Ok(dest)
}

/// Render a small key/value table (single-row CSVs read poorly; these files
/// hold one labeled scalar per line).
pub fn scalar_table(pairs: &[(&str, f64)]) -> String {
    let mut out = String::from("quantity,value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{}", float17(*v));
    }
    out
}
