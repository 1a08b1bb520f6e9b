//! Deterministic file output helpers.

use anyhow::{Context, Result};
use std::fs;
use std::path::Path;

/// 17 significant digits: round-trip exact for f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Minimal CSV writer: header row plus numeric rows, newline separated.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            buf: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[String]) {
        assert_eq!(values.len(), self.columns);
        self.buf.push_str(&values.join(","));
        self.buf.push('\n');
    }

    pub fn number_row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt(v)).collect();
        self.row(&cells);
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
