//! Deterministic CSV and report writing. Every file opens with the resolved
//! config hash so results stay traceable to their inputs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliResult;

/// A CSV table with a `# config_sha256 = …` comment header.
pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn new(config_hash: &str, seed: u64, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# config_sha256 = {config_hash}");
        let _ = writeln!(text, "# seed = {seed}");
        let _ = writeln!(text, "{}", columns.join(","));
        CsvTable { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Fixed-precision cell formatting keeps output byte-stable.
pub fn cell(value: f64) -> String {
    if value == 0.0 {
        "0".into()
    } else {
        format!("{value:.9e}")
    }
}

/// Micrometer-scaled cell for height columns.
pub fn cell_um(value_m: f64) -> String {
    format!("{:.3}", value_m * 1e6)
}
