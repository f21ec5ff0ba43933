//! CSV emission with the configuration echoed as '#' comment lines.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::{CliError, CliResult};

/// One experiment's tabular output plus provenance.
pub struct Report {
    pub command: &'static str,
    pub config_toml: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// One-time setup timings, reported separately from the per-draw columns.
    pub setup_notes: Vec<String>,
}

impl Report {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> CliResult<Self> {
        let config_toml = toml::to_string(config)
            .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
        Ok(Self {
            command,
            config_toml,
            columns: Vec::new(),
            rows: Vec::new(),
            setup_notes: Vec::new(),
        })
    }

    pub fn write_to(&self, out: &mut impl Write) -> CliResult<()> {
        writeln!(out, "# gridgp {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        for line in self.config_toml.lines() {
            writeln!(out, "# {line}")?;
        }
        for note in &self.setup_notes {
            writeln!(out, "# {note}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write(&self, path: Option<&Path>) -> CliResult<()> {
        match path {
            Some(p) => {
                let mut f = std::fs::File::create(p)?;
                self.write_to(&mut f)?;
                f.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                self.write_to(&mut lock)?;
            }
        }
        Ok(())
    }
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn fmt_seconds(v: f64) -> String {
    format!("{v:.3e}")
}
