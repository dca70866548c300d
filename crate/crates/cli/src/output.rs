//! Deterministic text artifacts: CSVs, and the run manifest that makes every
//! output reproducible from its own recorded configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::Resolved;

/// 17 significant digits — enough to round-trip any f64 exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A finished run: named files, written together after the computation
/// succeeds so failures never leave partial artifacts behind.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn push(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    pub fn write_all(&self, outdir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(outdir)?;
        for (name, content) in &self.files {
            fs::write(outdir.join(name), content)?;
        }
        Ok(())
    }
}

/// Manifest text: a `[meta]` block (tool/core versions, subcommand, seed,
/// content hash of the resolved configuration) followed by the resolved
/// configuration itself, so the file re-runs as `--config manifest.txt`.
pub fn manifest(resolved: &Resolved) -> String {
    let canonical = resolved.canonical();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let hash = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in hash {
        let _ = write!(hex, "{byte:02x}");
    }
    let seed = resolved.values.get("seed").map(String::as_str).unwrap_or("0");
    let mut out = String::new();
    let _ = writeln!(out, "[meta]");
    let _ = writeln!(out, "tool = rydlat {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "core = rydlat-core {}", rydlat_core::VERSION);
    let _ = writeln!(out, "subcommand = {}", resolved.cmd);
    let _ = writeln!(out, "seed = {seed}");
    let _ = writeln!(out, "config_sha256 = {hex}");
    let _ = writeln!(out);
    out.push_str(&canonical);
    out
}

/// Build a CSV from a header and rows of preformatted cells.
pub fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
