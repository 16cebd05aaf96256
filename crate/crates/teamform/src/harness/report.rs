//! CSV and run-manifest output. Floats are written with Rust's shortest
//! round-trip formatting, so a rerun with the same config and seed produces
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

pub fn write_csv<P: AsRef<Path>>(path: P, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Record the exact inputs of a run next to its outputs. No timestamps: the
/// manifest must be reproducible byte for byte as well.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_toml: &str,
    outputs: &[PathBuf],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("command = {command:?}\n"));
    text.push_str("outputs = [");
    for (i, o) in outputs.iter().enumerate() {
        if i > 0 {
            text.push_str(", ");
        }
        text.push_str(&format!("{:?}", o.file_name().unwrap_or_default()));
    }
    text.push_str("]\n\n[config]\n");
    // embed the resolved config as a nested table
    for line in config_toml.lines() {
        if line.starts_with('[') {
            text.push_str(&format!("[config.{}\n", &line[1..]));
        } else {
            text.push_str(line);
            text.push('\n');
        }
    }
    fs::write(out_dir.join("manifest.toml"), text)?;
    Ok(())
}
