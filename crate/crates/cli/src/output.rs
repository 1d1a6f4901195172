//! Run directories and atomic, reproducible file output.
//!
//! Every file is written to a temporary name in the target directory and
//! renamed into place, so interrupted runs never leave partial artifacts.
//! Floats are printed with 17 significant digits, which round-trips f64
//! exactly; rerunning an identical configuration reproduces every byte.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CmdError;

/// `run_<UTC stamp>_<config hash>` under the outputs directory, with a
/// numeric suffix if the name is already taken.
pub fn create_run_dir(base: &Path, config_hash: &str) -> Result<PathBuf, CmdError> {
    std::fs::create_dir_all(base)
        .map_err(|e| CmdError::Config(format!("cannot create {}: {e}", base.display())))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let mut name = format!("run_{stamp}_{config_hash}");
    let mut suffix = 1;
    loop {
        let dir = base.join(&name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                suffix += 1;
                name = format!("run_{stamp}_{config_hash}-{suffix}");
            }
            Err(e) => {
                return Err(CmdError::Config(format!(
                    "cannot create run directory {}: {e}",
                    dir.display()
                )))
            }
        }
    }
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CmdError> {
    let io_err = |e: std::io::Error| {
        CmdError::Config(format!("cannot write {name} in {}: {e}", dir.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(dir.join(name))
        .map_err(|e| CmdError::Config(format!("cannot persist {name}: {e}")))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CmdError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// 17 significant digits; round-trip exact for f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Assemble a CSV body from a header and row-major float data.
pub fn csv_body(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
