//! Artifact writers: atomic file output, CSV traces, and JSON reports.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Writes bytes to `path` atomically: temp file in the same directory,
/// then rename. Creates missing parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes a JSON value with stable (lexicographic) key order, pretty
/// printed and newline terminated.
pub fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serializes");
    text.push('\n');
    text.into_bytes()
}

/// Renders a trace CSV with the standard header. All columns must have the
/// same length; `norm_drift` is the final drift, repeated on every row.
pub fn trace_csv(
    times: &[f64],
    mean_n: &[f64],
    p_gg: &[f64],
    p_ee: &[f64],
    norm_drift: f64,
) -> Vec<u8> {
    let mut out = String::from("t_s,mean_n,P_gg,P_ee,norm_drift\n");
    for k in 0..times.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            times[k], mean_n[k], p_gg[k], p_ee[k], norm_drift
        ));
    }
    out.into_bytes()
}

/// Converts a float slice to a JSON array value.
pub fn floats(values: &[f64]) -> serde_json::Value {
    serde_json::Value::from(values.to_vec())
}
