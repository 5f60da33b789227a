//! Artifact emission. JSON floats use the shortest round-trip form; CSV
//! numbers are written with 17 significant digits. Neither format carries
//! timestamps or thread counts, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Reproducibility header embedded in every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

/// A JSON artifact: the meta header next to the command's payload.
#[derive(Serialize)]
struct Document<'a, P: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    payload: &'a P,
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<P: Serialize>(dir: &Path, name: &str, meta: &Meta, payload: &P) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&Document { meta, payload })
        .map_err(|e| CliError::Io(format!("serializing {name}: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes `rows` under `header`, appending `config_sha256` and `seed`
/// columns so the table identifies its run on its own.
pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &Meta,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
    let seed = meta.seed.to_string();
    let mut full_header: Vec<&str> = header.to_vec();
    full_header.extend(["config_sha256", "seed"]);
    w.write_record(&full_header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        let mut rec: Vec<&str> = row.iter().map(String::as_str).collect();
        rec.push(&meta.config_sha256);
        rec.push(&seed);
        w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}
