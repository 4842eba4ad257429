//! Report emission: a stable JSON envelope around each command's result.
//!
//! Every report carries the artifact version, the command name, and the
//! fully resolved configuration, so a report file alone suffices to
//! rerun the command. Keys serialize in sorted order and nothing
//! time- or host-dependent is written, making reports byte-identical
//! across reruns with the same seed and inputs.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::dataset_io::{CliError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serializes to a `serde_json::Value` with all maps sorted.
fn to_value(data: &impl Serialize) -> Result<Value> {
    serde_json::to_value(data)
        .map_err(|e| CliError::data("report", format!("serialization failed: {e}")))
}

/// Builds the envelope and writes it as pretty JSON with a trailing
/// newline.
pub fn write_report(
    path: &Path,
    command: &str,
    config: &impl Serialize,
    result: &impl Serialize,
) -> Result<()> {
    let mut envelope = serde_json::Map::new();
    envelope.insert("artifact_version".into(), ARTIFACT_VERSION.into());
    envelope.insert("command".into(), command.into());
    envelope.insert("config".into(), to_value(config)?);
    envelope.insert("result".into(), to_value(result)?);
    let text = serde_json::to_string_pretty(&Value::Object(envelope))
        .map_err(|e| CliError::data("report", e.to_string()))?;
    std::fs::write(path, format!("{text}\n"))
        .map_err(|e| CliError::data(path.display().to_string(), e.to_string()))?;
    Ok(())
}

/// Writes a headered CSV table; each row formats floats with Rust's
/// shortest round-trip notation.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::data(path.display().to_string(), e.to_string()))?;
    Ok(())
}
