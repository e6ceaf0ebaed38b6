//! JSON envelope, float canonicalization and output paths.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

/// Significant digits kept in every float of the JSON output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_VAR: &str = "PHASEKIT_OUTPUT_DIR";

/// Rounds `v` to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Rounds every float in place. Integers are left alone and non-finite values,
/// which cannot be represented in JSON, are already `null`.
pub fn canonicalize(value: &mut Value) {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(f) = n.as_f64() {
                *value = serde_json::Number::from_f64(round_sig(f)).map(Value::Number).unwrap_or(Value::Null);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

pub fn envelope(command: &str, params: Value, result: Value) -> String {
    let mut root = Map::new();
    root.insert("command".into(), Value::String(command.into()));
    root.insert("params".into(), params);
    root.insert("result".into(), result);
    let mut v = Value::Object(root);
    canonicalize(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Joins relative paths onto `PHASEKIT_OUTPUT_DIR` when it is set.
pub fn resolve(path: &Path) -> PathBuf {
    match env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let target = resolve(path);
    if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::compute(format!("{}: {e}", parent.display())))?;
    }
    fs::write(&target, text).map_err(|e| CliError::compute(format!("{}: {e}", target.display())))
}
