//! Report and point-cloud files.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::LabError;

pub const REPORT_FILE: &str = "report.json";

/// Two-column CSV with a header. Values use a fixed exponent format so that
/// identical runs give identical bytes.
pub fn write_csv(path: &Path, pts: &[[f64; 2]]) -> Result<(), LabError> {
    let mut s = String::with_capacity(32 * pts.len() + 4);
    s.push_str("x,y\n");
    for p in pts {
        let _ = writeln!(s, "{:.15e},{:.15e}", p[0], p[1]);
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<[f64; 2]>, LabError> {
    let text = std::fs::read_to_string(path).map_err(|_| LabError::MissingArtifact(path.display().to_string()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || LabError::MissingArtifact(format!("{}: malformed line {}", path.display(), k + 1));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        out.push([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?]);
    }
    Ok(out)
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), LabError> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Value, LabError> {
    let text = std::fs::read_to_string(path).map_err(|_| LabError::MissingArtifact(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| LabError::MissingArtifact(format!("{}: {e}", path.display())))
}

/// A complex number as `[re, im]`.
pub fn c(z: hedgehog_core::C64) -> Value {
    serde_json::json!([z.re, z.im])
}

/// Non-finite floats become strings instead of `null`.
pub fn f(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(x.to_string())
    }
}
