//! Re-running a stored report and checking that the numbers come back.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::report::MetricReport;
use crate::CliError;

/// Relative tolerance for numeric fields when comparing replayed results.
pub const REPLAY_REL_TOL: f64 = 1e-9;

/// Loads `report`, runs its configuration again (writing to `out` if
/// given) and fails with a mismatch if results differ.
pub fn replay(report: &Path, out: Option<PathBuf>) -> Result<MetricReport, CliError> {
    let original = MetricReport::from_json(&std::fs::read_to_string(report)?)?;
    let mut cfg = original.config.clone();
    if out.is_some() {
        cfg.out = out;
    }
    let fresh = crate::run(&cfg)?;
    compare(&original, &fresh)?;
    log::info!("replay of {} matches", report.display());
    Ok(fresh)
}

pub fn compare(a: &MetricReport, b: &MetricReport) -> Result<(), CliError> {
    let pairs = [
        ("results", serde_json::to_value(&a.results)?, serde_json::to_value(&b.results)?),
        ("per_image", serde_json::to_value(&a.per_image)?, serde_json::to_value(&b.per_image)?),
        ("datasets", serde_json::to_value(&a.datasets)?, serde_json::to_value(&b.datasets)?),
    ];
    for (name, x, y) in pairs {
        if let Some(path) = first_difference(&x, &y, name.to_string()) {
            return Err(CliError::ReplayMismatch(path));
        }
    }
    Ok(())
}

fn close(x: f64, y: f64) -> bool {
    x == y || (x - y).abs() <= REPLAY_REL_TOL * x.abs().max(y.abs())
}

/// Path of the first differing leaf, or `None` when the values agree.
pub fn first_difference(a: &Value, b: &Value, path: String) -> Option<String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64()?, y.as_f64()?);
            (!close(x, y)).then(|| format!("{path}: {x} vs {y}"))
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Some(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            x.iter()
                .zip(y)
                .enumerate()
                .find_map(|(i, (p, q))| first_difference(p, q, format!("{path}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            keys.into_iter().find_map(|k| match (x.get(k), y.get(k)) {
                (Some(p), Some(q)) => first_difference(p, q, format!("{path}.{k}")),
                _ => Some(format!("{path}.{k}: present on one side only")),
            })
        }
        _ => (a != b).then(|| format!("{path}: {a} vs {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tolerates_last_digit_noise() {
        let a = json!({"fid": 1.0, "v": [1, 2]});
        let b = json!({"fid": 1.0 + 1e-13, "v": [1, 2]});
        assert_eq!(first_difference(&a, &b, "r".into()), None);
    }

    #[test]
    fn reports_path_of_change() {
        let a = json!({"sweep": [{"fid": 1.0}, {"fid": 2.0}]});
        let b = json!({"sweep": [{"fid": 1.0}, {"fid": 2.1}]});
        let d = first_difference(&a, &b, "r".into()).unwrap();
        assert!(d.starts_with("r.sweep[1].fid"), "{d}");
        let c = json!({"sweep": [{"fid": 1.0}]});
        assert!(first_difference(&a, &c, "r".into()).unwrap().contains("length"));
        assert!(first_difference(&json!({"a": 1}), &json!({"b": 1}), "r".into()).is_some());
    }
}
