//! Flattening of JSON documents into `path,value` CSV rows.

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                walk(&join(k), child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                walk(&join(&i.to_string()), child, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Leaf values of `value` keyed by dotted path, in key order.
pub fn flatten<T: Serialize>(value: &T) -> Result<Vec<(String, String)>, CliError> {
    let json = serde_json::to_value(value).map_err(CliError::numerical)?;
    let mut out = Vec::new();
    walk("", &json, &mut out);
    Ok(out)
}

pub fn to_csv<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["path", "value"]).map_err(CliError::data)?;
    for (path, value) in flatten(value)? {
        w.write_record([path, value]).map_err(CliError::data)?;
    }
    let bytes = w.into_inner().map_err(CliError::data)?;
    String::from_utf8(bytes).map_err(CliError::data)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(CliError::numerical)?;
    s.push('\n');
    Ok(s)
}

/// `x` to six significant digits for human-readable output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let v = serde_json::json!({"a": {"b": [1.5, null]}, "c": "x,y", "d": true});
        let rows = flatten(&v).unwrap();
        assert_eq!(
            rows,
            vec![
                ("a.b.0".into(), "1.5".into()),
                ("a.b.1".into(), "".into()),
                ("c".into(), "x,y".into()),
                ("d".into(), "true".into()),
            ]
        );
        assert!(to_csv(&v).unwrap().contains("c,\"x,y\"\n"));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.302355203), "0.302355");
        assert_eq!(sig6(181.79171), "181.792");
        assert_eq!(sig6(-1.70492), "-1.70492");
        assert_eq!(sig6(1234567.0), "1234567");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
    }
}
