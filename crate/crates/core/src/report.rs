//! Canonical JSON output: object keys sorted, floats printed with 17
//! significant digits in exponent form, non-finite floats as `null`.
//! Identical values always produce identical bytes.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// `{:.16e}` formatting, or `NaN` / `inf` spelled out for CSV.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Numerical(format!("serialization: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&format!("{f:.16e}"));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Arrays of scalars stay on one line (matrix rows, series).
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (k, i) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(i, level, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, i) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(i, level + 1, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&map[key.as_str()], level + 1, out);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn sorted_and_fixed_format() {
        let mut m = HashMap::new();
        m.insert("zeta", 0.1);
        m.insert("alpha", f64::NAN);
        m.insert("mid", 2.0);
        let s = to_canonical_json(&m).unwrap();
        assert_eq!(s, "{\n  \"alpha\": null,\n  \"mid\": 2.0000000000000000e0,\n  \"zeta\": 1.0000000000000001e-1\n}\n");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["zeta"].as_f64(), Some(0.1));
    }

    #[test]
    fn nested_arrays() {
        let v = serde_json::json!({"m": [[1.0, 2.5], [3.0, 4.0]], "n": 3, "e": []});
        let s = to_canonical_json(&v).unwrap();
        assert!(s.contains("[1.0000000000000000e0, 2.5000000000000000e0]"));
        assert!(s.contains("\"n\": 3"));
        assert_eq!(serde_json::from_str::<Value>(&s).unwrap()["m"][1][0], 3.0);
    }
}
