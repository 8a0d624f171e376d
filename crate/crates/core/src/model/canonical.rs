//! Canonical JSON rendering: sorted keys, two-space indent, floats rounded
//! to nine significant digits. Two values that compare equal after rounding
//! render to identical bytes.

use serde_json::Value;
use std::fmt::Write;

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds `v` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest decimal text for `v` after nine-digit rounding.
pub fn format_f64(v: f64) -> String {
    let r = round_sig(v);
    // Display never emits exponents, so the result is always valid JSON.
    format!("{r}")
}

pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                write!(out, "{n}").unwrap();
            } else {
                out.push_str(&format_f64(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(|v| v.is_number()) {
                // Coordinate tuples stay on one line.
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, depth + 1);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    indent(out, depth + 1);
                    write_value(out, v, depth + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(out, depth);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[k.as_str()], depth + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_nine_significant_digits() {
        assert_eq!(format_f64(688.9999999999999), "689");
        assert_eq!(format_f64(0.1 + 0.2), "0.3");
        assert_eq!(format_f64(1.0 / 3.0), "0.333333333");
        assert_eq!(format_f64(-0.0), "0");
        assert_eq!(format_f64(123456789012.0), "123456789000");
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_canonical_string(&json!({"b": 1, "a": [1.5, 2], "c": []}));
        assert_eq!(s, "{\n  \"a\": [1.5, 2],\n  \"b\": 1,\n  \"c\": []\n}\n");
    }
}
