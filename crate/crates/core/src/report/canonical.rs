//! Canonical JSON text.
//!
//! Object keys are sorted by byte order, indentation is two spaces, arrays
//! holding only scalars stay on one line, and the document ends with a
//! newline. Integers are written as-is. Reals use the shortest decimal that
//! parses back to the same `f64`, always with a fraction or exponent; the
//! exponent form is used only at magnitudes of 1e9 and above. Equal values
//! therefore always produce identical bytes.

use std::fmt::Write;

use serde_json::{Number, Value};

use crate::{Error, Result};

pub fn to_canonical_string(value: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, value, 0)?;
    out.push('\n');
    Ok(out)
}

pub fn format_real(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Serialize(format!("non-finite number {x}")));
    }
    if x.abs() >= 1e9 {
        return Ok(format!("{x:e}"));
    }
    let mut s = format!("{x}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    Ok(s)
}

fn format_number(n: &Number) -> Result<String> {
    if let Some(i) = n.as_i64() {
        Ok(i.to_string())
    } else if let Some(u) = n.as_u64() {
        Ok(u.to_string())
    } else {
        format_real(n.as_f64().unwrap_or(f64::NAN))
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, value: &Value, level: usize) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&format_number(n)?),
        Value::String(s) => {
            let quoted = serde_json::to_string(s).map_err(|e| Error::Serialize(e.to_string()))?;
            out.push_str(&quoted);
        }
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, level)?;
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1)?;
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                let quoted = serde_json::to_string(key).map_err(|e| Error::Serialize(e.to_string()))?;
                let _ = write!(out, "{quoted}: ");
                write_value(out, &map[key.as_str()], level + 1)?;
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reals_and_integers() {
        assert_eq!(format_real(52.0).unwrap(), "52.0");
        assert_eq!(format_real(0.1).unwrap(), "0.1");
        assert_eq!(format_real(-2.5e-7).unwrap(), "-0.00000025");
        assert_eq!(format_real(123456789.5).unwrap(), "123456789.5");
        assert_eq!(format_real(1.5e9).unwrap(), "1.5e9");
        assert_eq!(format_real(-3e20).unwrap(), "-3e20");
        assert!(format_real(f64::NAN).is_err());
        assert!(format_real(f64::INFINITY).is_err());
    }

    #[test]
    fn layout() {
        let v = json!({"b": [1, 2.5, "x"], "a": {"z": [], "y": {}}, "c": [{"k": null}]});
        let text = to_canonical_string(&v).unwrap();
        let expected = "{\n  \"a\": {\n    \"y\": {},\n    \"z\": []\n  },\n  \"b\": [1, 2.5, \"x\"],\n  \"c\": [\n    {\n      \"k\": null\n    }\n  ]\n}\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn reparses_to_same_value() {
        let v = json!({"x": [0.1, 1e-300, 1.7976931348623157e308, -0.0, 12], "s": "é\n\"q\""});
        let text = to_canonical_string(&v).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(to_canonical_string(&back).unwrap(), text);
        assert_eq!(back["x"][2].as_f64(), Some(f64::MAX));
        assert_eq!(back["x"][1].as_f64(), Some(1e-300));
    }
}
