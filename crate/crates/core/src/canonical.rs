//! Canonical JSON: sorted object keys, floats written with 17 significant
//! digits, no insignificant whitespace. Digests are SHA-256 of this form.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{GeoError, Result};

pub fn to_value<T: Serialize + ?Sized>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| GeoError::Config(format!("cannot serialize: {e}")))
}

/// Canonical text of any serializable value.
pub fn to_canonical<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut out = String::new();
    write_value(&to_value(v)?, &mut out);
    Ok(out)
}

/// Hex SHA-256 of the canonical text.
pub fn digest<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(to_canonical(v)?.as_bytes())))
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().expect("f64 number");
                out.push_str(&format!("{f:.16e}"));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&m[k], out);
            }
            out.push('}');
        }
    }
}
