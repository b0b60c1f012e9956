//! Canonical text form used for every hashed or replayed document.
//!
//! The canonical form is compact JSON with object keys sorted, integers
//! written verbatim and every floating-point number written with exactly six
//! fractional digits. Two documents with the same semantic content always
//! produce the same bytes, regardless of key order or how their numbers were
//! spelled on input.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Number of fractional digits kept for real-valued fields.
pub const DECIMALS: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("document is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("non-finite number cannot be written canonically")]
    NonFinite,
}

/// Formats a real with the fixed number of fractional digits. Negative zero
/// is written as positive zero.
pub fn format_decimal(x: f64) -> String {
    let s = format!("{:.*}", DECIMALS, x);
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Rounds a real onto the canonical decimal grid, so that writing and reading
/// it back is lossless.
pub fn quantize(x: f64) -> f64 {
    format_decimal(x).parse().expect("formatted decimal parses")
}

fn write_value(out: &mut String, value: &Value) -> Result<(), CanonicalError> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().ok_or(CanonicalError::NonFinite)?;
                if !x.is_finite() {
                    return Err(CanonicalError::NonFinite);
                }
                out.push_str(&format_decimal(x));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key)?);
                out.push(':');
                write_value(out, &map[key])?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Canonical text of an already-built JSON value.
pub fn value_to_string(value: &Value) -> Result<String, CanonicalError> {
    let mut out = String::new();
    write_value(&mut out, value)?;
    Ok(out)
}

/// Canonical bytes of any serializable value.
pub fn to_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let v = serde_json::to_value(value)?;
    Ok(value_to_string(&v)?.into_bytes())
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String, CanonicalError> {
    let v = serde_json::to_value(value)?;
    value_to_string(&v)
}

pub fn from_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over the canonical bytes of a value.
pub fn digest<T: Serialize>(value: &T) -> Result<String, CanonicalError> {
    Ok(sha256_hex(&to_bytes(value)?))
}

/// Serde helpers that carry 64-bit seeds as decimal strings, so that
/// consumers with 53-bit number types read them losslessly.
pub mod seed_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&seed.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_whitespace_dropped() {
        let v: Value = serde_json::from_str(r#"{ "b": 1, "a": {"z": true, "y": null} }"#).unwrap();
        assert_eq!(value_to_string(&v).unwrap(), r#"{"a":{"y":null,"z":true},"b":1}"#);
    }

    #[test]
    fn floats_use_six_digits() {
        assert_eq!(value_to_string(&json!(-1.9)).unwrap(), "-1.900000");
        assert_eq!(value_to_string(&json!(120.0)).unwrap(), "120.000000");
        assert_eq!(value_to_string(&json!(-0.0)).unwrap(), "0.000000");
        assert_eq!(format_decimal(-0.0000001), "0.000000");
        assert_eq!(value_to_string(&json!(7)).unwrap(), "7");
    }

    #[test]
    fn spelled_differently_same_bytes() {
        let a: Value = serde_json::from_str(r#"{"x": -1.9}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"x": -1.90}"#).unwrap();
        assert_eq!(value_to_string(&a).unwrap(), value_to_string(&b).unwrap());
    }

    #[test]
    fn quantize_is_a_fixed_point() {
        for x in [0.1234567, -5.2, 1.0 / 3.0, 440.0, 1e-9] {
            let q = quantize(x);
            assert_eq!(quantize(q), q);
            assert_eq!(format_decimal(q).parse::<f64>().unwrap(), q);
        }
    }
}
