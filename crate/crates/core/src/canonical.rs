//! Canonical JSON encoding used for hashing and for the on-disk ledger lines.
//!
//! Rules: object keys sorted by code point, no insignificant whitespace,
//! integers printed without exponent, non-integers in shortest round-trip
//! form, strings with the minimal JSON escape set.

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("value cannot be canonicalized: {0}")]
    NonCanonicalizable(String),
}

/// Encodes `value` as canonical JSON bytes.
pub fn canonical_serialize(value: &Value) -> Result<Vec<u8>, CanonicalError> {
    let mut out = Vec::with_capacity(128);
    write_value(value, &mut out)?;
    Ok(out)
}

/// Same as [`canonical_serialize`] but returns a `String`.
pub fn canonical_string(value: &Value) -> Result<String, CanonicalError> {
    let bytes = canonical_serialize(value)?;
    // write_value only ever emits UTF-8
    Ok(String::from_utf8(bytes).expect("canonical JSON is UTF-8"))
}

/// Canonical encoding of any serializable type.
///
/// Maps with non-string keys are rejected. Note that serde_json already
/// lowers non-finite floats to `null` during `to_value`; build numbers with
/// [`number_from_f64`] where that matters.
pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let v = serde_json::to_value(value)
        .map_err(|e| CanonicalError::NonCanonicalizable(e.to_string()))?;
    canonical_serialize(&v)
}

/// Builds a JSON number, refusing NaN and infinities.
pub fn number_from_f64(f: f64) -> Result<Value, CanonicalError> {
    serde_json::Number::from_f64(f)
        .map(Value::Number)
        .ok_or_else(|| CanonicalError::NonCanonicalizable(format!("non-finite number {f}")))
}

fn write_value(value: &Value, out: &mut Vec<u8>) -> Result<(), CanonicalError> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else {
                let f = n
                    .as_f64()
                    .ok_or_else(|| CanonicalError::NonCanonicalizable(format!("number {n}")))?;
                if !f.is_finite() {
                    return Err(CanonicalError::NonCanonicalizable(format!(
                        "non-finite number {f}"
                    )));
                }
                // serde_json formats floats with ryu: shortest round-trip
                out.extend_from_slice(n.to_string().as_bytes());
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out)?;
            }
            out.push(b']');
        }
        Value::Object(map) => {
            // sort explicitly; serde_json's map may preserve insertion order
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push(b'{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(k, out);
                out.push(b':');
                write_value(v, out)?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    out.push(b'"');
    for ch in s.chars() {
        match ch {
            '"' => out.extend_from_slice(b"\\\""),
            '\\' => out.extend_from_slice(b"\\\\"),
            '\n' => out.extend_from_slice(b"\\n"),
            '\r' => out.extend_from_slice(b"\\r"),
            '\t' => out.extend_from_slice(b"\\t"),
            '\u{08}' => out.extend_from_slice(b"\\b"),
            '\u{0c}' => out.extend_from_slice(b"\\f"),
            c if (c as u32) < 0x20 => {
                out.extend_from_slice(format!("\\u{:04x}", c as u32).as_bytes());
            }
            c => {
                let mut buf = [0u8; 4];
                out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
        }
    }
    out.push(b'"');
}
