//! JSON reading and writing with fixed-precision float formatting.
//!
//! Every float is written with 17 significant digits (scientific notation),
//! enough to round-trip any f64 bit pattern. Non-finite values serialize as
//! null.

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use std::io;

struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a value to JSON with floats at 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}

/// Parses a value from JSON text.
pub fn from_json_str<'a, T: Deserialize<'a>>(text: &'a str) -> crate::Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Formats one float the same way the JSON writer does.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}
