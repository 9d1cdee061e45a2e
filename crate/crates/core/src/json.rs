//! JSON helpers: fixed 17-significant-digit float output and a codec for
//! float vectors that may hold infinities.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

/// Compact formatter that writes every `f64` with 17 significant digits in
/// scientific notation, enough to reproduce the exact bit pattern.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f32(writer, value)
    }
}

pub(crate) fn to_writer_exact<W: io::Write, T: Serialize>(
    writer: W,
    value: &T,
) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, SigDigits);
    value.serialize(&mut ser)
}

pub(crate) fn to_string_exact<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    to_writer_exact(&mut buf, value)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Finite values as numbers; `-inf` as `null`. Only negative infinity
/// occurs in weight vectors, so `null` decodes back to it.
pub(crate) mod floats_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| v.is_finite().then_some(*v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect())
    }
}
