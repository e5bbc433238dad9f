//! Number encodings shared by the JSON file formats.
//!
//! Reals are written with 17 significant digits so that every `f64`
//! round-trips bit-exactly; integers of arbitrary size are written as bare
//! JSON integers.

use num_bigint::BigInt;
use serde_json::Number;

pub(crate) fn real_to_number(x: f64) -> Number {
    assert!(x.is_finite(), "non-finite real cannot be encoded as JSON");
    format!("{x:.16e}")
        .parse()
        .expect("scientific notation is valid JSON")
}

pub(crate) fn number_to_real(n: &Number) -> Result<f64, String> {
    n.to_string()
        .parse::<f64>()
        .map_err(|e| format!("bad real {n}: {e}"))
}

pub(crate) fn int_to_number(x: &BigInt) -> Number {
    x.to_string().parse().expect("integers are valid JSON")
}

pub(crate) fn number_to_int(n: &Number) -> Result<BigInt, String> {
    n.to_string()
        .parse::<BigInt>()
        .map_err(|_| format!("expected an integer coefficient, got {n}"))
}

pub(crate) fn serialize_int<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&int_to_number(x), s)
}

pub(crate) mod reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Number;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| super::real_to_number(x))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Number>::deserialize(d)?
            .iter()
            .map(super::number_to_real)
            .collect::<Result<_, _>>()
            .map_err(serde::de::Error::custom)
    }
}
