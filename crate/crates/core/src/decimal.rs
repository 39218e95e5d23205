//! Reals serialised as decimal strings with 17 significant digits.
//!
//! 17 significant digits round-trip every finite `f64` exactly; the
//! non-finite values are written as `inf`, `-inf` and `NaN`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn format(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(*x))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let text = String::deserialize(d)?;
    text.parse::<f64>().map_err(de::Error::custom)
}

pub mod option {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::format(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| t.parse::<f64>().map_err(de::Error::custom))
            .transpose()
    }
}
