//! JSON output helpers.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Float text with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

/// A float that serializes with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f17(&self.0, s)
    }
}

impl<'de> serde::Deserialize<'de> for F17 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(F17)
    }
}

pub fn ser_f17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(fmt17(*v)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn ser_opt_f17<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f17(x, s),
        None => s.serialize_none(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> crate::error::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 0.9877961159, 175.0 / 256.0, 0.0] {
            let s = fmt17(v);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt17(f64::NAN), "null");
    }

    #[test]
    fn raw_numbers_in_json() {
        #[derive(Serialize)]
        struct T {
            #[serde(serialize_with = "ser_f17")]
            x: f64,
            y: F17,
        }
        let s = serde_json::to_string(&T { x: 0.5, y: F17(-1.0) }).unwrap();
        assert_eq!(s, r#"{"x":5.0000000000000000e-1,"y":-1.0000000000000000e0}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.5));
    }
}
