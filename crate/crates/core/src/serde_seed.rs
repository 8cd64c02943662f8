//! Seeds as TOML values: an integer when it fits in `i64`, otherwise a
//! `"0x..."` hex string. Both forms are accepted on input.

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    if *seed <= i64::MAX as u64 {
        s.serialize_i64(*seed as i64)
    } else {
        s.serialize_str(&format!("{seed:#x}"))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    struct SeedVisitor;

    impl Visitor<'_> for SeedVisitor {
        type Value = u64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a non-negative integer or a \"0x\" hex string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
            u64::try_from(v).map_err(|_| E::custom("seed must be non-negative"))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
            Ok(v)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
            let hex = v
                .strip_prefix("0x")
                .or_else(|| v.strip_prefix("0X"))
                .ok_or_else(|| E::custom("string seeds must start with 0x"))?;
            u64::from_str_radix(hex, 16).map_err(|e| E::custom(format!("bad hex seed: {e}")))
        }
    }

    d.deserialize_any(SeedVisitor)
}
