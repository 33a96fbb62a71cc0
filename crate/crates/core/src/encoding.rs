// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Hex codecs shared by the JSON wire formats.
//!
//! Integers are big-endian lowercase hex without leading zeros (zero is `"0"`).
//! Byte strings are plain lowercase hex.

use num_bigint::BigUint;
use num_traits::Num;

use crate::error::{Error, Result};

pub fn biguint_to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

pub fn biguint_from_hex(s: &str) -> Result<BigUint> {
    if s.is_empty() {
        return Err(Error::Encoding("empty hex integer".into()));
    }
    if s.len() > 1 && s.starts_with('0') {
        return Err(Error::Encoding(format!(
            "hex integer `{s}` has leading zeros"
        )));
    }
    if s.chars().any(|c| c.is_ascii_uppercase()) {
        return Err(Error::Encoding(format!(
            "hex integer `{s}` is not lowercase"
        )));
    }
    BigUint::from_str_radix(s, 16).map_err(|e| Error::Encoding(e.to_string()))
}

/// serde adapter for `BigUint` fields.
pub mod hex_biguint {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::biguint_to_hex(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        super::biguint_from_hex(&s).map_err(D::Error::custom)
    }
}

/// serde adapter for byte-string fields.
pub mod hex_bytes {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: AsRef<[u8]>>(v: T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: TryFrom<Vec<u8>>>(
        d: D,
    ) -> Result<T, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        T::try_from(bytes).map_err(|_| D::Error::custom("byte string has the wrong length"))
    }
}
