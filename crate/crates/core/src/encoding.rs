//! Fixed-width encodings, the XOR used to combine timestamps, identities and
//! passwords, and the pluggable one-way function `f`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("value needs {0} bits, does not fit in 64")]
    Overflow(u64),
    #[error("expected 8 octets, got {0}")]
    BadWidth(usize),
    #[error("unknown one-way function {0:?}")]
    UnknownFunction(String),
}

/// Eight big-endian octets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bytes64(pub [u8; 8]);

impl Bytes64 {
    pub fn as_bytes(&self) -> &[u8; 8] {
        &self.0
    }

    pub fn decode(&self) -> u64 {
        u64::from_be_bytes(self.0)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, EncodingError> {
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| EncodingError::BadWidth(bytes.len()))?;
        Ok(Bytes64(arr))
    }
}

pub fn encode_fixed(x: &BigUint) -> Result<Bytes64, EncodingError> {
    let narrow: u64 = x
        .try_into()
        .map_err(|_| EncodingError::Overflow(x.bits()))?;
    Ok(Bytes64(narrow.to_be_bytes()))
}

/// Big-endian octets of `x`, left-padded to at least eight octets. Values
/// below 2^64 therefore encode exactly as [`encode_fixed`].
pub fn encode_wide(x: &BigUint) -> Vec<u8> {
    let raw = x.to_bytes_be();
    if raw.len() >= 8 {
        return raw;
    }
    let mut out = vec![0u8; 8 - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Bitwise XOR of two quantities after zero-padding both to the octet width
/// of the wider one.
pub fn xor_q(a: &BigUint, b: &BigUint) -> BigUint {
    a ^ b
}

/// The one-way function `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OneWayFunction {
    /// SHA-256 of the wide encoding, digest read big-endian.
    #[default]
    Std,
    /// `f(x) = x`; for hand-checkable fixtures only.
    StubIdentity,
    /// `f(x) = x + c`; for hand-checkable fixtures only.
    StubAffine(u64),
}

impl OneWayFunction {
    pub fn apply(&self, x: &BigUint) -> BigUint {
        match self {
            OneWayFunction::Std => {
                let digest = Sha256::digest(encode_wide(x));
                BigUint::from_bytes_be(&digest)
            }
            OneWayFunction::StubIdentity => x.clone(),
            OneWayFunction::StubAffine(c) => x + *c,
        }
    }

    /// `f(x) mod modulus`.
    pub fn apply_mod(&self, x: &BigUint, modulus: &BigUint) -> BigUint {
        self.apply(x) % modulus
    }
}

impl fmt::Display for OneWayFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OneWayFunction::Std => write!(f, "std"),
            OneWayFunction::StubIdentity => write!(f, "stub-identity"),
            OneWayFunction::StubAffine(c) => write!(f, "stub-affine:{c}"),
        }
    }
}

impl FromStr for OneWayFunction {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "std" | "sha256" | "sha-256" => Ok(OneWayFunction::Std),
            "stub-identity" | "identity" => Ok(OneWayFunction::StubIdentity),
            _ => lower
                .strip_prefix("stub-affine:")
                .or_else(|| lower.strip_prefix("stub-affine="))
                .and_then(|c| c.parse().ok())
                .map(OneWayFunction::StubAffine)
                .ok_or_else(|| EncodingError::UnknownFunction(s.to_string())),
        }
    }
}

pub fn f_apply(f: OneWayFunction, x: &BigUint) -> BigUint {
    f.apply(x)
}

pub fn f_mod(f: OneWayFunction, x: &BigUint, modulus: &BigUint) -> BigUint {
    f.apply_mod(x, modulus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn bitwise_xor_oracle(a: &str, b: &str) -> String {
        let width = a.len().max(b.len());
        let (a, b) = (format!("{a:0>width$}"), format!("{b:0>width$}"));
        a.chars()
            .zip(b.chars())
            .map(|(x, y)| if x == y { '0' } else { '1' })
            .collect()
    }

    #[test]
    fn fixed_encoding() {
        assert_eq!(encode_fixed(&big(0)).unwrap().0, [0; 8]);
        assert_eq!(encode_fixed(&big(9)).unwrap().0, [0, 0, 0, 0, 0, 0, 0, 9]);
        assert_eq!(
            encode_fixed(&(BigUint::from(1u8) << 64u32)),
            Err(EncodingError::Overflow(65))
        );
        assert_eq!(encode_wide(&big(9)), encode_fixed(&big(9)).unwrap().0.to_vec());
    }

    #[test]
    fn xor_examples() {
        assert_eq!(bitwise_xor_oracle("1001", "10001"), "11000");
        assert_eq!(bitwise_xor_oracle("101", "1100"), "1001");
        assert_eq!(xor_q(&big(9), &big(17)), big(24));
        assert_eq!(xor_q(&big(5), &big(12)), big(9));
        assert_eq!(xor_q(&big(77), &big(0)), big(77));
    }

    #[test]
    fn one_way_function_examples() {
        assert_eq!(f_apply(OneWayFunction::StubIdentity, &big(24)), big(24));
        assert_eq!(f_apply(OneWayFunction::StubAffine(1), &big(9)), big(10));
        // SHA-256 of eight zero octets, computed with a reference implementation
        let expected = BigUint::parse_bytes(
            b"af5570f5a1810b7af78caf4bc70a660f0df51e42baf91d4de5b2328de0e83dfc",
            16,
        )
        .unwrap();
        assert_eq!(f_apply(OneWayFunction::Std, &big(0)), expected);
    }

    #[test]
    fn f_mod_examples() {
        assert_eq!(f_mod(OneWayFunction::StubIdentity, &big(9), &big(23)), big(9));
        assert_eq!(f_mod(OneWayFunction::StubIdentity, &big(24), &big(22)), big(2));
        assert_eq!(f_mod(OneWayFunction::StubAffine(1), &big(21), &big(22)), big(0));
    }

    #[test]
    fn std_has_no_collisions_on_sample() {
        let mut seen = HashSet::new();
        for x in 0..100_000u64 {
            let x = x.wrapping_mul(0x9e37_79b9_7f4a_7c15);
            assert!(seen.insert(f_apply(OneWayFunction::Std, &big(x))));
        }
    }

    #[test]
    fn function_names_round_trip() {
        for f in [
            OneWayFunction::Std,
            OneWayFunction::StubIdentity,
            OneWayFunction::StubAffine(5),
        ] {
            assert_eq!(f.to_string().parse::<OneWayFunction>().unwrap(), f);
        }
        assert!("md5".parse::<OneWayFunction>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn fixed_round_trip(x in any::<u64>()) {
            prop_assert_eq!(encode_fixed(&big(x)).unwrap().decode(), x);
        }

        #[test]
        fn xor_is_involution(a in any::<[u8; 40]>(), b in any::<[u8; 24]>()) {
            let (a, b) = (BigUint::from_bytes_be(&a), BigUint::from_bytes_be(&b));
            prop_assert_eq!(xor_q(&xor_q(&a, &b), &b), a);
        }
    }
}
