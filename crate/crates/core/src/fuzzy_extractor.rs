// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Code-offset fuzzy commitment over a repetition code.
//!
//! Enrolment binds an externally chosen key share `k` to a template `w`:
//! `HD = encode(k) XOR w`. Reproduction from a fresh reading `w'` computes
//! `decode(HD XOR w')`, which returns `k` exactly as long as every `r`-bit
//! block of `w XOR w'` carries at most `r / 2` flips.
//!
//! Because `w -> encode(k) XOR w` is a bijection for any fixed `k`, a uniform
//! template yields a uniform `HD` whatever the key is.

use std::fmt;
use std::ops::BitXor;

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{PrimeField, Scalar};
use crate::error::{Error, Result};

/// Fixed-length bit string, index 0 first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    /// Parses a `'0'`/`'1'` string.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        Bits((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    /// Independent Bernoulli(`p`) bits.
    pub fn bernoulli<R: RngCore + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        Bits((0..len).map(|_| rng.gen_bool(p)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Packs MSB-first into hex; the tail is zero-padded to a whole digit.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|nibble| {
                let v = nibble
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(v, 16).expect("nibble fits in one hex digit")
            })
            .collect()
    }

    /// Inverse of [`Bits::to_hex`] for a known bit length.
    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        if s.len() != len.div_ceil(4) {
            return Err(Error::Encoding(format!(
                "expected {} hex digits for {len} bits, got {}",
                len.div_ceil(4),
                s.len()
            )));
        }
        let mut bits = Vec::with_capacity(s.len() * 4);
        for c in s.chars() {
            if c.is_ascii_uppercase() {
                return Err(Error::Encoding("hex must be lowercase".into()));
            }
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::Encoding(format!("`{c}` is not a hex digit")))?;
            bits.extend((0..4).map(|i| (v >> (3 - i)) & 1 == 1));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Encoding("non-zero padding bits".into()));
        }
        bits.truncate(len);
        Ok(Bits(bits))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Bits(")?;
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

impl BitXor for &Bits {
    type Output = Bits;

    fn bitxor(self, rhs: &Bits) -> Bits {
        assert_eq!(self.len(), rhs.len(), "xor of unequal-length bit strings");
        Bits(self.0.iter().zip(&rhs.0).map(|(a, b)| a ^ b).collect())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

/// Repetition code shape: `m` message bits, each repeated `r` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub m: usize,
    pub r: usize,
}

impl CodeParams {
    pub fn new(m: usize, r: usize) -> Result<Self> {
        let params = CodeParams { m, r };
        params.validate()?;
        Ok(params)
    }

    /// Message length matched to a field: `m = bitlen(q)`.
    pub fn for_field(field: &PrimeField, r: usize) -> Result<Self> {
        Self::new(field.bits() as usize, r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("message length m must be positive"));
        }
        if self.r == 0 || self.r.is_multiple_of(2) {
            return Err(Error::param(format!(
                "repetition factor r = {} must be odd",
                self.r
            )));
        }
        Ok(())
    }

    /// Codeword and template length `L = m * r`.
    pub fn codeword_len(&self) -> usize {
        self.m * self.r
    }

    /// Correctable flips per block.
    pub fn radius(&self) -> usize {
        self.r / 2
    }
}

/// A binary sensor template of length `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template(pub Bits);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperData {
    pub bits: Bits,
    pub code: CodeParams,
}

#[derive(Serialize, Deserialize)]
struct HelperDataWire {
    bits: String,
    m: usize,
    r: usize,
}

impl Serialize for HelperData {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HelperDataWire {
            bits: self.bits.to_hex(),
            m: self.code.m,
            r: self.code.r,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HelperData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = HelperDataWire::deserialize(d)?;
        let code = CodeParams::new(wire.m, wire.r).map_err(D::Error::custom)?;
        let bits = Bits::from_hex(&wire.bits, code.codeword_len()).map_err(D::Error::custom)?;
        Ok(HelperData { bits, code })
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::param(format!(
            "{what} has {got} bits, expected {want}"
        )));
    }
    Ok(())
}

pub fn encode(key_bits: &Bits, params: &CodeParams) -> Result<Bits> {
    params.validate()?;
    check_len("key", key_bits.len(), params.m)?;
    Ok(key_bits
        .as_slice()
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b, params.r))
        .collect())
}

/// Per-block majority vote.
pub fn decode(noisy: &Bits, params: &CodeParams) -> Result<Bits> {
    params.validate()?;
    check_len("codeword", noisy.len(), params.codeword_len())?;
    Ok(noisy
        .as_slice()
        .chunks(params.r)
        .map(|block| block.iter().filter(|&&b| b).count() > params.r / 2)
        .collect())
}

/// Binds `key_bits` to `template`. Both inputs are consumed.
pub fn fe_enroll(key_bits: Bits, template: Template, params: &CodeParams) -> Result<HelperData> {
    check_len("template", template.0.len(), params.codeword_len())?;
    let codeword = encode(&key_bits, params)?;
    Ok(HelperData {
        bits: &codeword ^ &template.0,
        code: *params,
    })
}

/// Recovers the enrolled key bits from a fresh template. A reading that is
/// too noisy silently yields different bits.
pub fn fe_reproduce(template: &Template, helper: &HelperData) -> Result<Bits> {
    check_len("template", template.0.len(), helper.code.codeword_len())?;
    check_len("helper data", helper.bits.len(), helper.code.codeword_len())?;
    decode(&(&helper.bits ^ &template.0), &helper.code)
}

/// Big-endian, zero-padded to `m` bits.
pub fn scalar_to_bits(value: &Scalar, m: usize) -> Result<Bits> {
    let v = value.value();
    if v.bits() as usize > m {
        return Err(Error::param(format!(
            "value needs {} bits, only {m} available",
            v.bits()
        )));
    }
    Ok((0..m).rev().map(|i| v.bit(i as u64)).collect())
}

/// Big-endian interpretation; rejects values that are not below `q`.
pub fn bits_to_scalar(key_bits: &Bits, field: &PrimeField) -> Result<Scalar> {
    let v = key_bits
        .as_slice()
        .iter()
        .fold(BigUint::default(), |acc, &b| (acc << 1u32) + u32::from(b));
    field.element(v).map_err(|_| Error::CorruptedShare)
}

/// `P(block decodes wrongly)` for independent per-bit flips with probability `p`:
/// the binomial tail `P(X > r/2)`, `X ~ Bin(r, p)`.
pub fn block_failure_probability(r: usize, p: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=r {
        if k > 0 {
            binom = binom * (r - k + 1) as f64 / k as f64;
        }
        if k > r / 2 {
            total += binom * p.powi(k as i32) * (1.0 - p).powi((r - k) as i32);
        }
    }
    total
}

/// `P(at least one of m blocks fails)`.
pub fn reproduction_failure_probability(code: &CodeParams, p: f64) -> f64 {
    1.0 - (1.0 - block_failure_probability(code.r, p)).powi(code.m as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn b(s: &str) -> Bits {
        Bits::parse(s).unwrap()
    }

    fn code(m: usize, r: usize) -> CodeParams {
        CodeParams::new(m, r).unwrap()
    }

    #[test]
    fn encode_known_answers() {
        assert_eq!(encode(&b("10"), &code(2, 3)).unwrap(), b("111000"));
        assert_eq!(encode(&b("0"), &code(1, 5)).unwrap(), b("00000"));
        assert_eq!(encode(&b("101"), &code(3, 3)).unwrap(), b("111000111"));
        assert!(encode(&b("10"), &code(3, 3)).is_err());
    }

    #[test]
    fn decode_known_answers() {
        assert_eq!(decode(&b("111001"), &code(2, 3)).unwrap(), b("10"));
        assert_eq!(decode(&b("111000111"), &code(3, 3)).unwrap(), b("101"));
        assert_eq!(decode(&b("11000"), &code(1, 5)).unwrap(), b("0"));
        assert!(decode(&b("1110"), &code(2, 3)).is_err());
    }

    #[test]
    fn code_params_reject_even_r() {
        assert!(CodeParams::new(4, 2).is_err());
        assert!(CodeParams::new(0, 3).is_err());
        assert_eq!(code(16, 5).codeword_len(), 80);
    }

    #[test]
    fn enroll_and_reproduce_known_answers() {
        let params = code(2, 3);
        let hd = fe_enroll(b("10"), Template(b("110100")), &params).unwrap();
        assert_eq!(hd.bits, b("001100"));
        let key = fe_reproduce(&Template(b("110101")), &hd).unwrap();
        assert_eq!(key, b("10"));
        assert_eq!(fe_reproduce(&Template(b("110100")), &hd).unwrap(), b("10"));

        let zero_w = fe_enroll(b("10"), Template(Bits::zeros(6)), &params).unwrap();
        assert_eq!(zero_w.bits, b("111000"));
        let zero_k = fe_enroll(b("00"), Template(b("110100")), &params).unwrap();
        assert_eq!(zero_k.bits, b("110100"));
        assert!(fe_enroll(b("10"), Template(b("1101")), &params).is_err());
    }

    #[test]
    fn analytic_block_failure() {
        // P(X >= 3), X ~ Bin(5, 0.1) = 10 * 0.001 * 0.81 + 5 * 0.0001 * 0.9 + 1e-5
        let oracle = 10.0 * 0.001 * 0.81 + 5.0 * 0.0001 * 0.9 + 1e-5;
        assert!((block_failure_probability(5, 0.1) - oracle).abs() < 1e-15);
        assert!((oracle - 0.00856).abs() < 1e-12);
        let whole = reproduction_failure_probability(&code(16, 5), 0.1);
        assert!((whole - 0.1285).abs() < 5e-4);
        assert_eq!(block_failure_probability(5, 0.0), 0.0);
        assert!((block_failure_probability(5, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_bits_known_answers() {
        let f = PrimeField::new(11u32.into()).unwrap();
        assert_eq!(bits_to_scalar(&Bits::zeros(4), &f).unwrap(), f.zero());
        assert_eq!(bits_to_scalar(&b("0100"), &f).unwrap(), f.from_u64(4));
        assert_eq!(bits_to_scalar(&b("1011"), &f), Err(Error::CorruptedShare));
        assert_eq!(scalar_to_bits(&f.from_u64(4), 4).unwrap(), b("0100"));
        assert_eq!(scalar_to_bits(&f.zero(), 4).unwrap(), b("0000"));
        assert!(scalar_to_bits(&f.from_u64(10), 3).is_err());
    }

    #[test]
    fn scalar_bits_round_trip() {
        let f = crate::algebra::GroupParams::sim_q32().field();
        let m = f.bits() as usize;
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let s = f.random(&mut rng);
            assert_eq!(
                bits_to_scalar(&scalar_to_bits(&s, m).unwrap(), &f).unwrap(),
                s
            );
        }
    }

    #[test]
    fn helper_data_json() {
        let hd = HelperData {
            bits: b("001100"),
            code: code(2, 3),
        };
        let json = serde_json::to_string(&hd).unwrap();
        assert_eq!(json, r#"{"bits":"30","m":2,"r":3}"#);
        assert_eq!(serde_json::from_str::<HelperData>(&json).unwrap(), hd);
        assert!(serde_json::from_str::<HelperData>(r#"{"bits":"31","m":2,"r":3}"#).is_err());
    }

    #[test]
    fn hd_distribution_is_key_independent_at_l8() {
        // r = 1, m = 8: L = 8
        let params = code(8, 1);
        for keys in [("00000000", "10110011"), ("11111111", "01010101")] {
            let mut hist_a = [0u32; 256];
            let mut hist_b = [0u32; 256];
            for w in 0..256u32 {
                let template: Bits = (0..8).rev().map(|i| (w >> i) & 1 == 1).collect();
                let ha = fe_enroll(b(keys.0), Template(template.clone()), &params).unwrap();
                let hb = fe_enroll(b(keys.1), Template(template), &params).unwrap();
                hist_a[usize::from_str_radix(&ha.bits.to_hex(), 16).unwrap()] += 1;
                hist_b[usize::from_str_radix(&hb.bits.to_hex(), 16).unwrap()] += 1;
            }
            assert!(hist_a.iter().all(|&c| c == 1));
            assert_eq!(hist_a, hist_b);
        }
    }

    #[test]
    fn exact_recovery_within_radius() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for trial in 0..1000usize {
            let params = code(1 + trial % 40, [1, 3, 5, 7][trial % 4]);
            let key = Bits::random(params.m, &mut rng);
            let w = Bits::random(params.codeword_len(), &mut rng);
            let hd = fe_enroll(key.clone(), Template(w.clone()), &params).unwrap();
            let mut noisy = w;
            for block in 0..params.m {
                let flips = rng.gen_range(0..=params.radius());
                let mut positions: Vec<usize> = (0..params.r).collect();
                for k in 0..flips {
                    let pick = rng.gen_range(k..params.r);
                    positions.swap(k, pick);
                    noisy.flip(block * params.r + positions[k]);
                }
            }
            assert_eq!(fe_reproduce(&Template(noisy), &hd).unwrap(), key);
        }
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..70)) {
            let bits: Bits = bits.into_iter().collect();
            prop_assert_eq!(Bits::from_hex(&bits.to_hex(), bits.len()).unwrap(), bits);
        }

        #[test]
        fn decode_inverts_encode(bits in proptest::collection::vec(any::<bool>(), 1..40), r in prop::sample::select(vec![1usize, 3, 5, 9])) {
            let key: Bits = bits.into_iter().collect();
            let params = code(key.len(), r);
            prop_assert_eq!(decode(&encode(&key, &params).unwrap(), &params).unwrap(), key);
        }
    }
}
