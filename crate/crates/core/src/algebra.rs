// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Modular arithmetic over prime fields and Schnorr groups.
//!
//! Everything here is arbitrary precision. A [`GroupParams`] describes the
//! order-`q` subgroup of `Z_p^*` generated by `g`; exponents live in the
//! [`PrimeField`] of order `q`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{biguint_from_hex, hex_biguint};
use crate::error::{Error, Result};

/// `base^exponent mod modulus` by square-and-multiply.
pub fn mod_exp(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus < &BigUint::from(2u32) {
        return Err(Error::param("modulus must be at least 2"));
    }
    Ok(base.modpow(exponent, modulus))
}

/// Multiplicative inverse of `a` modulo `m` via the extended Euclidean algorithm.
pub fn mod_inv(a: &BigUint, m: &BigUint) -> Result<BigUint> {
    if m < &BigUint::from(2u32) {
        return Err(Error::param("modulus must be at least 2"));
    }
    let a = BigInt::from(a % m);
    let m_signed = BigInt::from(m.clone());
    let egcd = a.extended_gcd(&m_signed);
    if !egcd.gcd.is_one() {
        return Err(Error::NonInvertible);
    }
    let inv = egcd.x.mod_floor(&m_signed);
    Ok(inv
        .to_biguint()
        .expect("mod_floor of a positive modulus is non-negative"))
}

/// Miller-Rabin with `rounds` random witnesses.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for small in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let small = BigUint::from(small);
        if n == &small {
            return true;
        }
        if (n % &small).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniformly random prime with exactly `bits` bits.
pub fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 3 {
        return Err(Error::param("primes need at least 3 bits"));
    }
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, 40, rng) {
            return Ok(candidate);
        }
    }
}

/// Element of a prime field, always held in canonical form `[0, q)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalar(#[serde(with = "hex_biguint")] BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0)
    }
}

/// Member of the order-`q` subgroup of `Z_p^*`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(#[serde(with = "hex_biguint")] BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PrimeField {
    q: BigUint,
}

impl PrimeField {
    /// Builds the field of order `q`. Primality is checked probabilistically.
    pub fn new(q: BigUint) -> Result<Self> {
        if q < BigUint::from(3u32) {
            return Err(Error::param("field modulus must be at least 3"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
        if !is_probable_prime(&q, 32, &mut rng) {
            return Err(Error::param("field modulus is not prime"));
        }
        Ok(PrimeField { q })
    }

    pub(crate) fn new_unchecked(q: BigUint) -> Self {
        PrimeField { q }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.q
    }

    pub fn bits(&self) -> u64 {
        self.q.bits()
    }

    /// Reduces an arbitrary integer into the field.
    pub fn reduce(&self, v: &BigUint) -> Scalar {
        Scalar(v % &self.q)
    }

    pub fn from_u64(&self, v: u64) -> Scalar {
        self.reduce(&BigUint::from(v))
    }

    /// Accepts `v` only if it is already canonical.
    pub fn element(&self, v: BigUint) -> Result<Scalar> {
        if v >= self.q {
            return Err(Error::param("scalar is not below the field modulus"));
        }
        Ok(Scalar(v))
    }

    pub fn zero(&self) -> Scalar {
        Scalar(BigUint::zero())
    }

    pub fn one(&self) -> Scalar {
        Scalar(BigUint::one())
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.q - &b.0) % &self.q)
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn inv(&self, a: &Scalar) -> Result<Scalar> {
        mod_inv(&a.0, &self.q).map(Scalar)
    }

    pub fn pow(&self, a: &Scalar, e: &BigUint) -> Scalar {
        Scalar(a.0.modpow(e, &self.q))
    }

    /// Uniform draw from `[0, q)`.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.q))
    }

    /// Uniform draw from `[1, q)`.
    pub fn random_nonzero<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    /// Lagrange coefficient at zero for `j` over `indices`:
    /// `prod_{i != j} i * (i - j)^-1 mod q`.
    pub fn lagrange_coefficient(&self, indices: &[u32], j: u32) -> Result<Scalar> {
        let mut seen = BTreeSet::new();
        for &i in indices {
            if (BigUint::from(i) % &self.q).is_zero() {
                return Err(Error::param(format!("index {i} is zero modulo q")));
            }
            if !seen.insert(i) {
                return Err(Error::param(format!("duplicate index {i}")));
            }
        }
        if !seen.contains(&j) {
            return Err(Error::param(format!("index {j} is not in the index set")));
        }
        let xj = self.from_u64(j.into());
        let mut num = self.one();
        let mut den = self.one();
        for &i in indices.iter().filter(|&&i| i != j) {
            let xi = self.from_u64(i.into());
            num = self.mul(&num, &xi);
            den = self.mul(&den, &self.sub(&xi, &xj));
        }
        Ok(self.mul(&num, &self.inv(&den)?))
    }
}

/// Schnorr group parameters: `g` generates the subgroup of prime order `q` in `Z_p^*`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GroupParams {
    #[serde(with = "hex_biguint")]
    p: BigUint,
    #[serde(with = "hex_biguint")]
    q: BigUint,
    #[serde(with = "hex_biguint")]
    g: BigUint,
}

/// Shipped parameter sets, addressed by name in configs and on the command line.
pub const GROUP_NAMES: [&str; 3] = ["test", "sim-q32", "modp-2048-256"];

const SIM_Q32: (&str, &str, &str) = (
    "baf43c0845d456c45c312b56dc311bea8819ff92c1eaf7a92862be19aee74249",
    "c9a4822f",
    "43dd0b839c129fa060d512c647f5c1092abbcba62ea1671cf40833d7661f92e0",
);

const MODP_2048_256: (&str, &str, &str) = (
    "8a1f627f703bd68900bff96a038bc00150dff02b2763a02a137a0d76dfca898622b800c1906e1acc\
     468540ecbc63ae75f8f2e0e26051c30e9888f94b9eb5c5ef6efdd3bc3c132e58e52fe52ee45dd47b\
     66828960ead3396b97d1c9d876c0902f27d4f2a45db1e30cdd5be2fdac8bf25617051c39d43cf77f\
     c0a9e5c6bb899cc32ef6b96b9553d1666caafa37a0e5a546b7748a5ad68e8e895c701c6b0e0c56f7\
     a68f139f86256ec745595e8d2f2d2f4a9d3385a9ec3678802d34396cb1c77839e8c83d0ef89f858d\
     37da5a7c75152595df2f4eaa318128609386a4a0292b3a4bd45b2f3634a90ebfc904b6fbf2e63a0e\
     e69d122ce5dc764fb7e2b15b93c027e3",
    "8c39d2ee690383a8ae5b7a7da9f7e03c83c9e5db8f89697fba6dd33e22266a3b",
    "2bd588c7867f14b898823e22957c9f1761566b87dca360126c48ae63e837a5a5fd117bb028a68860\
     ef573b492a5fd4d2d4b82846acc65f1988bf04f51a0f84b306b99d55feb629642899ca24579812eb\
     b3d7c2abf0114194ac4b612d205fe3ecfb3366b7693f0ccb088f641c1bac2716e52048f5d3a77097\
     4ac5f106cdd85d778498b4b7586b7418513ca77149efe3e32c9baef4874159749444a45af5f22e5b\
     e71d8d08a6f40d7d0f1885007639e059070ef41a19c8b6cafdd85d36364c3e7ab0571f4816329fe7\
     2ddf90addb86ae49c23905c505de4d31537fbdb388a95076e06bdb46c86ecd7e1cec7cdd8929e1a7\
     7eedcdaa325f56eb229290a55c496436",
);

impl GroupParams {
    /// Validates and builds a parameter set.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        let field = PrimeField::new(q.clone())?;
        let mut rng = ChaCha20Rng::seed_from_u64(0x6e0);
        if !is_probable_prime(&p, 32, &mut rng) {
            return Err(Error::param("group modulus p is not prime"));
        }
        if !((&p - 1u32) % field.modulus()).is_zero() {
            return Err(Error::param("q does not divide p - 1"));
        }
        if g.is_zero() || g.is_one() || g >= p || !g.modpow(&q, &p).is_one() {
            return Err(Error::param("g does not generate the order-q subgroup"));
        }
        Ok(GroupParams { p, q, g })
    }

    /// p = 23, q = 11, g = 2. Only for known-answer tests.
    pub fn test_group() -> Self {
        GroupParams {
            p: BigUint::from(23u32),
            q: BigUint::from(11u32),
            g: BigUint::from(2u32),
        }
    }

    /// 256-bit p with a 32-bit q; sized for simulation throughput.
    pub fn sim_q32() -> Self {
        Self::from_hex_consts(SIM_Q32)
    }

    /// 2048-bit p with a 256-bit q; the default for real keys.
    pub fn modp_2048_256() -> Self {
        Self::from_hex_consts(MODP_2048_256)
    }

    fn from_hex_consts((p, q, g): (&str, &str, &str)) -> Self {
        let parse = |s: &str| biguint_from_hex(s).expect("shipped constant is valid hex");
        GroupParams {
            p: parse(p),
            q: parse(q),
            g: parse(g),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "test" => Ok(Self::test_group()),
            "sim-q32" => Ok(Self::sim_q32()),
            "modp-2048-256" => Ok(Self::modp_2048_256()),
            other => Err(Error::param(format!(
                "unknown group `{other}`; expected one of {GROUP_NAMES:?}"
            ))),
        }
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new_unchecked(self.q.clone())
    }

    /// Byte width of the fixed-length big-endian encoding of group elements.
    pub fn element_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    pub fn contains(&self, v: &BigUint) -> bool {
        !v.is_zero() && v < &self.p && v.modpow(&self.q, &self.p).is_one()
    }

    /// Accepts `v` only if it lies in the order-q subgroup.
    pub fn element(&self, v: BigUint) -> Result<GroupElement> {
        if !self.contains(&v) {
            return Err(Error::param("value is not in the order-q subgroup"));
        }
        Ok(GroupElement(v))
    }

    /// `g^e mod p`.
    pub fn base_exp(&self, e: &Scalar) -> GroupElement {
        GroupElement(self.g.modpow(&e.0, &self.p))
    }

    pub fn exp(&self, base: &GroupElement, e: &BigUint) -> GroupElement {
        GroupElement(base.0.modpow(e, &self.p))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    /// Fixed-width big-endian encoding, `element_len()` bytes.
    pub fn encode(&self, e: &GroupElement) -> Vec<u8> {
        let raw = e.0.to_bytes_be();
        let width = self.element_len();
        let mut out = vec![0u8; width.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn mod_exp_known_answers() {
        assert_eq!(mod_exp(&big(2), &big(11), &big(23)).unwrap(), big(1));
        assert_eq!(mod_exp(&big(2), &big(7), &big(23)).unwrap(), big(13));
        assert_eq!(mod_exp(&big(9), &big(0), &big(23)).unwrap(), big(1));
        assert!(mod_exp(&big(2), &big(3), &big(1)).is_err());
    }

    #[test]
    fn mod_inv_known_answers() {
        assert_eq!(mod_inv(&big(1), &big(17)).unwrap(), big(1));
        assert_eq!(mod_inv(&big(15), &big(17)).unwrap(), big(8));
        assert_eq!(mod_inv(&big(4), &big(15)).unwrap(), big(4));
        assert_eq!(mod_inv(&big(0), &big(17)), Err(Error::NonInvertible));
        assert_eq!(mod_inv(&big(34), &big(17)), Err(Error::NonInvertible));
    }

    #[test]
    fn lagrange_known_answers() {
        let f17 = PrimeField::new(big(17)).unwrap();
        let f11 = PrimeField::new(big(11)).unwrap();
        assert_eq!(f17.lagrange_coefficient(&[1], 1).unwrap(), f17.one());
        assert_eq!(
            f17.lagrange_coefficient(&[1, 3], 1).unwrap(),
            f17.from_u64(10)
        );
        assert_eq!(
            f11.lagrange_coefficient(&[2, 3], 3).unwrap(),
            f11.from_u64(9)
        );
        assert!(f11.lagrange_coefficient(&[2, 2], 2).is_err());
        assert!(f11.lagrange_coefficient(&[2, 3], 4).is_err());
        assert!(f11.lagrange_coefficient(&[11, 3], 3).is_err());
    }

    #[test]
    fn field_rejects_composites_and_tiny_moduli() {
        assert!(PrimeField::new(big(15)).is_err());
        assert!(PrimeField::new(big(2)).is_err());
        assert!(PrimeField::new(big(0xc9a4822f)).is_ok());
    }

    #[test]
    fn shipped_groups_are_valid() {
        for name in GROUP_NAMES {
            let g = GroupParams::by_name(name).unwrap();
            GroupParams::new(g.p.clone(), g.q.clone(), g.g.clone()).unwrap();
        }
        let prod = GroupParams::modp_2048_256();
        assert_eq!(prod.p().bits(), 2048);
        assert_eq!(prod.q().bits(), 256);
        assert_eq!(GroupParams::sim_q32().q().bits(), 32);
        assert!(GroupParams::by_name("nope").is_err());
    }

    #[test]
    fn group_json_is_lowercase_hex() {
        let json = serde_json::to_string(&GroupParams::test_group()).unwrap();
        assert_eq!(json, r#"{"p":"17","q":"b","g":"2"}"#);
        let back: GroupParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, GroupParams::test_group());
    }

    #[test]
    fn element_encoding_is_fixed_width() {
        let g = GroupParams::sim_q32();
        assert_eq!(g.element_len(), 32);
        assert_eq!(g.encode(&g.identity()).len(), 32);
        assert_eq!(
            GroupParams::test_group().encode(&GroupElement(big(3))),
            vec![3]
        );
    }

    #[test]
    fn random_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for bits in [8, 32, 64] {
            let p = random_prime(bits, &mut rng).unwrap();
            assert_eq!(p.bits(), bits);
            assert!(PrimeField::new(p).is_ok());
        }
    }

    /// Interpolation at zero recovers the constant term of a random polynomial.
    #[test]
    fn lagrange_interpolation_recovers_constant_term() {
        let field = GroupParams::sim_q32().field();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for trial in 0..1000u32 {
            let degree = (trial % 6) as usize;
            let coeffs: Vec<Scalar> = (0..=degree).map(|_| field.random(&mut rng)).collect();
            let eval = |x: u32| {
                let x = field.from_u64(x.into());
                coeffs
                    .iter()
                    .rev()
                    .fold(field.zero(), |acc, c| field.add(&field.mul(&acc, &x), c))
            };
            let mut points: Vec<u32> = Vec::new();
            while points.len() <= degree {
                let p = (rand::Rng::gen_range(&mut rng, 1..1_000_000)) as u32;
                if !points.contains(&p) {
                    points.push(p);
                }
            }
            let sum = points.iter().fold(field.zero(), |acc, &j| {
                let lambda = field.lagrange_coefficient(&points, j).unwrap();
                field.add(&acc, &field.mul(&lambda, &eval(j)))
            });
            assert_eq!(sum, coeffs[0]);
        }
    }

    proptest! {
        #[test]
        fn mod_exp_matches_repeated_multiplication(base in 0u64..1_000_000, e in 0u64..1024, m in 2u64..100_000) {
            let mut naive = 1u64 % m;
            for _ in 0..e {
                naive = naive * (base % m) % m;
            }
            prop_assert_eq!(mod_exp(&big(base), &big(e), &big(m)).unwrap(), big(naive));
        }

        #[test]
        fn mod_inv_is_an_inverse(a in 1u64..u64::MAX) {
            let m = big(0xc9a4822f);
            let a = big(a);
            prop_assume!(!(&a % &m).is_zero());
            let b = mod_inv(&a, &m).unwrap();
            prop_assert!((a * b % m).is_one());
        }
    }
}
