// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Shamir secret sharing with Feldman commitments.
//!
//! A secret `s` is the constant term of a random degree-`t` polynomial `f`.
//! Device `i` receives `f(i)`; any `t + 1` points interpolate `f(0) = s`
//! while `t` points say nothing about it. Publishing `C_k = g^{a_k}` for each
//! coefficient lets every holder check its share without learning the others.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupElement, GroupParams, PrimeField, Scalar};
use crate::error::{Error, Result};

/// `(t, n)`: `n` shares, any `t + 1` of which reconstruct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub t: u32,
    pub n: u32,
}

impl ThresholdParams {
    pub fn new(t: u32, n: u32) -> Result<Self> {
        let params = ThresholdParams { t, n };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        if self.t >= self.n {
            return Err(Error::param(format!(
                "threshold t + 1 = {} exceeds n = {}",
                self.t + 1,
                self.n
            )));
        }
        Ok(())
    }

    /// Number of shares required to reconstruct or sign.
    pub fn quorum(&self) -> usize {
        self.t as usize + 1
    }

    fn validate_for(&self, field: &PrimeField) -> Result<()> {
        self.validate()?;
        if &BigUint::from(self.n) >= field.modulus() {
            return Err(Error::param("n must be below the field modulus"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub index: u32,
    pub value: Scalar,
}

/// `C_k = g^{a_k}` for each polynomial coefficient, `C_0 = g^secret`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeldmanCommitments(pub Vec<GroupElement>);

impl FeldmanCommitments {
    /// The committed secret, `g^secret`.
    pub fn public_value(&self) -> &GroupElement {
        &self.0[0]
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// `prod_k C_k^{index^k}`, i.e. `g^{f(index)}`.
    pub fn evaluate(&self, index: u32, group: &GroupParams) -> GroupElement {
        let x = BigUint::from(index);
        let mut power = BigUint::one();
        let mut acc = group.identity();
        for c in &self.0 {
            acc = group.mul(&acc, &group.exp(c, &power));
            power *= &x;
        }
        acc
    }
}

/// Splits `secret` into `params.n` shares with a fresh random polynomial.
///
/// Coefficients `a_1..a_t` are drawn uniformly from `[0, q)` in order.
pub fn share_secret<R: RngCore + ?Sized>(
    secret: &Scalar,
    params: ThresholdParams,
    group: &GroupParams,
    rng: &mut R,
) -> Result<(Vec<Share>, FeldmanCommitments)> {
    let field = group.field();
    params.validate_for(&field)?;
    let coefficients: Vec<Scalar> = (0..params.t).map(|_| field.random(rng)).collect();
    share_with_coefficients(secret, &coefficients, params, group)
}

/// Deterministic variant of [`share_secret`] with caller-supplied
/// coefficients `a_1..a_t`. Used for known-answer tests.
pub fn share_with_coefficients(
    secret: &Scalar,
    coefficients: &[Scalar],
    params: ThresholdParams,
    group: &GroupParams,
) -> Result<(Vec<Share>, FeldmanCommitments)> {
    let field = group.field();
    params.validate_for(&field)?;
    if secret.value() >= field.modulus() {
        return Err(Error::param("secret is not below q"));
    }
    if coefficients.len() != params.t as usize {
        return Err(Error::param(format!(
            "expected {} coefficients, got {}",
            params.t,
            coefficients.len()
        )));
    }
    let poly: Vec<Scalar> = std::iter::once(secret.clone())
        .chain(coefficients.iter().map(|c| field.reduce(c.value())))
        .collect();
    let shares = (1..=params.n)
        .map(|i| Share {
            index: i,
            value: evaluate_polynomial(&poly, i, &field),
        })
        .collect();
    let commitments = FeldmanCommitments(poly.iter().map(|a| group.base_exp(a)).collect());
    Ok((shares, commitments))
}

fn evaluate_polynomial(poly: &[Scalar], x: u32, field: &PrimeField) -> Scalar {
    let x = field.from_u64(x.into());
    poly.iter()
        .rev()
        .fold(field.zero(), |acc, c| field.add(&field.mul(&acc, &x), c))
}

/// Checks `g^{value} == prod_k C_k^{index^k} (mod p)`.
pub fn verify_share(share: &Share, commitments: &FeldmanCommitments, group: &GroupParams) -> bool {
    if share.index == 0 || commitments.0.is_empty() || share.value.value() >= group.q() {
        return false;
    }
    group.base_exp(&share.value) == commitments.evaluate(share.index, group)
}

/// Interpolates `f(0)` from shares with distinct indices.
pub fn reconstruct(shares: &[Share], field: &PrimeField) -> Result<Scalar> {
    if shares.is_empty() {
        return Err(Error::InsufficientShares { have: 0, need: 1 });
    }
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    let unique: BTreeSet<u32> = indices.iter().copied().collect();
    if unique.len() != indices.len() {
        return Err(Error::param("duplicate share indices"));
    }
    shares.iter().try_fold(field.zero(), |acc, share| {
        let lambda = field.lagrange_coefficient(&indices, share.index)?;
        Ok(field.add(&acc, &field.mul(&lambda, &share.value)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn field17() -> PrimeField {
        PrimeField::new(BigUint::from(17u32)).unwrap()
    }

    fn group17() -> GroupParams {
        // p = 103 = 6 * 17 + 1, g = 2^6 mod 103 = 64 has order 17.
        GroupParams::new(103u32.into(), 17u32.into(), 64u32.into()).unwrap()
    }

    #[test]
    fn shamir_known_answer_q17() {
        let group = group17();
        let f = group.field();
        let params = ThresholdParams::new(1, 3).unwrap();
        let (shares, _) =
            share_with_coefficients(&f.from_u64(5), &[f.from_u64(3)], params, &group).unwrap();
        let values: Vec<(u32, u64)> = shares
            .iter()
            .map(|s| (s.index, u64::try_from(s.value.value()).unwrap()))
            .collect();
        assert_eq!(values, vec![(1, 8), (2, 11), (3, 14)]);
    }

    #[test]
    fn constant_polynomial_single_share() {
        let group = GroupParams::test_group();
        let f = group.field();
        let params = ThresholdParams::new(0, 1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let (shares, commitments) = share_secret(&f.from_u64(6), params, &group, &mut rng).unwrap();
        assert_eq!(
            shares,
            vec![Share {
                index: 1,
                value: f.from_u64(6)
            }]
        );
        assert_eq!(commitments.0, vec![group.base_exp(&f.from_u64(6))]);
    }

    #[test]
    fn feldman_known_answers() {
        let group = GroupParams::test_group();
        let f = group.field();
        let params = ThresholdParams::new(1, 3).unwrap();
        let (shares, commitments) =
            share_with_coefficients(&f.from_u64(7), &[f.from_u64(4)], params, &group).unwrap();
        let raw: Vec<u64> = commitments
            .0
            .iter()
            .map(|c| u64::try_from(c.value()).unwrap())
            .collect();
        assert_eq!(raw, vec![13, 16]);
        let good = Share {
            index: 2,
            value: f.from_u64(4),
        };
        let bad = Share {
            index: 2,
            value: f.from_u64(5),
        };
        assert_eq!(shares[1], good);
        assert!(verify_share(&good, &commitments, &group));
        assert!(!verify_share(&bad, &commitments, &group));
    }

    #[test]
    fn feldman_degree_zero_accepts_its_secret() {
        let group = GroupParams::test_group();
        let f = group.field();
        for s in 0..11 {
            let c = FeldmanCommitments(vec![group.base_exp(&f.from_u64(s))]);
            assert!(verify_share(
                &Share {
                    index: 1,
                    value: f.from_u64(s)
                },
                &c,
                &group
            ));
        }
    }

    #[test]
    fn reconstruct_known_answers() {
        let f = field17();
        let s = |i, v| Share {
            index: i,
            value: f.from_u64(v),
        };
        assert_eq!(
            reconstruct(&[s(1, 8), s(3, 14)], &f).unwrap(),
            f.from_u64(5)
        );
        assert_eq!(
            reconstruct(&[s(1, 8), s(2, 11), s(3, 14)], &f).unwrap(),
            f.from_u64(5)
        );
        assert_eq!(reconstruct(&[s(1, 9)], &f).unwrap(), f.from_u64(9));
        assert!(matches!(
            reconstruct(&[s(1, 8), s(1, 8)], &f),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn parameter_errors() {
        let group = GroupParams::test_group();
        let f = group.field();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(ThresholdParams::new(3, 3).is_err());
        assert!(ThresholdParams::new(0, 0).is_err());
        // n must stay below q = 11
        let big_n = ThresholdParams { t: 1, n: 11 };
        assert!(share_secret(&f.from_u64(1), big_n, &group, &mut rng).is_err());
        let secret_too_big = crate::algebra::PrimeField::new(BigUint::from(13u32))
            .unwrap()
            .from_u64(12);
        assert!(share_secret(
            &secret_too_big,
            ThresholdParams { t: 1, n: 3 },
            &group,
            &mut rng
        )
        .is_err());
    }

    /// Any single share is consistent with every candidate secret, each through exactly one line.
    #[test]
    fn single_share_leaves_secret_undetermined() {
        let f = field17();
        for i in 1..17u64 {
            for v in 0..17u64 {
                for secret in 0..17u64 {
                    let slopes = (0..17u64).filter(|a1| (secret + a1 * i) % 17 == v).count();
                    assert_eq!(slopes, 1);
                }
            }
        }
        // and two shares pin it down
        let two = [
            Share {
                index: 1,
                value: f.from_u64(8),
            },
            Share {
                index: 3,
                value: f.from_u64(14),
            },
        ];
        assert_eq!(reconstruct(&two, &f).unwrap(), f.from_u64(5));
    }

    fn subsets(n: u32, k: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        fn go(start: u32, n: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..=n {
                cur.push(i);
                go(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        go(1, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn every_quorum_reconstructs() {
        let group = GroupParams::sim_q32();
        let field = group.field();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for trial in 0..500u32 {
            let n = 1 + trial % 8;
            let t = (trial / 8) % n.min(5);
            let params = ThresholdParams::new(t, n).unwrap();
            let secret = field.random(&mut rng);
            let (shares, commitments) = share_secret(&secret, params, &group, &mut rng).unwrap();
            assert_eq!(commitments.0.len(), params.quorum());
            assert_eq!(commitments.public_value(), &group.base_exp(&secret));
            for subset in subsets(n, params.quorum()) {
                let picked: Vec<Share> = subset
                    .iter()
                    .map(|&i| shares[(i - 1) as usize].clone())
                    .collect();
                assert_eq!(reconstruct(&picked, &field).unwrap(), secret);
            }
        }
    }

    #[test]
    fn tampered_share_fails_feldman() {
        let group = GroupParams::sim_q32();
        let field = group.field();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let params = ThresholdParams::new(2, 5).unwrap();
        let (shares, commitments) =
            share_secret(&field.random(&mut rng), params, &group, &mut rng).unwrap();
        for share in &shares {
            assert!(verify_share(share, &commitments, &group));
            for delta in [1u64, 2, 1 << 20] {
                let bumped = Share {
                    index: share.index,
                    value: field.add(&share.value, &field.from_u64(delta)),
                };
                assert!(!verify_share(&bumped, &commitments, &group));
            }
        }
    }

    #[test]
    fn share_json_format() {
        let f = field17();
        let share = Share {
            index: 2,
            value: f.from_u64(11),
        };
        assert_eq!(
            serde_json::to_string(&share).unwrap(),
            r#"{"index":2,"value":"b"}"#
        );
        let c = FeldmanCommitments(vec![GroupParams::test_group().base_exp(&f.from_u64(7))]);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"["d"]"#);
    }
}
