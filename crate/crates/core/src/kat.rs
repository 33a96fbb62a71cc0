// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Hand-computed known answers, runnable as a self-check.
//!
//! Every value here was worked out by hand in the small test groups
//! (`p = 23, q = 11, g = 2` and an order-17 subgroup of `Z_103^*`) and in
//! the toy Paillier key `n = 15`. A check that errors counts as a failure.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::algebra::{mod_exp, mod_inv, GroupParams, PrimeField};
use crate::authscore::paillier::PheKeypair;
use crate::authscore::{
    decrypt_fused, fuse_encrypted, fuse_local, gate, FusionPolicy, Modality, ModalityReading,
};
use crate::error::Result;
use crate::fuzzy_extractor::{
    block_failure_probability, decode, fe_enroll, fe_reproduce, Bits, CodeParams, Template,
};
use crate::protocol::{
    enroll_with_polynomial, AuthResult, CaseStrategy, DenyReason, DeviceProfile, Payload,
    ProtocolContext, SensorSample, World,
};
use crate::sharing::{reconstruct, share_with_coefficients, verify_share, Share, ThresholdParams};
use crate::thresholdsig::{
    aggregate, commit_nonce, keygen_from_polynomial, sign_round2, verify_with, FixedChallenge,
    SecretNonce, SessionId,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KatCheck {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

fn check<T: ToString>(name: &str, expected: T, actual: Result<T>) -> KatCheck {
    let expected = expected.to_string();
    let (actual, pass) = match actual {
        Ok(v) => {
            let v = v.to_string();
            let pass = v == expected;
            (v, pass)
        }
        Err(e) => (format!("error: {e}"), false),
    };
    KatCheck {
        name: name.to_string(),
        expected,
        actual,
        pass,
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn as_u64(v: &BigUint) -> u64 {
    u64::try_from(v).unwrap_or(u64::MAX)
}

fn field(q: u64) -> PrimeField {
    PrimeField::new(big(q)).expect("small prime modulus")
}

/// `p = 103 = 6 * 17 + 1`; `g = 2^6 mod 103 = 64` has order 17.
fn group17() -> GroupParams {
    GroupParams::new(big(103), big(17), big(64)).expect("valid toy group")
}

fn pairs(shares: &[Share]) -> String {
    shares
        .iter()
        .map(|s| format!("({},{})", s.index, s.value.value()))
        .collect::<Vec<_>>()
        .join(",")
}

fn algebra_checks(out: &mut Vec<KatCheck>) {
    out.push(check(
        "mod_exp 2^11 mod 23",
        1,
        mod_exp(&big(2), &big(11), &big(23)).map(|v| as_u64(&v)),
    ));
    out.push(check(
        "mod_exp 2^7 mod 23",
        13,
        mod_exp(&big(2), &big(7), &big(23)).map(|v| as_u64(&v)),
    ));
    out.push(check(
        "mod_inv 15 mod 17",
        8,
        mod_inv(&big(15), &big(17)).map(|v| as_u64(&v)),
    ));
    out.push(check(
        "mod_inv 4 mod 15",
        4,
        mod_inv(&big(4), &big(15)).map(|v| as_u64(&v)),
    ));
    out.push(check(
        "lagrange {1,3} j=1 q=17",
        10,
        field(17)
            .lagrange_coefficient(&[1, 3], 1)
            .map(|v| as_u64(v.value())),
    ));
    out.push(check(
        "lagrange {2,3} j=3 q=11",
        9,
        field(11)
            .lagrange_coefficient(&[2, 3], 3)
            .map(|v| as_u64(v.value())),
    ));
}

fn sharing_checks(out: &mut Vec<KatCheck>) {
    let g17 = group17();
    let f17 = g17.field();
    let params = ThresholdParams { t: 1, n: 3 };
    let shared = share_with_coefficients(&f17.from_u64(5), &[f17.from_u64(3)], params, &g17);
    out.push(check(
        "shamir q=17 f(x)=5+3x shares",
        "(1,8),(2,11),(3,14)".to_string(),
        shared.as_ref().map(|(s, _)| pairs(s)).map_err(Clone::clone),
    ));
    let s = |i, v| Share {
        index: i,
        value: f17.from_u64(v),
    };
    out.push(check(
        "shamir q=17 reconstruct {(1,8),(3,14)}",
        5,
        reconstruct(&[s(1, 8), s(3, 14)], &f17).map(|v| as_u64(v.value())),
    ));
    out.push(check(
        "shamir q=17 reconstruct all three",
        5,
        reconstruct(&[s(1, 8), s(2, 11), s(3, 14)], &f17).map(|v| as_u64(v.value())),
    ));

    let g = GroupParams::test_group();
    let f = g.field();
    let feldman = share_with_coefficients(&f.from_u64(7), &[f.from_u64(4)], params, &g);
    out.push(check(
        "feldman commitments 7+4X",
        "[13, 16]".to_string(),
        feldman
            .as_ref()
            .map(|(_, c)| {
                format!(
                    "{:?}",
                    c.0.iter().map(|e| as_u64(e.value())).collect::<Vec<_>>()
                )
            })
            .map_err(Clone::clone),
    ));
    if let Ok((_, commitments)) = feldman {
        let share = |v| Share {
            index: 2,
            value: f.from_u64(v),
        };
        out.push(check(
            "feldman accepts (2,4)",
            true,
            Ok(verify_share(&share(4), &commitments, &g)),
        ));
        out.push(check(
            "feldman rejects (2,5)",
            false,
            Ok(verify_share(&share(5), &commitments, &g)),
        ));
    }
}

/// Signs with the stub challenge `c = 2` over the KAT sharing `7 + 4X`.
fn schnorr_sign(signers: &[(u32, u64)]) -> Result<(u64, u64, bool)> {
    let g = GroupParams::test_group();
    let f = g.field();
    let (pk, shares, _) = keygen_from_polynomial(
        &f.from_u64(7),
        &[f.from_u64(4)],
        ThresholdParams { t: 1, n: 3 },
        &g,
    )?;
    let hasher = FixedChallenge(f.from_u64(2));
    let session = SessionId(1);
    let set: Vec<u32> = signers.iter().map(|(i, _)| *i).collect();
    let mut commitments = Vec::new();
    let mut partials = Vec::new();
    for &(i, k) in signers {
        let nonce = SecretNonce::from_scalar(session, f.from_u64(k))?;
        commitments.push(commit_nonce(i, &nonce, &g));
        let share = &shares[(i - 1) as usize];
        partials.push(sign_round2(share, nonce, &hasher.0, &set, &f)?);
    }
    let sig = aggregate(&commitments, &partials, &g);
    let ok = verify_with(&hasher, &pk, b"kat", &sig);
    Ok((as_u64(sig.r.value()), as_u64(sig.s.value()), ok))
}

fn thresholdsig_checks(out: &mut Vec<KatCheck>) {
    let g = GroupParams::test_group();
    let f = g.field();
    let keygen = keygen_from_polynomial(
        &f.from_u64(7),
        &[f.from_u64(4)],
        ThresholdParams { t: 1, n: 3 },
        &g,
    );
    out.push(check(
        "keygen 7+4X: y and shares",
        "y=13 (1,0),(2,4),(3,8)".to_string(),
        keygen.map(|(pk, shares, _)| {
            let shares: Vec<Share> = shares.iter().map(|s| s.as_share()).collect();
            format!("y={} {}", pk.y.value(), pairs(&shares))
        }),
    ));
    for (k, r) in [(3, 8), (5, 9)] {
        let nonce = SecretNonce::from_scalar(SessionId(1), f.from_u64(k));
        out.push(check(
            &format!("nonce commitment k={k}"),
            r,
            nonce.map(|n| as_u64(commit_nonce(2, &n, &g).r.value())),
        ));
    }
    let partial = |i: u32, x: u64, k: u64| {
        let nonce = SecretNonce::from_scalar(SessionId(1), f.from_u64(k))?;
        let share = crate::thresholdsig::KeyShare {
            index: i,
            value: f.from_u64(x),
        };
        sign_round2(&share, nonce, &f.from_u64(2), &[2, 3], &f).map(|p| as_u64(p.s.value()))
    };
    out.push(check("partial s_2 (x=4, k=3, c=2)", 5, partial(2, 4, 3)));
    out.push(check("partial s_3 (x=8, k=5, c=2)", 6, partial(3, 8, 5)));
    out.push(check(
        "signature {2,3} nonces (3,5) under c=2",
        "R=3 s=0 verify=true".to_string(),
        schnorr_sign(&[(2, 3), (3, 5)]).map(|(r, s, ok)| format!("R={r} s={s} verify={ok}")),
    ));
    for set in [[(1, 4), (2, 6)], [(1, 2), (3, 7)], [(2, 9), (3, 1)]] {
        out.push(check(
            &format!("signature by {{{},{}}} verifies", set[0].0, set[1].0),
            true,
            schnorr_sign(&set).map(|(_, _, ok)| ok),
        ));
    }
}

fn fuzzy_checks(out: &mut Vec<KatCheck>) {
    let decode_str = |bits: &str, r| -> Result<String> {
        let code = CodeParams::new(bits.len() / r, r)?;
        Ok(format!("{:?}", decode(&Bits::parse(bits)?, &code)?))
    };
    out.push(check(
        "decode 111001 r=3",
        "Bits(10)".to_string(),
        decode_str("111001", 3),
    ));
    out.push(check(
        "decode 11000 r=5",
        "Bits(0)".to_string(),
        decode_str("11000", 5),
    ));
    let hd = || -> Result<crate::fuzzy_extractor::HelperData> {
        fe_enroll(
            Bits::parse("10")?,
            Template(Bits::parse("110100")?),
            &CodeParams::new(2, 3)?,
        )
    };
    out.push(check(
        "fe_enroll key=10 w=110100",
        "Bits(001100)".to_string(),
        hd().map(|h| format!("{:?}", h.bits)),
    ));
    out.push(check(
        "fe_reproduce w'=110101",
        "Bits(10)".to_string(),
        hd().and_then(|h| fe_reproduce(&Template(Bits::parse("110101")?), &h))
            .map(|b| format!("{b:?}")),
    ));
    out.push(check(
        "block failure r=5 p=0.1",
        "0.00856".to_string(),
        Ok(format!("{:.5}", block_failure_probability(5, 0.1))),
    ));
}

fn authscore_checks(out: &mut Vec<KatCheck>) {
    let policy = FusionPolicy::default();
    let readings = |scores: &[(Modality, f64)]| -> Result<Vec<ModalityReading>> {
        scores
            .iter()
            .enumerate()
            .map(|(i, (m, s))| ModalityReading::new(format!("dd-{}", i + 1), *m, *s, 0))
            .collect()
    };
    let three = readings(&[
        (Modality::Gait, 0.8),
        (Modality::Location, 0.5),
        (Modality::Heartbeat, 0.0),
    ]);
    let fused = three
        .as_ref()
        .map(|r| fuse_local(r, &policy, 0))
        .map_err(Clone::clone);
    out.push(check(
        "fuse_local (0.8,0.5,0.0)",
        "0.550".to_string(),
        fused
            .as_ref()
            .map(|s| format!("{:.3}", s.value))
            .map_err(Clone::clone),
    ));
    out.push(check(
        "gate 0.55 at theta 0.7",
        false,
        fused.map(|s| gate(&s, &policy)),
    ));
    out.push(check(
        "fuse_local gait only 0.6",
        "0.600".to_string(),
        readings(&[(Modality::Gait, 0.6)])
            .map(|r| format!("{:.3}", fuse_local(&r, &policy, 0).value)),
    ));

    let kp = PheKeypair::from_primes(&big(3), &big(5));
    out.push(check(
        "paillier p=3 q=5: n g lambda mu",
        "15 16 4 4".to_string(),
        kp.as_ref()
            .map(|k| {
                format!(
                    "{} {} {} {}",
                    k.public.n,
                    k.public.generator(),
                    k.lambda(),
                    k.mu()
                )
            })
            .map_err(Clone::clone),
    ));
    let Ok(kp) = kp else { return };
    let pk = &kp.public;
    let c2 = pk.encrypt_with(&big(2), &big(2));
    let c3 = pk.encrypt_with(&big(3), &big(4));
    out.push(check(
        "paillier Enc(2; 2)",
        158,
        c2.as_ref().map(|c| as_u64(&c.0)).map_err(Clone::clone),
    ));
    out.push(check(
        "paillier Enc(3; 4)",
        154,
        c3.as_ref().map(|c| as_u64(&c.0)).map_err(Clone::clone),
    ));
    if let (Ok(c2), Ok(c3)) = (&c2, &c3) {
        let sum = pk.add(c2, c3);
        out.push(check("paillier 158*154 mod 225", 32, Ok(as_u64(&sum.0))));
        out.push(check(
            "paillier Dec(32)",
            5,
            kp.decrypt(&sum).map(|v| as_u64(&v)),
        ));
        out.push(check(
            "paillier Dec(158^3)",
            6,
            kp.decrypt(&pk.scale(c2, &big(3))).map(|v| as_u64(&v)),
        ));
    }
    let round_trip = (0..15u64).all(|m| {
        pk.encrypt_with(&big(m), &big(2))
            .and_then(|c| kp.decrypt(&c))
            .is_ok_and(|d| d == big(m))
    });
    out.push(check(
        "paillier Dec(Enc(m)) for all m < 15",
        true,
        Ok(round_trip),
    ));

    let encrypted_fusion = || -> Result<String> {
        let big_kp = PheKeypair::from_primes(&big(1_000_003), &big(1_000_033))?;
        let quantized = [
            (Modality::Gait, 80u64),
            (Modality::Location, 50),
            (Modality::Heartbeat, 0),
        ];
        let mut cts = BTreeMap::new();
        for (i, (m, v)) in quantized.iter().enumerate() {
            cts.insert(
                *m,
                big_kp.public.encrypt_with(&big(*v), &big(2 + i as u64))?,
            );
        }
        let weights = BTreeMap::from([
            (Modality::Gait, 5),
            (Modality::Location, 3),
            (Modality::Heartbeat, 2),
        ]);
        let fused = fuse_encrypted(&cts, &weights, &big_kp.public)?;
        let raw = big_kp.decrypt(&fused)?;
        let score = decrypt_fused(&fused, 10, &big_kp, BTreeSet::new())?;
        Ok(format!("{raw} {:.2}", score.value))
    };
    out.push(check(
        "encrypted fusion (5,3,2)x(80,50,0)",
        "550 0.55".to_string(),
        encrypted_fusion(),
    ));
}

fn protocol_world() -> Result<World> {
    let g = GroupParams::test_group();
    let f = g.field();
    let ctx = ProtocolContext::new(g.clone()).with_hasher(Arc::new(FixedChallenge(f.from_u64(2))));
    let profiles = [Modality::Gait, Modality::Location, Modality::Heartbeat]
        .into_iter()
        .map(|modality| DeviceProfile {
            modality,
            template: None,
        })
        .collect();
    let e = enroll_with_polynomial(
        "alice",
        CaseStrategy::Case2 {
            pd_holds_share: false,
        },
        ThresholdParams { t: 1, n: 3 },
        profiles,
        &g,
        &f.from_u64(7),
        &[f.from_u64(4)],
    )?;
    Ok(World::from_enrolment(
        e,
        FusionPolicy::default(),
        &ctx,
        "bank",
    ))
}

fn protocol_checks(out: &mut Vec<KatCheck>) {
    use rand::SeedableRng;
    let granted = || -> Result<String> {
        let mut world = protocol_world()?;
        let f = GroupParams::test_group().field();
        if let Some(pd) = world.pd.as_mut() {
            pd.set_live([2, 3]);
        }
        for (i, k) in [(2, 3), (3, 5)] {
            if let Some(dd) = world.dds.get_mut(&i) {
                dd.script_nonces([f.from_u64(k)]);
            }
        }
        for dd in world.dds.values_mut() {
            dd.set_sensor(SensorSample {
                score: 0.9,
                template: None,
            });
        }
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        let result = world.authenticate(&mut rng)?.result;
        let sig = world.transcript().iter().find_map(|m| match &m.payload {
            Payload::AuthResponse(r) => Some(format!(
                "R={} s={}",
                r.signature.r.value(),
                r.signature.s.value()
            )),
            _ => None,
        });
        Ok(format!(
            "{} granted={}",
            sig.unwrap_or_default(),
            result.granted
        ))
    };
    out.push(check(
        "case 2 flow, live {2,3}",
        "R=3 s=0 granted=true".to_string(),
        granted(),
    ));

    let denied = || -> Result<String> {
        let mut world = protocol_world()?;
        for (i, s) in [(1, 0.8), (2, 0.5), (3, 0.0)] {
            if let Some(dd) = world.dds.get_mut(&i) {
                dd.set_sensor(SensorSample {
                    score: s,
                    template: None,
                });
            }
        }
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(2);
        let out = world.authenticate(&mut rng)?;
        let round1 = world
            .transcript()
            .iter()
            .filter(|m| m.type_name() == "SignRound1")
            .count();
        Ok(format!(
            "denied_score={} round1={round1}",
            out.result == AuthResult::denied(DenyReason::Score)
        ))
    };
    out.push(check(
        "case 2 flow, score 0.55",
        "denied_score=true round1=0".to_string(),
        denied(),
    ));
}

/// Runs every known-answer check in a fixed order.
pub fn run_all() -> Vec<KatCheck> {
    let mut out = Vec::new();
    algebra_checks(&mut out);
    sharing_checks(&mut out);
    thresholdsig_checks(&mut out);
    fuzzy_checks(&mut out);
    authscore_checks(&mut out);
    protocol_checks(&mut out);
    out
}
