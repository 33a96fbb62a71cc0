// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 10. Each criterion runs in isolation, is timed
//! against its budget and prints one PASS/FAIL line straight to stderr so the
//! lines survive output capture. The single test fails if any criterion does.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use fas_core::algebra::GroupParams;
use fas_core::authscore::paillier::PheKeypair;
use fas_core::authscore::{
    decrypt_fused, encrypt_scores, fuse_encrypted, fuse_local, modality_scores, present_weight,
    FusionPolicy, Modality, ModalityReading,
};
use fas_core::exec::ExecMode;
use fas_core::fuzzy_extractor::{fe_enroll, Bits, CodeParams, Template};
use fas_core::protocol::{CaseStrategy, ScoringMode};
use fas_core::sharing::{
    reconstruct, share_with_coefficients, verify_share, Share, ThresholdParams,
};
use fas_core::simulator::{
    estimate_share_recovery_failure, simulate, AdversaryKind, ScenarioConfig,
};
use fas_core::thresholdsig::{
    aggregate, commit_nonce, keygen_dealer, keygen_from_polynomial, sign_round1, sign_round2,
    verify, verify_with, FixedChallenge, KeyShare, SecretNonce, SessionId,
};

type Check = Result<String, String>;

/// (id, name, time budget in seconds, body)
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Order-17 subgroup of `Z_103^*`, generated by `2^6 = 64`.
fn group17() -> GroupParams {
    GroupParams::new(big(103), big(17), big(64)).unwrap()
}

fn c1_shamir_secrecy() -> Check {
    let g = group17();
    let f = g.field();
    let params = ThresholdParams { t: 1, n: 3 };
    // (index, share value) -> secrets consistent with it
    let mut consistent: BTreeMap<(u32, u64), BTreeSet<u64>> = BTreeMap::new();
    let mut reconstructions = 0;
    for secret in 0..17u64 {
        for a1 in 0..17u64 {
            let (shares, _) =
                share_with_coefficients(&f.from_u64(secret), &[f.from_u64(a1)], params, &g)
                    .map_err(|e| e.to_string())?;
            for s in &shares {
                let v = u64::try_from(s.value.value()).unwrap();
                consistent.entry((s.index, v)).or_default().insert(secret);
            }
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let got = reconstruct(&[shares[i].clone(), shares[j].clone()], &f)
                    .map_err(|e| e.to_string())?;
                ensure(
                    got == f.from_u64(secret),
                    format!("pair ({i},{j}) of secret {secret} reconstructs wrongly"),
                )?;
                reconstructions += 1;
            }
        }
    }
    ensure(
        consistent.len() == 3 * 17,
        "every (index, value) share must occur",
    )?;
    for ((i, v), secrets) in &consistent {
        ensure(
            secrets.len() == 17,
            format!(
                "share ({i},{v}) is consistent with only {} secrets",
                secrets.len()
            ),
        )?;
    }
    Ok(format!("51 single shares each consistent with 17/17 secrets; {reconstructions} pair reconstructions exact"))
}

fn c2_feldman() -> Check {
    let g = GroupParams::test_group();
    let f = g.field();
    let (_, commitments) = share_with_coefficients(
        &f.from_u64(7),
        &[f.from_u64(4)],
        ThresholdParams { t: 1, n: 3 },
        &g,
    )
    .map_err(|e| e.to_string())?;
    let values: Vec<BigUint> = commitments.0.iter().map(|c| c.value().clone()).collect();
    ensure(
        values == [big(13), big(16)],
        format!("commitments {values:?}"),
    )?;
    let share = |v| Share {
        index: 2,
        value: f.from_u64(v),
    };
    ensure(verify_share(&share(4), &commitments, &g), "(2,4) rejected")?;
    ensure(!verify_share(&share(5), &commitments, &g), "(2,5) accepted")?;
    Ok("commitments [13,16]; (2,4) accepted; (2,5) rejected".into())
}

fn c3_schnorr_kat() -> Check {
    let g = GroupParams::test_group();
    let f = g.field();
    let (pk, shares, _) = keygen_from_polynomial(
        &f.from_u64(7),
        &[f.from_u64(4)],
        ThresholdParams { t: 1, n: 3 },
        &g,
    )
    .map_err(|e| e.to_string())?;
    let hasher = FixedChallenge(f.from_u64(2));
    let sign = |set: [(usize, u64); 2]| -> Result<(BigUint, BigUint, bool), String> {
        let indices: Vec<u32> = set.iter().map(|(i, _)| *i as u32).collect();
        let mut commits = Vec::new();
        let mut partials = Vec::new();
        for (i, k) in set {
            let nonce =
                SecretNonce::from_scalar(SessionId(9), f.from_u64(k)).map_err(|e| e.to_string())?;
            commits.push(commit_nonce(i as u32, &nonce, &g));
            partials.push(
                sign_round2(&shares[i - 1], nonce, &hasher.0, &indices, &f)
                    .map_err(|e| e.to_string())?,
            );
        }
        let sig = aggregate(&commits, &partials, &g);
        let ok = verify_with(&hasher, &pk, b"acceptance", &sig);
        Ok((sig.r.value().clone(), sig.s.value().clone(), ok))
    };
    let (r, s, ok) = sign([(2, 3), (3, 5)])?;
    ensure(
        r == big(3) && s == big(0) && ok,
        format!("got R={r} s={s} verify={ok}"),
    )?;
    for set in [[(1, 2), (2, 7)], [(1, 4), (3, 9)], [(2, 10), (3, 1)]] {
        let (_, _, ok) = sign(set)?;
        ensure(
            ok,
            format!("subset {{{},{}}} fails to verify", set[0].0, set[1].0),
        )?;
    }
    Ok("signature (R=3, s=0) verifies; all three 2-subsets verify".into())
}

fn c4_threshold_soundness() -> Check {
    let g = GroupParams::sim_q32();
    ensure(g.q() >= &big(1 << 31), "q below 2^31")?;
    let f = g.field();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut rejected = 0;
    for trial in 0..200u64 {
        let t = 1 + (trial % 4) as u32;
        let n = t + 2;
        let (pk, shares, _) =
            keygen_dealer(ThresholdParams { t, n }, &g, &mut rng).map_err(|e| e.to_string())?;
        // t signers, chosen at random
        let picks = rand::seq::index::sample(&mut rng, n as usize, t as usize);
        let signers: Vec<&KeyShare> = picks.iter().map(|i| &shares[i]).collect();
        let set: Vec<u32> = signers.iter().map(|s| s.index).collect();
        let session = SessionId(trial);
        let round1: Vec<_> = signers
            .iter()
            .map(|s| sign_round1(s, session, &g, &mut rng))
            .collect();
        let commits: Vec<_> = round1.iter().map(|(_, c)| c.clone()).collect();
        let msg = format!("soundness-{trial}");
        let r = fas_core::thresholdsig::aggregate_nonce(&commits, &g);
        let c = fas_core::thresholdsig::compute_challenge_scalar(&r, &pk.y, msg.as_bytes(), &g);
        let mut partials = Vec::new();
        for (s, (nonce, _)) in signers.iter().zip(round1) {
            partials.push(sign_round2(s, nonce, &c, &set, &f).map_err(|e| e.to_string())?);
        }
        let sig = aggregate(&commits, &partials, &g);
        if !verify(&pk, msg.as_bytes(), &sig) {
            rejected += 1;
        }
    }
    ensure(
        rejected == 200,
        format!("only {rejected}/200 t-signer signatures rejected"),
    )?;
    Ok("200/200 t-signer signatures rejected".into())
}

fn c5_fuzzy_rate() -> Check {
    // independent oracle: P(>= 3 of 5 flips) summed by hand
    let p: f64 = 0.1;
    let block = 10.0 * p.powi(3) * (1.0 - p).powi(2) + 5.0 * p.powi(4) * (1.0 - p) + p.powi(5);
    let oracle = 1.0 - (1.0 - block).powi(16);
    ensure((oracle - 0.1285).abs() < 5e-4, format!("oracle {oracle}"))?;
    let code = CodeParams::new(16, 5).map_err(|e| e.to_string())?;
    let got = estimate_share_recovery_failure(code, 0.1, 20_000, 5, ExecMode::default())
        .map_err(|e| e.to_string())?;
    ensure(
        (got - 0.1285).abs() <= 0.02,
        format!("empirical {got:.4} outside 0.1285 +/- 0.02"),
    )?;
    Ok(format!(
        "empirical {got:.4} vs oracle {oracle:.4} over 20000 trials"
    ))
}

fn c6_uncoupling() -> Check {
    let code = CodeParams::new(8, 1).map_err(|e| e.to_string())?;
    let keys = [
        Bits::parse("10100101").unwrap(),
        Bits::parse("00111100").unwrap(),
    ];
    let mut histograms = Vec::new();
    for key in &keys {
        let mut hist: BTreeMap<String, u32> = BTreeMap::new();
        for w in 0u32..256 {
            let template: Bits = (0..8).rev().map(|i| (w >> i) & 1 == 1).collect();
            let hd =
                fe_enroll(key.clone(), Template(template), &code).map_err(|e| e.to_string())?;
            *hist.entry(hd.bits.to_hex()).or_default() += 1;
        }
        ensure(
            hist.len() == 256 && hist.values().all(|&c| c == 1),
            "helper data is not a bijection of the template",
        )?;
        histograms.push(hist);
    }
    ensure(
        histograms[0] == histograms[1],
        "HD distributions differ between keys",
    )?;
    Ok("both keys map all 256 templates onto all 256 HD values exactly once".into())
}

fn c7_paillier() -> Check {
    let kp = PheKeypair::from_primes(&big(3), &big(5)).map_err(|e| e.to_string())?;
    let pk = &kp.public;
    let c2 = pk
        .encrypt_with(&big(2), &big(2))
        .map_err(|e| e.to_string())?;
    let c3 = pk
        .encrypt_with(&big(3), &big(4))
        .map_err(|e| e.to_string())?;
    ensure(
        c2.0 == big(158) && c3.0 == big(154),
        format!("Enc gave {} and {}", c2.0, c3.0),
    )?;
    let sum = pk.add(&c2, &c3);
    ensure(sum.0 == big(32), format!("product {}", sum.0))?;
    ensure(
        kp.decrypt(&sum).map_err(|e| e.to_string())? == big(5),
        "Dec(32) != 5",
    )?;

    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let kp = PheKeypair::generate(64, &mut rng).map_err(|e| e.to_string())?;
    let pk = &kp.public;
    ensure(
        pk.n.bits() >= 63,
        format!("modulus has {} bits", pk.n.bits()),
    )?;
    for _ in 0..1000 {
        let a = rng.gen_biguint_below(&pk.n);
        let b = rng.gen_biguint_below(&pk.n);
        let k = rng.gen_biguint_below(&pk.n);
        let ca = pk.encrypt(&a, &mut rng).map_err(|e| e.to_string())?;
        let cb = pk.encrypt(&b, &mut rng).map_err(|e| e.to_string())?;
        let added = kp.decrypt(&pk.add(&ca, &cb)).map_err(|e| e.to_string())?;
        ensure(added == (&a + &b) % &pk.n, "additive homomorphism fails")?;
        let scaled = kp.decrypt(&pk.scale(&ca, &k)).map_err(|e| e.to_string())?;
        ensure(scaled == (&a * &k) % &pk.n, "scalar homomorphism fails")?;
    }
    Ok(format!(
        "n=15 KAT exact; 1000 random triples hold at {} bits",
        pk.n.bits()
    ))
}

fn case3_config(trials: u64, seed: u64) -> ScenarioConfig {
    let case = CaseStrategy::Case3 {
        pd_holds_share: false,
        r: 5,
    };
    let mut c = ScenarioConfig::new(case, 2, 5, seed, trials);
    c.noise = 0.02;
    c
}

fn c8_end_to_end() -> Check {
    let genuine = case3_config(1000, 8);
    ensure(genuine.policy.theta == 0.7, "theta must be 0.7")?;
    let r = simulate(&genuine, ExecMode::default())
        .map_err(|e| e.to_string())?
        .report;
    let grant = r.grant_rate.unwrap_or(0.0);
    ensure(grant >= 0.99, format!("grant rate {grant}"))?;

    let mut stolen = case3_config(1000, 81);
    stolen.adversary = AdversaryKind::StolenK { k: 2 };
    let s = simulate(&stolen, ExecMode::default())
        .map_err(|e| e.to_string())?
        .report;
    ensure(
        s.granted == 0 && s.adversarial_trials == 1000,
        format!("stolen_k=2 granted {}/{}", s.granted, s.adversarial_trials),
    )?;

    let mut tamper = case3_config(1000, 82);
    tamper.adversary = AdversaryKind::TamperPartial;
    let t = simulate(&tamper, ExecMode::default())
        .map_err(|e| e.to_string())?
        .report;
    ensure(
        t.denied == 1000,
        format!("tamper denied {}/1000 ({:?})", t.denied, t.deny_reasons),
    )?;

    let mut replay = case3_config(1000, 83);
    replay.adversary = AdversaryKind::Replay;
    let p = simulate(&replay, ExecMode::default())
        .map_err(|e| e.to_string())?
        .report;
    let replay_denials = p.deny_reasons.get("replay").copied().unwrap_or(0);
    ensure(p.granted == 0, format!("replay granted {}/1000", p.granted))?;
    Ok(format!(
        "grant {grant:.3}; stolen_k=2 FAR 0/1000; tamper denied 1000/1000 ({:?}); replay denied 1000/1000 ({replay_denials} as replay)",
        t.deny_reasons
    ))
}

fn c9_determinism() -> Check {
    let mut c = case3_config(200, 9);
    c.adversary = AdversaryKind::TamperPartial;
    let a = simulate(&c, ExecMode::default()).map_err(|e| e.to_string())?;
    let b = simulate(&c, ExecMode::default()).map_err(|e| e.to_string())?;
    let s = simulate(&c, ExecMode::Sequential).map_err(|e| e.to_string())?;
    ensure(
        a.report.to_json() == b.report.to_json(),
        "reports differ between runs",
    )?;
    ensure(
        a.transcript == b.transcript,
        "transcripts differ between runs",
    )?;
    ensure(
        a.report.to_json() == s.report.to_json(),
        "parallel and sequential reports differ",
    )?;
    Ok(format!(
        "byte-identical reports, digest {}",
        &a.report.transcript_digest[..16]
    ))
}

fn c10_cloud_privacy() -> Check {
    let mut c = case3_config(200, 10);
    c.scoring = ScoringMode::CloudEncrypted;
    c.adversary = AdversaryKind::Eavesdrop;
    let r = simulate(&c, ExecMode::default())
        .map_err(|e| e.to_string())?
        .report;
    let e = r.eavesdrop.ok_or("no eavesdrop report")?;
    ensure(e.external_messages > 0, "eavesdropper saw nothing")?;
    ensure(
        e.plaintext_score_values == 0,
        format!("{} plaintext scores on the wire", e.plaintext_score_values),
    )?;
    ensure(
        e.fasp_plaintext_scores_held == 0,
        format!(
            "FASP holds {} plaintext scores",
            e.fasp_plaintext_scores_held
        ),
    )?;
    ensure(
        r.message_counts.get("ScoreRequest").copied().unwrap_or(0) == 200,
        "FASP was not consulted",
    )?;

    let policy = FusionPolicy::default();
    let weights = policy.integer_weights();
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let kp = PheKeypair::generate(128, &mut rng).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for set in 0..500 {
        let readings: Vec<ModalityReading> = (0..rng.gen_range(1..=6))
            .map(|i| {
                let m =
                    [Modality::Gait, Modality::Location, Modality::Heartbeat][rng.gen_range(0..3)];
                ModalityReading::new(format!("dd-{set}-{i}"), m, rng.gen_range(0.0..=1.0), 0)
                    .unwrap()
            })
            .collect();
        let local = fuse_local(&readings, &policy, 0).value;
        let (scores, contributing) = modality_scores(&readings, &policy, 0);
        let encrypted = encrypt_scores(&scores, &kp.public, &mut rng).map_err(|e| e.to_string())?;
        let total = present_weight(encrypted.keys(), &weights);
        let fused = fuse_encrypted(&encrypted, &weights, &kp.public).map_err(|e| e.to_string())?;
        let cloud = decrypt_fused(&fused, total, &kp, contributing)
            .map_err(|e| e.to_string())?
            .value;
        worst = worst.max((local - cloud).abs());
    }
    ensure(
        worst <= 0.01,
        format!("local and cloud fusion differ by {worst}"),
    )?;
    Ok(format!(
        "0 plaintext scores seen or held; fusion max |local - cloud| = {worst:.4} over 500 sets"
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "Shamir perfect secrecy (q=17, t=1)",
            1,
            c1_shamir_secrecy,
        ),
        (2, "Feldman KAT", 1, c2_feldman),
        (3, "threshold Schnorr KAT", 1, c3_schnorr_kat),
        (
            4,
            "threshold soundness (t partials never verify)",
            30,
            c4_threshold_soundness,
        ),
        (
            5,
            "fuzzy extractor analytic failure rate",
            30,
            c5_fuzzy_rate,
        ),
        (6, "uncoupling exactness at L=8", 1, c6_uncoupling),
        (7, "Paillier KAT and homomorphism", 10, c7_paillier),
        (8, "end-to-end case 3 scenario", 60, c8_end_to_end),
        (9, "determinism", 60, c9_determinism),
        (
            10,
            "cloud privacy and fusion agreement",
            60,
            c10_cloud_privacy,
        ),
    ];
    let mut failures = Vec::new();
    let mut stderr = std::io::stderr();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > Duration::from_secs(budget) => Err(format!(
                "{detail}; took {:.2}s, budget {budget}s",
                elapsed.as_secs_f64()
            )),
            other => other,
        };
        let line = match &result {
            Ok(detail) => format!(
                "criterion {id:>2} PASS  {name} [{:.2}s]: {detail}",
                elapsed.as_secs_f64()
            ),
            Err(why) => format!(
                "criterion {id:>2} FAIL  {name} [{:.2}s]: {why}",
                elapsed.as_secs_f64()
            ),
        };
        let _ = writeln!(stderr, "{line}");
        if result.is_err() {
            failures.push(line);
        }
    }
    assert!(
        failures.is_empty(),
        "failed criteria:\n{}",
        failures.join("\n")
    );
}
