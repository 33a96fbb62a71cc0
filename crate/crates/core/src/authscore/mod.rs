// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Behavioural score fusion and the key-usage gate.
//!
//! Readings older than `staleness_max` ticks are dropped, readings of the
//! same modality are averaged, and the modality scores are combined as a
//! weighted mean renormalized over the modalities actually present. A
//! missing device therefore shifts weight to the others instead of dragging
//! the score to zero.
//!
//! The cloud path performs the same weighted sum on Paillier ciphertexts of
//! scores quantized to `0..=100`, so the fusion server never sees plaintext.

pub mod paillier;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use paillier::{PheCiphertext, PheKeypair, PhePublicKey};

/// Quantization resolution of the encrypted path.
pub const QUANT_SCALE: u64 = 100;

/// Resolution used when turning real weights into integer weights.
pub const WEIGHT_SCALE: f64 = 10_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Gait,
    Location,
    Heartbeat,
    Custom,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Gait,
        Modality::Location,
        Modality::Heartbeat,
        Modality::Custom,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityReading {
    pub device_id: String,
    pub modality: Modality,
    pub score: f64,
    pub timestamp: u64,
}

impl ModalityReading {
    pub fn new(
        device_id: impl Into<String>,
        modality: Modality,
        score: f64,
        timestamp: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::param(format!("score {score} is outside [0, 1]")));
        }
        Ok(ModalityReading {
            device_id: device_id.into(),
            modality,
            score,
            timestamp,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionPolicy {
    pub weights: BTreeMap<Modality, f64>,
    pub theta: f64,
    pub staleness_max: u64,
}

impl Default for FusionPolicy {
    fn default() -> Self {
        FusionPolicy {
            weights: BTreeMap::from([
                (Modality::Gait, 0.5),
                (Modality::Location, 0.3),
                (Modality::Heartbeat, 0.2),
            ]),
            theta: 0.7,
            staleness_max: 10,
        }
    }
}

impl FusionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Policy(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !self.weights.values().any(|w| *w > 0.0) {
            return Err(Error::Policy("at least one weight must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Policy(format!(
                "theta {} is outside [0, 1]",
                self.theta
            )));
        }
        Ok(())
    }

    /// Weights scaled by [`WEIGHT_SCALE`], rounded and divided by their gcd.
    pub fn integer_weights(&self) -> BTreeMap<Modality, u64> {
        let scaled: BTreeMap<Modality, u64> = self
            .weights
            .iter()
            .map(|(m, w)| (*m, (w * WEIGHT_SCALE).round() as u64))
            .filter(|(_, w)| *w > 0)
            .collect();
        let g = scaled.values().fold(0u64, |acc, w| acc.gcd(w)).max(1);
        scaled.into_iter().map(|(m, w)| (m, w / g)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Local,
    Cloud,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthScore {
    pub value: f64,
    pub contributing: BTreeSet<String>,
    pub mode: ScoreMode,
}

/// Mean score per weighted modality over fresh readings, plus the devices that contributed.
pub fn modality_scores(
    readings: &[ModalityReading],
    policy: &FusionPolicy,
    now: u64,
) -> (BTreeMap<Modality, f64>, BTreeSet<String>) {
    let mut sums: BTreeMap<Modality, (f64, u32)> = BTreeMap::new();
    let mut devices = BTreeSet::new();
    for r in readings {
        let fresh = now.saturating_sub(r.timestamp) <= policy.staleness_max;
        let weighted = policy.weights.get(&r.modality).is_some_and(|w| *w > 0.0);
        if fresh && weighted {
            let e = sums.entry(r.modality).or_insert((0.0, 0));
            e.0 += r.score;
            e.1 += 1;
            devices.insert(r.device_id.clone());
        }
    }
    let means = sums
        .into_iter()
        .map(|(m, (sum, count))| (m, sum / f64::from(count)))
        .collect();
    (means, devices)
}

pub fn fuse_local(readings: &[ModalityReading], policy: &FusionPolicy, now: u64) -> AuthScore {
    let (scores, contributing) = modality_scores(readings, policy, now);
    let (num, den) = scores.iter().fold((0.0, 0.0), |(num, den), (m, s)| {
        let w = policy.weights[m];
        (num + w * s, den + w)
    });
    let value = if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    };
    AuthScore {
        value,
        contributing,
        mode: ScoreMode::Local,
    }
}

/// `value >= theta`; ties pass.
pub fn gate(score: &AuthScore, policy: &FusionPolicy) -> bool {
    score.value >= policy.theta
}

/// `round_half_up(score * 100)`, clamped to `0..=100`.
pub fn quantize(score: f64) -> u64 {
    ((score * QUANT_SCALE as f64 + 0.5).floor().max(0.0) as u64).min(QUANT_SCALE)
}

/// Encrypts each quantized modality score under the user's public key.
pub fn encrypt_scores<R: RngCore + ?Sized>(
    scores: &BTreeMap<Modality, f64>,
    pk: &PhePublicKey,
    rng: &mut R,
) -> Result<BTreeMap<Modality, PheCiphertext>> {
    scores
        .iter()
        .map(|(m, s)| Ok((*m, pk.encrypt(&BigUint::from(quantize(*s)), rng)?)))
        .collect()
}

/// `prod c_m^{w_m} mod n^2`, i.e. an encryption of `sum w_m * score_m`.
pub fn fuse_encrypted(
    encrypted: &BTreeMap<Modality, PheCiphertext>,
    weights: &BTreeMap<Modality, u64>,
    pk: &PhePublicKey,
) -> Result<PheCiphertext> {
    let total = present_weight(encrypted.keys(), weights);
    if total == 0 {
        return Err(Error::param(
            "weights of the present modalities sum to zero",
        ));
    }
    Ok(encrypted.iter().fold(pk.zero(), |acc, (m, c)| {
        match weights.get(m).copied().filter(|w| *w > 0) {
            Some(w) => pk.add(&acc, &pk.scale(c, &BigUint::from(w))),
            None => acc,
        }
    }))
}

/// Sum of the integer weights of the given modalities.
pub fn present_weight<'a>(
    present: impl IntoIterator<Item = &'a Modality>,
    weights: &BTreeMap<Modality, u64>,
) -> u64 {
    present.into_iter().filter_map(|m| weights.get(m)).sum()
}

/// Decrypts an encrypted fusion result and maps it back to `[0, 1]`.
pub fn decrypt_fused(
    fused: &PheCiphertext,
    weight_total: u64,
    keypair: &PheKeypair,
    contributing: BTreeSet<String>,
) -> Result<AuthScore> {
    if weight_total == 0 {
        return Err(Error::param("weight total is zero"));
    }
    let raw = keypair
        .decrypt(fused)?
        .to_u64()
        .ok_or_else(|| Error::param("decrypted fusion total does not fit in u64"))?;
    let value = raw as f64 / (weight_total * QUANT_SCALE) as f64;
    Ok(AuthScore {
        value: value.clamp(0.0, 1.0),
        contributing,
        mode: ScoreMode::Cloud,
    })
}
