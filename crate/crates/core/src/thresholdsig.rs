// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-round threshold Schnorr signatures over a [`GroupParams`] group.
//!
//! Round 1: each signer `i` picks a nonce `k_i` and publishes `R_i = g^{k_i}`.
//! The gateway multiplies the commitments into `R` and derives the challenge
//! `c = H(R || y || m) mod q`.
//!
//! Round 2: each signer answers `s_i = k_i + c * lambda_i * x_i`, where
//! `lambda_i` is its Lagrange coefficient over the signer set. The aggregate
//! `(R, s = sum s_i)` satisfies `g^s = R * y^c` and verifies like an ordinary
//! Schnorr signature under `y = g^x`.
//!
//! Signers are assumed honest-but-curious: there are no binding factors, so
//! concurrent sessions with adversarial co-signers are not protected against.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{GroupElement, GroupParams, PrimeField, Scalar};
use crate::error::{Error, Result};
use crate::sharing::{self, FeldmanCommitments, Share, ThresholdParams};

/// Opaque signing-session identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

/// A device's share `x_i = f(i)` of the signing key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyShare {
    pub index: u32,
    pub value: Scalar,
}

impl From<Share> for KeyShare {
    fn from(s: Share) -> Self {
        KeyShare {
            index: s.index,
            value: s.value,
        }
    }
}

impl KeyShare {
    pub fn as_share(&self) -> Share {
        Share {
            index: self.index,
            value: self.value.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPublicKey {
    pub y: GroupElement,
    pub group: GroupParams,
    pub params: ThresholdParams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonceCommitment {
    pub index: u32,
    #[serde(rename = "R")]
    pub r: GroupElement,
    pub session: SessionId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSignature {
    pub index: u32,
    pub s: Scalar,
    pub session: SessionId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(rename = "R")]
    pub r: GroupElement,
    pub s: Scalar,
}

/// Round-1 nonce. Deliberately neither `Clone` nor serializable; it is
/// consumed by [`sign_round2`].
#[derive(Debug, PartialEq, Eq)]
pub struct SecretNonce {
    session: SessionId,
    k: Scalar,
}

impl SecretNonce {
    /// Wraps a caller-chosen nonce. Intended for known-answer tests.
    pub fn from_scalar(session: SessionId, k: Scalar) -> Result<Self> {
        if k.is_zero() {
            return Err(Error::param("nonce must be non-zero"));
        }
        Ok(SecretNonce { session, k })
    }

    pub fn session(&self) -> SessionId {
        self.session
    }
}

/// Maps `(R, y, message)` to the challenge scalar.
pub trait ChallengeHash {
    fn challenge(
        &self,
        r: &GroupElement,
        y: &GroupElement,
        message: &[u8],
        group: &GroupParams,
    ) -> Scalar;
}

/// `SHA-256(enc(R) || enc(y) || message) mod q`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Challenge;

impl ChallengeHash for Sha256Challenge {
    fn challenge(
        &self,
        r: &GroupElement,
        y: &GroupElement,
        message: &[u8],
        group: &GroupParams,
    ) -> Scalar {
        compute_challenge_scalar(r, y, message, group)
    }
}

/// Returns a fixed challenge regardless of input. Known-answer tests only.
#[derive(Clone, Debug)]
pub struct FixedChallenge(pub Scalar);

impl ChallengeHash for FixedChallenge {
    fn challenge(&self, _: &GroupElement, _: &GroupElement, _: &[u8], _: &GroupParams) -> Scalar {
        self.0.clone()
    }
}

pub fn compute_challenge_scalar(
    r: &GroupElement,
    y: &GroupElement,
    message: &[u8],
    group: &GroupParams,
) -> Scalar {
    let mut h = Sha256::new();
    h.update(group.encode(r));
    h.update(group.encode(y));
    h.update(message);
    let digest = h.finalize();
    group
        .field()
        .reduce(&num_bigint::BigUint::from_bytes_be(digest.as_slice()))
}

/// Trusted-dealer key generation. The secret and polynomial are dropped
/// before returning; only shares, commitments and `y` leave.
pub fn keygen_dealer<R: RngCore + ?Sized>(
    params: ThresholdParams,
    group: &GroupParams,
    rng: &mut R,
) -> Result<(GroupPublicKey, Vec<KeyShare>, FeldmanCommitments)> {
    params.validate()?;
    let secret = group.field().random(rng);
    let (shares, commitments) = sharing::share_secret(&secret, params, group, rng)?;
    Ok(finish_keygen(shares, commitments, params, group))
}

/// [`keygen_dealer`] with a caller-fixed polynomial `secret + a_1 X + ...`.
pub fn keygen_from_polynomial(
    secret: &Scalar,
    coefficients: &[Scalar],
    params: ThresholdParams,
    group: &GroupParams,
) -> Result<(GroupPublicKey, Vec<KeyShare>, FeldmanCommitments)> {
    let (shares, commitments) =
        sharing::share_with_coefficients(secret, coefficients, params, group)?;
    Ok(finish_keygen(shares, commitments, params, group))
}

fn finish_keygen(
    shares: Vec<Share>,
    commitments: FeldmanCommitments,
    params: ThresholdParams,
    group: &GroupParams,
) -> (GroupPublicKey, Vec<KeyShare>, FeldmanCommitments) {
    let pk = GroupPublicKey {
        y: commitments.public_value().clone(),
        group: group.clone(),
        params,
    };
    (
        pk,
        shares.into_iter().map(KeyShare::from).collect(),
        commitments,
    )
}

/// Draws `k_i` uniformly from `[1, q)` and commits to it.
pub fn sign_round1<R: RngCore + ?Sized>(
    key_share: &KeyShare,
    session: SessionId,
    group: &GroupParams,
    rng: &mut R,
) -> (SecretNonce, NonceCommitment) {
    let k = group.field().random_nonzero(rng);
    let nonce = SecretNonce { session, k };
    let commitment = commit_nonce(key_share.index, &nonce, group);
    (nonce, commitment)
}

pub fn commit_nonce(index: u32, nonce: &SecretNonce, group: &GroupParams) -> NonceCommitment {
    NonceCommitment {
        index,
        r: group.base_exp(&nonce.k),
        session: nonce.session,
    }
}

/// `s_i = k_i + c * lambda_i * x_i mod q`. Consumes the nonce.
pub fn sign_round2(
    key_share: &KeyShare,
    nonce: SecretNonce,
    c: &Scalar,
    signer_set: &[u32],
    field: &PrimeField,
) -> Result<PartialSignature> {
    if !signer_set.contains(&key_share.index) {
        return Err(Error::param(format!(
            "signer {} is not in the signer set",
            key_share.index
        )));
    }
    let lambda = field.lagrange_coefficient(signer_set, key_share.index)?;
    let weighted = field.mul(c, &field.mul(&lambda, &key_share.value));
    Ok(PartialSignature {
        index: key_share.index,
        s: field.add(&nonce.k, &weighted),
        session: nonce.session,
    })
}

/// Product of the nonce commitments, `R = prod R_i mod p`.
pub fn aggregate_nonce(commitments: &[NonceCommitment], group: &GroupParams) -> GroupElement {
    commitments
        .iter()
        .fold(group.identity(), |acc, c| group.mul(&acc, &c.r))
}

/// Sums partial responses without any threshold or validity checks.
pub fn aggregate(
    commitments: &[NonceCommitment],
    partials: &[PartialSignature],
    group: &GroupParams,
) -> Signature {
    let field = group.field();
    Signature {
        r: aggregate_nonce(commitments, group),
        s: partials
            .iter()
            .fold(field.zero(), |acc, p| field.add(&acc, &p.s)),
    }
}

/// Combines with the production hash. See [`combine_with`].
pub fn combine(
    commitments: &[NonceCommitment],
    partials: &[PartialSignature],
    pubkey: &GroupPublicKey,
    message: &[u8],
) -> Result<Signature> {
    combine_with(&Sha256Challenge, commitments, partials, pubkey, message)
}

/// Checks session and index consistency, aggregates, then verifies the
/// result. A failed verification means at least one partial was bad.
pub fn combine_with<H: ChallengeHash + ?Sized>(
    hasher: &H,
    commitments: &[NonceCommitment],
    partials: &[PartialSignature],
    pubkey: &GroupPublicKey,
    message: &[u8],
) -> Result<Signature> {
    let need = pubkey.params.quorum();
    if partials.len() < need {
        return Err(Error::InsufficientShares {
            have: partials.len(),
            need,
        });
    }
    let sessions: BTreeSet<SessionId> = commitments
        .iter()
        .map(|c| c.session)
        .chain(partials.iter().map(|p| p.session))
        .collect();
    if sessions.len() != 1 {
        return Err(Error::Session(
            "commitments and partials span several sessions".into(),
        ));
    }
    let committed: BTreeSet<u32> = commitments.iter().map(|c| c.index).collect();
    let answered: BTreeSet<u32> = partials.iter().map(|p| p.index).collect();
    if committed.len() != commitments.len() || answered.len() != partials.len() {
        return Err(Error::param("duplicate signer index"));
    }
    if committed != answered {
        return Err(Error::param("commitment and partial signer sets differ"));
    }
    let sig = aggregate(commitments, partials, &pubkey.group);
    if !verify_with(hasher, pubkey, message, &sig) {
        return Err(Error::InvalidPartial);
    }
    Ok(sig)
}

/// `g^s == R * y^c (mod p)` with the production hash.
pub fn verify(pubkey: &GroupPublicKey, message: &[u8], sig: &Signature) -> bool {
    verify_with(&Sha256Challenge, pubkey, message, sig)
}

pub fn verify_with<H: ChallengeHash + ?Sized>(
    hasher: &H,
    pubkey: &GroupPublicKey,
    message: &[u8],
    sig: &Signature,
) -> bool {
    let group = &pubkey.group;
    if sig.s.value() >= group.q() || !group.contains(sig.r.value()) {
        return false;
    }
    let c = hasher.challenge(&sig.r, &pubkey.y, message, group);
    let lhs = group.base_exp(&sig.s);
    let rhs = group.mul(&sig.r, &group.exp(&pubkey.y, c.value()));
    lhs == rhs
}

/// Per-device signing state: the key share plus nonces awaiting round 2.
#[derive(Debug)]
pub struct Signer {
    share: KeyShare,
    pending: BTreeMap<SessionId, SecretNonce>,
    seen: BTreeSet<SessionId>,
}

impl Signer {
    pub fn new(share: KeyShare) -> Self {
        Signer {
            share,
            pending: BTreeMap::new(),
            seen: BTreeSet::new(),
        }
    }

    pub fn index(&self) -> u32 {
        self.share.index
    }

    pub fn share_value(&self) -> &Scalar {
        &self.share.value
    }

    pub fn round1<R: RngCore + ?Sized>(
        &mut self,
        session: SessionId,
        group: &GroupParams,
        rng: &mut R,
    ) -> Result<NonceCommitment> {
        self.claim_session(session)?;
        let (nonce, commitment) = sign_round1(&self.share, session, group, rng);
        self.pending.insert(session, nonce);
        Ok(commitment)
    }

    /// [`Signer::round1`] with a caller-chosen nonce.
    pub fn round1_with_nonce(
        &mut self,
        nonce: SecretNonce,
        group: &GroupParams,
    ) -> Result<NonceCommitment> {
        self.claim_session(nonce.session)?;
        let commitment = commit_nonce(self.share.index, &nonce, group);
        self.pending.insert(nonce.session, nonce);
        Ok(commitment)
    }

    fn claim_session(&mut self, session: SessionId) -> Result<()> {
        if !self.seen.insert(session) {
            return Err(Error::Session(format!(
                "device {} already used session {}",
                self.share.index, session.0
            )));
        }
        Ok(())
    }

    /// Answers the challenge and erases the session nonce.
    pub fn round2(
        &mut self,
        session: SessionId,
        c: &Scalar,
        signer_set: &[u32],
        field: &PrimeField,
    ) -> Result<PartialSignature> {
        let nonce = self
            .pending
            .remove(&session)
            .ok_or_else(|| Error::Session(format!("no pending nonce for session {}", session.0)))?;
        sign_round2(&self.share, nonce, c, signer_set, field)
    }

    /// Drops a pending nonce without signing.
    pub fn abandon(&mut self, session: SessionId) {
        self.pending.remove(&session);
    }

    pub fn has_pending(&self, session: SessionId) -> bool {
        self.pending.contains_key(&session)
    }

    pub fn pending_sessions(&self) -> usize {
        self.pending.len()
    }

    pub fn into_share(self) -> KeyShare {
        self.share
    }
}
