// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::enrol::{PdEnrolment, PdKey};
use super::message::{
    AuthResponse, AuthResult, Challenge, DenyReason, EntityId, Message, Payload, Round1, Round2,
    ScoreRequest, ScoreResponse,
};
use super::{CaseStrategy, ProtocolContext, ScoringMode};
use crate::algebra::GroupElement;
use crate::authscore::paillier::PheKeypair;
use crate::authscore::{
    decrypt_fused, encrypt_scores, fuse_local, gate, modality_scores, AuthScore, FusionPolicy,
    ModalityReading, ScoreMode,
};
use crate::error::{Error, Result};
use crate::fuzzy_extractor::HelperData;
use crate::sharing::FeldmanCommitments;
use crate::thresholdsig::{
    aggregate_nonce, combine_with, GroupPublicKey, NonceCommitment, PartialSignature, SessionId,
    Signature, Signer,
};

/// Where a PD-side session currently stands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    AwaitChallenge,
    CollectReadings,
    AwaitScore,
    Round1,
    Round2,
    AwaitResult,
    Done,
}

#[derive(Debug)]
struct Session {
    sp: EntityId,
    phase: SessionPhase,
    challenge: Option<Challenge>,
    expected: BTreeSet<u32>,
    readings: Vec<ModalityReading>,
    committed: BTreeMap<u32, NonceCommitment>,
    declined: BTreeSet<u32>,
    selected: Vec<u32>,
    partials: BTreeMap<u32, PartialSignature>,
    score: Option<f64>,
    outcome: Option<AuthResult>,
}

/// The user's gateway: dealer at enrolment, then coordinator of every
/// authentication. Holds helper data and, depending on the case, the key or
/// its own share.
#[derive(Debug)]
pub struct PersonalDevice {
    user_id: String,
    ctx: ProtocolContext,
    case: CaseStrategy,
    public_key: GroupPublicKey,
    signer: Option<Signer>,
    commitments: FeldmanCommitments,
    helpers: BTreeMap<u32, HelperData>,
    policy: FusionPolicy,
    scoring: ScoringMode,
    paillier: Option<PheKeypair>,
    live: BTreeSet<u32>,
    sessions: BTreeMap<SessionId, Session>,
    log: Vec<Message>,
}

impl PersonalDevice {
    /// `live` starts as every enrolled DD index.
    pub fn new(
        user_id: impl Into<String>,
        enrolment: PdEnrolment,
        dd_indices: impl IntoIterator<Item = u32>,
        policy: FusionPolicy,
        ctx: ProtocolContext,
    ) -> Self {
        let signer = match enrolment.key {
            PdKey::Whole(k) | PdKey::Threshold(Some(k)) => Some(Signer::new(k)),
            PdKey::Threshold(None) => None,
        };
        PersonalDevice {
            user_id: user_id.into(),
            ctx,
            case: enrolment.case,
            public_key: enrolment.public_key,
            signer,
            commitments: enrolment.commitments,
            helpers: enrolment.helpers,
            policy,
            scoring: ScoringMode::Local,
            paillier: None,
            live: dd_indices.into_iter().collect(),
            sessions: BTreeMap::new(),
            log: Vec::new(),
        }
    }

    /// Cloud-encrypted scoring needs a Paillier keypair.
    pub fn set_scoring(&mut self, mode: ScoringMode, paillier: Option<PheKeypair>) -> Result<()> {
        if mode == ScoringMode::CloudEncrypted && paillier.is_none() {
            return Err(Error::param("encrypted scoring needs a Paillier keypair"));
        }
        self.scoring = mode;
        self.paillier = paillier;
        Ok(())
    }

    /// DDs the PD currently believes are reachable.
    pub fn set_live(&mut self, live: impl IntoIterator<Item = u32>) {
        self.live = live.into_iter().collect();
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn case(&self) -> CaseStrategy {
        self.case
    }

    pub fn public_key(&self) -> &GroupPublicKey {
        &self.public_key
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }

    pub fn phase(&self, session: SessionId) -> Option<SessionPhase> {
        self.sessions.get(&session).map(|s| s.phase)
    }

    pub fn outcome(&self, session: SessionId) -> Option<AuthResult> {
        self.sessions.get(&session).and_then(|s| s.outcome)
    }

    /// Fused score the gate saw, if the session got that far.
    pub fn score(&self, session: SessionId) -> Option<f64> {
        self.sessions.get(&session).and_then(|s| s.score)
    }

    /// Every secret scalar in persistent state, for hygiene checks.
    pub fn secret_scalars(&self) -> Vec<&crate::algebra::Scalar> {
        self.signer.iter().map(|s| s.share_value()).collect()
    }

    pub fn helper_count(&self) -> usize {
        self.helpers.len()
    }

    /// Opens a session towards `sp_id`.
    pub fn start(&mut self, sp_id: &str, session: SessionId) -> Result<Message> {
        if self.sessions.contains_key(&session) {
            return Err(Error::Session(format!(
                "session {} already exists",
                session.0
            )));
        }
        let sp = EntityId::Sp(sp_id.to_string());
        self.sessions.insert(
            session,
            Session {
                sp: sp.clone(),
                phase: SessionPhase::AwaitChallenge,
                challenge: None,
                expected: BTreeSet::new(),
                readings: Vec::new(),
                committed: BTreeMap::new(),
                declined: BTreeSet::new(),
                selected: Vec::new(),
                partials: BTreeMap::new(),
                score: None,
                outcome: None,
            },
        );
        let msg = Message::new(
            EntityId::Pd,
            sp,
            session,
            Payload::AuthRequest {
                user_id: self.user_id.clone(),
            },
        );
        self.log.push(msg.clone());
        Ok(msg)
    }

    pub fn handle<R: RngCore + ?Sized>(
        &mut self,
        msg: Message,
        now: u64,
        rng: &mut R,
    ) -> Vec<Message> {
        self.log.push(msg.clone());
        let out = self.dispatch(msg, now, rng);
        self.log.extend(out.iter().cloned());
        out
    }

    /// Called when the network is idle: every waiting session proceeds with
    /// what it has.
    pub fn on_quiescent<R: RngCore + ?Sized>(&mut self, now: u64, rng: &mut R) -> Vec<Message> {
        let waiting: Vec<(SessionId, SessionPhase)> = self
            .sessions
            .iter()
            .filter(|(_, s)| s.phase != SessionPhase::Done)
            .map(|(id, s)| (*id, s.phase))
            .collect();
        let mut out = Vec::new();
        for (id, phase) in waiting {
            out.extend(match phase {
                SessionPhase::CollectReadings => self.score_readings(id, now, rng),
                SessionPhase::AwaitScore => self.abort(id, DenyReason::Score),
                SessionPhase::Round1 => self.start_round2(id),
                SessionPhase::Round2 => self.finish_signing(id),
                SessionPhase::AwaitChallenge | SessionPhase::AwaitResult => {
                    self.finish(id, AuthResult::denied(DenyReason::Incomplete));
                    Vec::new()
                }
                SessionPhase::Done => Vec::new(),
            });
        }
        self.log.extend(out.iter().cloned());
        out
    }

    fn dispatch<R: RngCore + ?Sized>(
        &mut self,
        msg: Message,
        now: u64,
        rng: &mut R,
    ) -> Vec<Message> {
        let id = msg.session;
        let Some(session) = self.sessions.get_mut(&id) else {
            return Vec::new();
        };
        let from_sp = msg.from == session.sp;
        match (session.phase, msg.payload, msg.from) {
            (SessionPhase::AwaitChallenge, Payload::Challenge(c), _) if from_sp => {
                self.on_challenge(id, c)
            }
            (SessionPhase::CollectReadings, Payload::SensorReading(r), EntityId::Dd(i))
                if session.expected.contains(&i) && r.device_id == EntityId::Dd(i).to_string() =>
            {
                session.expected.remove(&i);
                session.readings.push(r);
                if session.expected.is_empty() {
                    self.score_readings(id, now, rng)
                } else {
                    Vec::new()
                }
            }
            (SessionPhase::AwaitScore, Payload::ScoreResponse(resp), EntityId::Fasp) => {
                self.on_score_response(id, resp, rng)
            }
            (SessionPhase::Round1, Payload::SignRound1(r1), EntityId::Dd(i))
                if session.expected.contains(&i) =>
            {
                session.expected.remove(&i);
                match r1 {
                    Round1::Commit(c) if c.index == i && c.session == id => {
                        session.committed.insert(i, c);
                    }
                    _ => {
                        session.declined.insert(i);
                    }
                }
                if session.expected.is_empty() {
                    self.start_round2(id)
                } else {
                    Vec::new()
                }
            }
            (SessionPhase::Round2, Payload::SignRound2(Round2::Partial(p)), EntityId::Dd(i))
                if session.expected.contains(&i) && p.index == i =>
            {
                session.expected.remove(&i);
                session.partials.insert(i, p);
                if session.expected.is_empty() {
                    self.finish_signing(id)
                } else {
                    Vec::new()
                }
            }
            (
                SessionPhase::AwaitChallenge | SessionPhase::AwaitResult,
                Payload::AuthResult(r),
                _,
            ) if from_sp => {
                self.finish(id, r);
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    fn on_challenge(&mut self, id: SessionId, challenge: Challenge) -> Vec<Message> {
        let live = self.live.clone();
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.phase = SessionPhase::CollectReadings;
        session.expected = live.clone();
        session.challenge = Some(challenge.clone());
        live.into_iter()
            .map(|i| {
                Message::new(
                    EntityId::Pd,
                    EntityId::Dd(i),
                    id,
                    Payload::Challenge(challenge.clone()),
                )
            })
            .collect()
    }

    fn score_readings<R: RngCore + ?Sized>(
        &mut self,
        id: SessionId,
        now: u64,
        rng: &mut R,
    ) -> Vec<Message> {
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.expected.clear();
        let readings = std::mem::take(&mut session.readings);
        let request = match self.scoring {
            ScoringMode::Local => {
                let score = fuse_local(&readings, &self.policy, now);
                return self.apply_gate(id, score, rng);
            }
            ScoringMode::CloudPlain => ScoreRequest::Plain {
                user_id: self.user_id.clone(),
                readings,
            },
            ScoringMode::CloudEncrypted => {
                let keypair = self.paillier.as_ref().expect("checked by set_scoring");
                let (scores, _) = modality_scores(&readings, &self.policy, now);
                match encrypt_scores(&scores, &keypair.public, rng) {
                    Ok(scores) => ScoreRequest::Encrypted {
                        user_id: self.user_id.clone(),
                        scores,
                        public_key: keypair.public.clone(),
                    },
                    Err(_) => return self.abort(id, DenyReason::Score),
                }
            }
        };
        session.phase = SessionPhase::AwaitScore;
        vec![Message::new(
            EntityId::Pd,
            EntityId::Fasp,
            id,
            Payload::ScoreRequest(request),
        )]
    }

    fn on_score_response<R: RngCore + ?Sized>(
        &mut self,
        id: SessionId,
        resp: ScoreResponse,
        rng: &mut R,
    ) -> Vec<Message> {
        let score = match resp {
            ScoreResponse::Plain { value } if value.is_finite() => Ok(AuthScore {
                value: value.clamp(0.0, 1.0),
                contributing: BTreeSet::new(),
                mode: ScoreMode::Cloud,
            }),
            ScoreResponse::Plain { .. } => Err(Error::param("non-finite score")),
            ScoreResponse::Encrypted {
                fused,
                weight_total,
            } => match &self.paillier {
                Some(kp) => decrypt_fused(&fused, weight_total, kp, BTreeSet::new()),
                None => Err(Error::param("no Paillier key")),
            },
        };
        match score {
            Ok(score) => self.apply_gate(id, score, rng),
            Err(_) => self.abort(id, DenyReason::Score),
        }
    }

    /// Nothing touching key material is sent unless the gate passes.
    fn apply_gate<R: RngCore + ?Sized>(
        &mut self,
        id: SessionId,
        score: AuthScore,
        rng: &mut R,
    ) -> Vec<Message> {
        let passed = gate(&score, &self.policy);
        self.sessions.get_mut(&id).expect("session exists").score = Some(score.value);
        if !passed {
            return self.abort(id, DenyReason::Score);
        }
        match self.case {
            CaseStrategy::Case1 => self.sign_locally(id, rng),
            _ => self.start_round1(id, rng),
        }
    }

    fn signing_input(&self, id: SessionId) -> (Vec<u8>, Challenge) {
        let challenge = self.sessions[&id]
            .challenge
            .clone()
            .expect("challenge received");
        (challenge.signing_message(), challenge)
    }

    fn sign_locally<R: RngCore + ?Sized>(&mut self, id: SessionId, rng: &mut R) -> Vec<Message> {
        let (message, challenge) = self.signing_input(id);
        let group = self.ctx.group.clone();
        let signer = self.signer.as_mut().expect("case 1 holds the key");
        let sig = local_sign(
            signer,
            id,
            &message,
            &self.public_key,
            &self.ctx,
            rng,
            &group,
        );
        match sig {
            Ok(sig) => self.respond(id, challenge, sig),
            Err(_) => self.abort(id, DenyReason::InvalidPartial),
        }
    }

    fn start_round1<R: RngCore + ?Sized>(&mut self, id: SessionId, rng: &mut R) -> Vec<Message> {
        let (message, _) = self.signing_input(id);
        let y = self.public_key.y.clone();
        let live = self.live.clone();
        let mut out = Vec::new();
        if matches!(self.case, CaseStrategy::Case3 { .. }) {
            for i in &live {
                if let Some(helper) = self.helpers.get(i) {
                    out.push(Message::new(
                        EntityId::Pd,
                        EntityId::Dd(*i),
                        id,
                        Payload::HelperDelivery {
                            helper: helper.clone(),
                            commitments: self.commitments.clone(),
                        },
                    ));
                }
            }
        }
        for i in &live {
            out.push(Message::new(
                EntityId::Pd,
                EntityId::Dd(*i),
                id,
                Payload::SignRound1(Round1::Request {
                    message: message.clone(),
                    y: y.clone(),
                }),
            ));
        }
        let own = self
            .signer
            .as_mut()
            .and_then(|s| s.round1(id, &self.ctx.group, rng).ok());
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.phase = SessionPhase::Round1;
        session.expected = live;
        if let Some(c) = own {
            session.committed.insert(c.index, c);
        }
        out
    }

    fn start_round2(&mut self, id: SessionId) -> Vec<Message> {
        let quorum = self.public_key.params.quorum();
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.expected.clear();
        if session.committed.len() < quorum {
            return self.abort(id, DenyReason::InsufficientDevices);
        }
        let selected: Vec<u32> = session.committed.keys().copied().take(quorum).collect();
        let chosen: Vec<NonceCommitment> = selected
            .iter()
            .map(|i| session.committed[i].clone())
            .collect();
        let r = aggregate_nonce(&chosen, &self.ctx.group);
        let pd_index = self.signer.as_ref().map(Signer::index);
        let out: Vec<Message> = session
            .committed
            .keys()
            .filter(|i| Some(**i) != pd_index)
            .map(|i| {
                Message::new(
                    EntityId::Pd,
                    EntityId::Dd(*i),
                    id,
                    Payload::SignRound2(Round2::Request {
                        signers: selected.clone(),
                        aggregate_r: r.clone(),
                    }),
                )
            })
            .collect();
        session.expected = selected
            .iter()
            .copied()
            .filter(|i| Some(*i) != pd_index)
            .collect();
        session.selected = selected.clone();
        session.phase = SessionPhase::Round2;
        if let Some(signer) = self.signer.as_mut() {
            let index = signer.index();
            if selected.contains(&index) {
                let message = self.sessions[&id]
                    .challenge
                    .as_ref()
                    .expect("challenge received")
                    .signing_message();
                let c =
                    self.ctx
                        .hasher
                        .challenge(&r, &self.public_key.y, &message, &self.ctx.group);
                if let Ok(p) = signer.round2(id, &c, &selected, &self.ctx.group.field()) {
                    self.sessions
                        .get_mut(&id)
                        .expect("session exists")
                        .partials
                        .insert(index, p);
                }
            } else {
                signer.abandon(id);
            }
        }
        if out.is_empty() && self.sessions[&id].expected.is_empty() {
            return self.finish_signing(id);
        }
        out
    }

    fn finish_signing(&mut self, id: SessionId) -> Vec<Message> {
        let (message, challenge) = self.signing_input(id);
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.expected.clear();
        let commitments: Vec<NonceCommitment> = session
            .selected
            .iter()
            .map(|i| session.committed[i].clone())
            .collect();
        let partials: Vec<PartialSignature> = session.partials.values().cloned().collect();
        let result = combine_with(
            self.ctx.hasher.as_ref(),
            &commitments,
            &partials,
            &self.public_key,
            &message,
        );
        match result {
            Ok(sig) => self.respond(id, challenge, sig),
            Err(Error::InvalidPartial) => self.abort(id, DenyReason::InvalidPartial),
            Err(_) => self.abort(id, DenyReason::InsufficientDevices),
        }
    }

    fn respond(
        &mut self,
        id: SessionId,
        challenge: Challenge,
        signature: Signature,
    ) -> Vec<Message> {
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.phase = SessionPhase::AwaitResult;
        vec![Message::new(
            EntityId::Pd,
            session.sp.clone(),
            id,
            Payload::AuthResponse(AuthResponse {
                user_id: self.user_id.clone(),
                sp_id: challenge.sp_id,
                nonce: challenge.nonce,
                signature,
            }),
        )]
    }

    /// Ends the session locally and notifies the SP.
    fn abort(&mut self, id: SessionId, reason: DenyReason) -> Vec<Message> {
        let result = AuthResult::denied(reason);
        self.finish(id, result);
        if let Some(signer) = self.signer.as_mut() {
            signer.abandon(id);
        }
        let sp = self.sessions[&id].sp.clone();
        vec![Message::new(
            EntityId::Pd,
            sp,
            id,
            Payload::AuthResult(result),
        )]
    }

    fn finish(&mut self, id: SessionId, result: AuthResult) {
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.phase = SessionPhase::Done;
        session.outcome = Some(result);
        session.expected.clear();
        session.readings.clear();
        session.committed.clear();
        session.partials.clear();
    }
}

fn local_sign<R: RngCore + ?Sized>(
    signer: &mut Signer,
    id: SessionId,
    message: &[u8],
    public_key: &GroupPublicKey,
    ctx: &ProtocolContext,
    rng: &mut R,
    group: &crate::algebra::GroupParams,
) -> Result<Signature> {
    let commitment = signer.round1(id, group, rng)?;
    let r: GroupElement = commitment.r.clone();
    let c = ctx.hasher.challenge(&r, &public_key.y, message, group);
    let partial = signer.round2(id, &c, &[signer.index()], &group.field())?;
    combine_with(
        ctx.hasher.as_ref(),
        &[commitment],
        &[partial],
        public_key,
        message,
    )
}
