// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use super::message::{
    AuthResponse, AuthResult, Challenge, EntityId, Message, Payload, Round1, Round2,
};
use super::ProtocolContext;
use crate::algebra::GroupElement;
use crate::error::{Error, Result};
use crate::thresholdsig::{aggregate, NonceCommitment, PartialSignature, SessionId, Signature};

/// What the adversary does once started.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackPlan {
    /// Act as gateway for the stolen devices, skipping the score gate.
    StolenDevices {
        user_id: String,
        y: GroupElement,
        devices: BTreeSet<u32>,
    },
    /// Resubmit a captured response verbatim.
    Replay(AuthResponse),
}

#[derive(Debug, Default)]
struct AttackSession {
    sp: Option<EntityId>,
    challenge: Option<Challenge>,
    expected: BTreeSet<u32>,
    committed: BTreeMap<u32, NonceCommitment>,
    partials: Vec<PartialSignature>,
    stage: u8,
    outcome: Option<AuthResult>,
}

/// Rogue gateway without the PD's secrets.
#[derive(Debug)]
pub struct AdversaryGateway {
    plan: AttackPlan,
    ctx: ProtocolContext,
    sessions: BTreeMap<SessionId, AttackSession>,
}

const AWAIT_CHALLENGE: u8 = 0;
const ROUND1: u8 = 1;
const ROUND2: u8 = 2;
const SUBMITTED: u8 = 3;
const DONE: u8 = 4;

impl AdversaryGateway {
    pub fn new(plan: AttackPlan, ctx: ProtocolContext) -> Self {
        AdversaryGateway {
            plan,
            ctx,
            sessions: BTreeMap::new(),
        }
    }

    pub fn plan(&self) -> &AttackPlan {
        &self.plan
    }

    /// The SP's verdict, if one arrived.
    pub fn outcome(&self, session: SessionId) -> Option<AuthResult> {
        self.sessions.get(&session).and_then(|s| s.outcome)
    }

    pub fn start(&mut self, sp_id: &str, session: SessionId) -> Result<Message> {
        if self.sessions.contains_key(&session) {
            return Err(Error::Session(format!(
                "session {} already exists",
                session.0
            )));
        }
        let sp = EntityId::Sp(sp_id.to_string());
        let (payload, stage) = match &self.plan {
            AttackPlan::StolenDevices { user_id, .. } => (
                Payload::AuthRequest {
                    user_id: user_id.clone(),
                },
                AWAIT_CHALLENGE,
            ),
            AttackPlan::Replay(resp) => (Payload::AuthResponse(resp.clone()), SUBMITTED),
        };
        self.sessions.insert(
            session,
            AttackSession {
                sp: Some(sp.clone()),
                stage,
                ..AttackSession::default()
            },
        );
        Ok(Message::new(EntityId::Adversary, sp, session, payload))
    }

    pub fn handle<R: RngCore + ?Sized>(&mut self, msg: Message, rng: &mut R) -> Vec<Message> {
        let id = msg.session;
        let AttackPlan::StolenDevices { y, devices, .. } = &self.plan else {
            if let (Some(s), Payload::AuthResult(r)) = (self.sessions.get_mut(&id), &msg.payload) {
                s.outcome = Some(*r);
                s.stage = DONE;
            }
            return Vec::new();
        };
        let Some(session) = self.sessions.get_mut(&id) else {
            return Vec::new();
        };
        match (session.stage, msg.payload, msg.from) {
            (AWAIT_CHALLENGE, Payload::Challenge(c), _) => {
                let message = c.signing_message();
                session.challenge = Some(c);
                session.stage = ROUND1;
                session.expected = devices.clone();
                devices
                    .iter()
                    .map(|i| {
                        Message::new(
                            EntityId::Adversary,
                            EntityId::Dd(*i),
                            id,
                            Payload::SignRound1(Round1::Request {
                                message: message.clone(),
                                y: y.clone(),
                            }),
                        )
                    })
                    .collect()
            }
            (ROUND1, Payload::SignRound1(r1), EntityId::Dd(i)) => {
                session.expected.remove(&i);
                if let Round1::Commit(c) = r1 {
                    session.committed.insert(i, c);
                }
                if session.expected.is_empty() {
                    self.advance(id, rng)
                } else {
                    Vec::new()
                }
            }
            (ROUND2, Payload::SignRound2(Round2::Partial(p)), EntityId::Dd(i)) => {
                session.expected.remove(&i);
                session.partials.push(p);
                if session.expected.is_empty() {
                    self.advance(id, rng)
                } else {
                    Vec::new()
                }
            }
            (_, Payload::AuthResult(r), _) => {
                session.outcome = Some(r);
                session.stage = DONE;
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    pub fn on_quiescent<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Vec<Message> {
        let ids: Vec<SessionId> = self
            .sessions
            .iter()
            .filter(|(_, s)| s.stage == ROUND1 || s.stage == ROUND2)
            .map(|(id, _)| *id)
            .collect();
        ids.into_iter()
            .flat_map(|id| self.advance(id, rng))
            .collect()
    }

    fn advance<R: RngCore + ?Sized>(&mut self, id: SessionId, rng: &mut R) -> Vec<Message> {
        let group = self.ctx.group.clone();
        let session = self.sessions.get_mut(&id).expect("session exists");
        session.expected.clear();
        if session.stage == ROUND1 && !session.committed.is_empty() {
            let chosen: Vec<NonceCommitment> = session.committed.values().cloned().collect();
            let signers: Vec<u32> = session.committed.keys().copied().collect();
            let r = crate::thresholdsig::aggregate_nonce(&chosen, &group);
            session.stage = ROUND2;
            session.expected = signers.iter().copied().collect();
            return signers
                .iter()
                .map(|i| {
                    Message::new(
                        EntityId::Adversary,
                        EntityId::Dd(*i),
                        id,
                        Payload::SignRound2(Round2::Request {
                            signers: signers.clone(),
                            aggregate_r: r.clone(),
                        }),
                    )
                })
                .collect();
        }
        let signature = if session.partials.is_empty() {
            // no usable share at all: guess
            let field = group.field();
            Signature {
                r: group.base_exp(&field.random_nonzero(rng)),
                s: field.random(rng),
            }
        } else {
            let commitments: Vec<NonceCommitment> = session.committed.values().cloned().collect();
            aggregate(&commitments, &session.partials, &group)
        };
        let AttackPlan::StolenDevices { user_id, .. } = &self.plan else {
            unreachable!("only stolen-device sessions sign");
        };
        let challenge = session.challenge.clone().expect("challenge received");
        session.stage = SUBMITTED;
        vec![Message::new(
            EntityId::Adversary,
            session.sp.clone().expect("sp set at start"),
            id,
            Payload::AuthResponse(AuthResponse {
                user_id: user_id.clone(),
                sp_id: challenge.sp_id,
                nonce: challenge.nonce,
                signature,
            }),
        )]
    }
}
