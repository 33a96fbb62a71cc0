// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, VecDeque};

use rand::RngCore;

use super::message::{EntityId, Message, Payload, Round1, Round2};
use super::ProtocolContext;
use crate::algebra::{GroupElement, Scalar};
use crate::authscore::{Modality, ModalityReading};
use crate::fuzzy_extractor::{bits_to_scalar, fe_reproduce, HelperData, Template};
use crate::sharing::{verify_share, FeldmanCommitments};
use crate::thresholdsig::{KeyShare, SecretNonce, SessionId, Signer};

/// What the device's sensors report this session.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorSample {
    /// Behavioural similarity to the enrolled user, in `[0, 1]`.
    pub score: f64,
    /// Binary template for share regeneration (case 3 only).
    pub template: Option<Template>,
}

#[derive(Debug, Default)]
struct Transient {
    signer: Option<Signer>,
    message: Option<(Vec<u8>, GroupElement)>,
}

/// Wearable or sensor without secure storage. Answers only whoever acts as
/// its gateway.
#[derive(Debug)]
pub struct DumbDevice {
    index: u32,
    modality: Modality,
    ctx: ProtocolContext,
    stored: Option<Signer>,
    sensor: SensorSample,
    transient: BTreeMap<SessionId, Transient>,
    scripted_nonces: VecDeque<Scalar>,
    fe_attempts: u64,
    fe_failures: u64,
}

impl DumbDevice {
    pub fn new(
        index: u32,
        modality: Modality,
        stored_share: Option<KeyShare>,
        ctx: ProtocolContext,
    ) -> Self {
        DumbDevice {
            index,
            modality,
            ctx,
            stored: stored_share.map(Signer::new),
            sensor: SensorSample {
                score: 0.0,
                template: None,
            },
            transient: BTreeMap::new(),
            scripted_nonces: VecDeque::new(),
            fe_attempts: 0,
            fe_failures: 0,
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn id(&self) -> EntityId {
        EntityId::Dd(self.index)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn set_sensor(&mut self, sample: SensorSample) {
        self.sensor = sample;
    }

    /// Queues fixed round-1 nonces, consumed before any random draw.
    pub fn script_nonces(&mut self, nonces: impl IntoIterator<Item = Scalar>) {
        self.scripted_nonces.extend(nonces);
    }

    /// Whether a key share is kept across sessions.
    pub fn persists_share(&self) -> bool {
        self.stored.is_some()
    }

    /// Whether any per-session share material is currently held.
    pub fn holds_transient_share(&self) -> bool {
        self.transient.values().any(|t| t.signer.is_some())
    }

    /// `(attempts, failures)` of share regeneration so far.
    pub fn fe_stats(&self) -> (u64, u64) {
        (self.fe_attempts, self.fe_failures)
    }

    pub fn handle<R: RngCore + ?Sized>(
        &mut self,
        msg: Message,
        now: u64,
        rng: &mut R,
    ) -> Vec<Message> {
        let reply = match msg.payload {
            Payload::Challenge(_) => Some(Payload::SensorReading(ModalityReading {
                device_id: self.id().to_string(),
                modality: self.modality,
                score: self.sensor.score.clamp(0.0, 1.0),
                timestamp: now,
            })),
            Payload::HelperDelivery {
                helper,
                commitments,
            } => {
                self.regenerate_share(msg.session, &helper, &commitments);
                None
            }
            Payload::SignRound1(Round1::Request { message, y }) => Some(Payload::SignRound1(
                self.round1(msg.session, message, y, rng),
            )),
            Payload::SignRound2(Round2::Request {
                signers,
                aggregate_r,
            }) => self
                .round2(msg.session, &signers, &aggregate_r)
                .map(|p| Payload::SignRound2(Round2::Partial(p))),
            _ => None,
        };
        reply
            .map(|p| Message::new(self.id(), msg.from, msg.session, p))
            .into_iter()
            .collect()
    }

    fn regenerate_share(
        &mut self,
        session: SessionId,
        helper: &HelperData,
        commitments: &FeldmanCommitments,
    ) {
        self.fe_attempts += 1;
        let share = self
            .sensor
            .template
            .as_ref()
            .and_then(|w| fe_reproduce(w, helper).ok())
            .and_then(|bits| bits_to_scalar(&bits, &self.ctx.group.field()).ok())
            .map(|value| KeyShare {
                index: self.index,
                value,
            })
            .filter(|share| verify_share(&share.as_share(), commitments, &self.ctx.group));
        if share.is_none() {
            self.fe_failures += 1;
        }
        self.transient.insert(
            session,
            Transient {
                signer: share.map(Signer::new),
                message: None,
            },
        );
    }

    fn round1<R: RngCore + ?Sized>(
        &mut self,
        session: SessionId,
        message: Vec<u8>,
        y: GroupElement,
        rng: &mut R,
    ) -> Round1 {
        let group = self.ctx.group.clone();
        let scripted = self.scripted_nonces.pop_front();
        let index = self.index;
        let transient = self.transient.entry(session).or_default();
        transient.message = Some((message, y));
        let signer = match (&mut self.stored, &mut transient.signer) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => {
                self.transient.remove(&session);
                return Round1::Decline { index };
            }
        };
        let commitment = match scripted {
            Some(k) => SecretNonce::from_scalar(session, k)
                .and_then(|nonce| signer.round1_with_nonce(nonce, &group)),
            None => signer.round1(session, &group, rng),
        };
        match commitment {
            Ok(c) => Round1::Commit(c),
            Err(_) => {
                self.transient.remove(&session);
                Round1::Decline { index }
            }
        }
    }

    /// Signs if selected; either way the nonce and any regenerated share are erased.
    fn round2(
        &mut self,
        session: SessionId,
        signers: &[u32],
        aggregate_r: &GroupElement,
    ) -> Option<crate::thresholdsig::PartialSignature> {
        let mut transient = self.transient.remove(&session)?;
        let (message, y) = transient.message.take()?;
        let signer = match (&mut self.stored, &mut transient.signer) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => return None,
        };
        if !signers.contains(&self.index) {
            signer.abandon(session);
            return None;
        }
        let field = self.ctx.group.field();
        let c = self
            .ctx
            .hasher
            .challenge(aggregate_r, &y, &message, &self.ctx.group);
        signer.round2(session, &c, signers, &field).ok()
    }
}
