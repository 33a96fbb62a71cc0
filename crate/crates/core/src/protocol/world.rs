// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::message::{AuthResult, DenyReason, EntityId, Message, Payload};
use super::{
    AdversaryGateway, DumbDevice, Enrolment, Fasp, PersonalDevice, ProtocolContext,
    ServiceProvider, DEFAULT_CHALLENGE_EXPIRY,
};
use crate::authscore::FusionPolicy;
use crate::error::{Error, Result};
use crate::thresholdsig::SessionId;

/// Sees every message as it is sent and returns what actually goes on the
/// wire: nothing to drop it, more than one to inject.
pub trait MessageHook: Send {
    fn intercept(&mut self, msg: Message, tick: u64) -> Vec<Message>;
}

/// How a single flow ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub session: SessionId,
    pub result: AuthResult,
}

/// Lossless, ordered network with a logical clock. Each round delivers every
/// message queued before it, FIFO; replies wait for the next round.
pub struct World {
    pub pd: Option<PersonalDevice>,
    pub dds: BTreeMap<u32, DumbDevice>,
    pub sp: ServiceProvider,
    pub fasp: Fasp,
    pub adversary: Option<AdversaryGateway>,
    tick: u64,
    queue: VecDeque<Message>,
    transcript: Vec<Message>,
    hooks: Vec<Box<dyn MessageHook>>,
    next_session: u64,
    max_rounds: u64,
}

impl World {
    pub fn new(sp: ServiceProvider, fasp: Fasp) -> Self {
        World {
            pd: None,
            dds: BTreeMap::new(),
            sp,
            fasp,
            adversary: None,
            tick: 0,
            queue: VecDeque::new(),
            transcript: Vec::new(),
            hooks: Vec::new(),
            next_session: 1,
            max_rounds: 10_000,
        }
    }

    /// A registered user with PD and DDs, an SP named `sp_id` and a FASP
    /// holding the user's fusion policy.
    pub fn from_enrolment(
        enrolment: Enrolment,
        policy: FusionPolicy,
        ctx: &ProtocolContext,
        sp_id: &str,
    ) -> Self {
        let user_id = enrolment.registration.user_id.clone();
        let mut sp = ServiceProvider::new(sp_id, ctx.clone(), DEFAULT_CHALLENGE_EXPIRY);
        sp.register(user_id.clone(), enrolment.registration.public_key);
        let mut fasp = Fasp::new();
        fasp.set_policy(user_id.clone(), policy.clone());
        let mut world = World::new(sp, fasp);
        let indices: Vec<u32> = enrolment.dds.iter().map(|d| d.index).collect();
        world.pd = Some(PersonalDevice::new(
            user_id,
            enrolment.pd,
            indices,
            policy,
            ctx.clone(),
        ));
        for dd in enrolment.dds {
            world.dds.insert(
                dd.index,
                DumbDevice::new(dd.index, dd.modality, dd.share, ctx.clone()),
            );
        }
        world
    }

    pub fn add_hook(&mut self, hook: Box<dyn MessageHook>) {
        self.hooks.push(hook);
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Advances the clock without traffic.
    pub fn advance(&mut self, ticks: u64) {
        self.tick += ticks;
    }

    /// Every message put on the wire, in send order.
    pub fn transcript(&self) -> &[Message] {
        &self.transcript
    }

    /// Session ids handed out from now on start at `base`.
    pub fn set_session_base(&mut self, base: u64) {
        self.next_session = base;
    }

    pub fn next_session(&mut self) -> SessionId {
        let id = SessionId(self.next_session);
        self.next_session += 1;
        id
    }

    pub fn send(&mut self, msg: Message) {
        let mut batch = vec![msg];
        for hook in &mut self.hooks {
            batch = batch
                .into_iter()
                .flat_map(|m| hook.intercept(m, self.tick))
                .collect();
        }
        for m in batch {
            self.transcript.push(m.clone());
            self.queue.push_back(m);
        }
    }

    /// Delivers until nothing is in flight and no entity wants to move on.
    pub fn run<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let mut rounds = 0;
        loop {
            if self.queue.is_empty() {
                let mut woken = Vec::new();
                if let Some(pd) = self.pd.as_mut() {
                    woken.extend(pd.on_quiescent(self.tick, rng));
                }
                if let Some(adv) = self.adversary.as_mut() {
                    woken.extend(adv.on_quiescent(rng));
                }
                if woken.is_empty() {
                    return Ok(());
                }
                woken.into_iter().for_each(|m| self.send(m));
            }
            rounds += 1;
            if rounds > self.max_rounds {
                return Err(Error::Session("message loop did not settle".into()));
            }
            self.tick += 1;
            let round: Vec<Message> = self.queue.drain(..).collect();
            for msg in round {
                for reply in self.deliver(msg, rng) {
                    self.send(reply);
                }
            }
        }
    }

    fn deliver<R: RngCore + ?Sized>(&mut self, msg: Message, rng: &mut R) -> Vec<Message> {
        let now = self.tick;
        match &msg.to {
            EntityId::Pd => match self.pd.as_mut() {
                Some(pd) => pd.handle(msg, now, rng),
                None => Vec::new(),
            },
            EntityId::Dd(i) => match self.dds.get_mut(i) {
                Some(dd) => dd.handle(msg, now, rng),
                None => Vec::new(),
            },
            EntityId::Sp(id) if id == self.sp.id() => self.sp.handle(msg, now, rng),
            EntityId::Sp(_) => Vec::new(),
            EntityId::Fasp => self.fasp.handle(msg, now),
            EntityId::Adversary => match self.adversary.as_mut() {
                Some(adv) => adv.handle(msg, rng),
                None => Vec::new(),
            },
        }
    }

    /// Runs one PD-initiated authentication towards this world's SP.
    pub fn authenticate<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<FlowOutcome> {
        let session = self.next_session();
        let sp_id = self.sp.id().to_string();
        let pd = self
            .pd
            .as_mut()
            .ok_or_else(|| Error::param("world has no personal device"))?;
        let first = pd.start(&sp_id, session)?;
        self.send(first);
        self.run(rng)?;
        Ok(self.outcome(session))
    }

    /// Runs one adversary-initiated flow.
    pub fn attack<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<FlowOutcome> {
        let session = self.next_session();
        let sp_id = self.sp.id().to_string();
        let adv = self
            .adversary
            .as_mut()
            .ok_or_else(|| Error::param("world has no adversary"))?;
        let first = adv.start(&sp_id, session)?;
        self.send(first);
        self.run(rng)?;
        Ok(self.outcome(session))
    }

    /// The SP's verdict for the session; failing that, the gateway's abort
    /// notice; failing that, incomplete.
    pub fn outcome(&self, session: SessionId) -> FlowOutcome {
        let results = self.transcript.iter().filter(|m| m.session == session);
        let mut from_sp = None;
        let mut notice = None;
        for m in results {
            if let Payload::AuthResult(r) = &m.payload {
                match m.from {
                    EntityId::Sp(_) => from_sp = Some(*r),
                    EntityId::Pd => notice = Some(*r),
                    _ => {}
                }
            }
        }
        FlowOutcome {
            session,
            result: from_sp
                .or(notice)
                .unwrap_or(AuthResult::denied(DenyReason::Incomplete)),
        }
    }
}
