// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::RngCore;

use super::message::{
    AuthResponse, AuthResult, Challenge, DenyReason, EntityId, Message, Nonce, Payload, NONCE_LEN,
};
use super::ProtocolContext;
use crate::error::{Error, Result};
use crate::thresholdsig::{verify_with, GroupPublicKey};

#[derive(Clone, Debug)]
struct IssuedNonce {
    user_id: String,
    issued_at: u64,
    used: bool,
}

/// Verifier: registered public keys plus a single-use challenge cache.
#[derive(Debug)]
pub struct ServiceProvider {
    id: String,
    ctx: ProtocolContext,
    users: BTreeMap<String, GroupPublicKey>,
    issued: BTreeMap<Nonce, IssuedNonce>,
    expiry: u64,
    log: Vec<Message>,
}

impl ServiceProvider {
    pub fn new(id: impl Into<String>, ctx: ProtocolContext, expiry: u64) -> Self {
        ServiceProvider {
            id: id.into(),
            ctx,
            users: BTreeMap::new(),
            issued: BTreeMap::new(),
            expiry,
            log: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn entity(&self) -> EntityId {
        EntityId::Sp(self.id.clone())
    }

    pub fn register(&mut self, user_id: impl Into<String>, key: GroupPublicKey) {
        self.users.insert(user_id.into(), key);
    }

    pub fn public_key(&self, user_id: &str) -> Option<&GroupPublicKey> {
        self.users.get(user_id)
    }

    /// Append-only record of every message this SP handled or sent.
    pub fn log(&self) -> &[Message] {
        &self.log
    }

    /// Fresh 32-byte nonce, cached for `expiry` ticks and usable once.
    pub fn issue_challenge<R: RngCore + ?Sized>(
        &mut self,
        user_id: &str,
        now: u64,
        rng: &mut R,
    ) -> Result<Challenge> {
        if !self.users.contains_key(user_id) {
            return Err(Error::Registration(format!(
                "user `{user_id}` is not registered"
            )));
        }
        let mut nonce = [0u8; NONCE_LEN];
        loop {
            rng.fill_bytes(&mut nonce);
            if !self.issued.contains_key(&nonce) {
                break;
            }
        }
        self.issued.insert(
            nonce,
            IssuedNonce {
                user_id: user_id.to_string(),
                issued_at: now,
                used: false,
            },
        );
        Ok(Challenge {
            sp_id: self.id.clone(),
            nonce,
        })
    }

    /// Grants iff the nonce is live and unused for this user and the
    /// signature verifies over this SP's challenge bytes. The nonce is
    /// consumed either way.
    pub fn verify_response(&mut self, response: &AuthResponse, now: u64) -> AuthResult {
        let Some(key) = self.users.get(&response.user_id) else {
            return AuthResult::denied(DenyReason::UnknownUser);
        };
        let Some(entry) = self.issued.get_mut(&response.nonce) else {
            return AuthResult::denied(DenyReason::Replay);
        };
        if entry.used
            || entry.user_id != response.user_id
            || now.saturating_sub(entry.issued_at) > self.expiry
        {
            return AuthResult::denied(DenyReason::Replay);
        }
        entry.used = true;
        let message = super::message::signing_message(&self.id, &response.nonce);
        if verify_with(self.ctx.hasher.as_ref(), key, &message, &response.signature) {
            AuthResult::granted()
        } else {
            AuthResult::denied(DenyReason::Signature)
        }
    }

    pub fn handle<R: RngCore + ?Sized>(
        &mut self,
        msg: Message,
        now: u64,
        rng: &mut R,
    ) -> Vec<Message> {
        let reply = match &msg.payload {
            Payload::AuthRequest { user_id } => match self.issue_challenge(user_id, now, rng) {
                Ok(c) => Some(Payload::Challenge(c)),
                Err(_) => Some(Payload::AuthResult(AuthResult::denied(
                    DenyReason::UnknownUser,
                ))),
            },
            Payload::AuthResponse(resp) => {
                Some(Payload::AuthResult(self.verify_response(resp, now)))
            }
            // abort notices from the gateway are only recorded
            _ => None,
        };
        let out: Vec<Message> = reply
            .map(|p| Message::new(self.entity(), msg.from.clone(), msg.session, p))
            .into_iter()
            .collect();
        self.log.push(msg);
        self.log.extend(out.iter().cloned());
        out
    }
}
