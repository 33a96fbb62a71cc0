// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use num_bigint::BigUint;

use crate::algebra::PrimeField;
use crate::protocol::{EntityId, Message, MessageHook, Payload, Round2, ScoreResponse};

/// Flips the low bit of the first partial signature a DD sends. If none
/// crosses the wire before the response, the response's `s` is flipped.
pub struct TamperPartial {
    field: PrimeField,
    done: bool,
}

impl TamperPartial {
    pub fn new(field: PrimeField) -> Self {
        TamperPartial { field, done: false }
    }

    fn flip(&self, s: &crate::algebra::Scalar) -> crate::algebra::Scalar {
        self.field.reduce(&(s.value() ^ BigUint::from(1u32)))
    }
}

impl MessageHook for TamperPartial {
    fn intercept(&mut self, mut msg: Message, _tick: u64) -> Vec<Message> {
        if !self.done {
            match &mut msg.payload {
                Payload::SignRound2(Round2::Partial(p)) if matches!(msg.from, EntityId::Dd(_)) => {
                    p.s = self.flip(&p.s);
                    self.done = true;
                }
                Payload::AuthResponse(r) => {
                    r.signature.s = self.flip(&r.signature.s);
                    self.done = true;
                }
                _ => {}
            }
        }
        vec![msg]
    }
}

/// Injects a maximal score response towards the PD whenever a challenge
/// reaches it or it asks the FASP for a score.
pub struct ForgeScore;

impl MessageHook for ForgeScore {
    fn intercept(&mut self, msg: Message, _tick: u64) -> Vec<Message> {
        let trigger = matches!(
            (&msg.payload, &msg.to),
            (Payload::Challenge(_), EntityId::Pd) | (Payload::ScoreRequest(_), _)
        );
        let forged = trigger.then(|| {
            Message::new(
                EntityId::Adversary,
                EntityId::Pd,
                msg.session,
                Payload::ScoreResponse(ScoreResponse::Plain { value: 1.0 }),
            )
        });
        std::iter::once(msg).chain(forged).collect()
    }
}
