// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::message::{EntityId, Message, Payload, ScoreRequest, ScoreResponse};
use crate::authscore::{fuse_encrypted, fuse_local, present_weight, FusionPolicy};
use crate::error::{Error, Result};

/// Score fusion service. Holds per-user policies; never learns which SP a
/// request is for.
#[derive(Debug, Default)]
pub struct Fasp {
    policies: BTreeMap<String, FusionPolicy>,
    plaintext_scores_seen: usize,
    log: Vec<Message>,
}

impl Fasp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_policy(&mut self, user_id: impl Into<String>, policy: FusionPolicy) {
        self.policies.insert(user_id.into(), policy);
    }

    /// Count of plaintext score values ever received.
    pub fn plaintext_scores_seen(&self) -> usize {
        self.plaintext_scores_seen
    }

    /// Plaintext score values present anywhere in the retained state.
    pub fn plaintext_scores_held(&self) -> usize {
        self.log.iter().map(|m| m.payload.plaintext_scores()).sum()
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }

    pub fn score(&mut self, request: &ScoreRequest, now: u64) -> Result<ScoreResponse> {
        match request {
            ScoreRequest::Plain { user_id, readings } => {
                let policy = self.policy(user_id)?;
                let value = fuse_local(readings, policy, now).value;
                self.plaintext_scores_seen += readings.len();
                Ok(ScoreResponse::Plain { value })
            }
            ScoreRequest::Encrypted {
                user_id,
                scores,
                public_key,
            } => {
                let weights = self.policy(user_id)?.integer_weights();
                let fused = fuse_encrypted(scores, &weights, public_key)?;
                Ok(ScoreResponse::Encrypted {
                    fused,
                    weight_total: present_weight(scores.keys(), &weights),
                })
            }
        }
    }

    fn policy(&self, user_id: &str) -> Result<&FusionPolicy> {
        self.policies
            .get(user_id)
            .ok_or_else(|| Error::Policy(format!("no fusion policy for user `{user_id}`")))
    }

    /// Unknown users or malformed requests get no answer.
    pub fn handle(&mut self, msg: Message, now: u64) -> Vec<Message> {
        let out = match &msg.payload {
            Payload::ScoreRequest(req) => self
                .score(req, now)
                .ok()
                .map(|resp| {
                    Message::new(
                        EntityId::Fasp,
                        msg.from.clone(),
                        msg.session,
                        Payload::ScoreResponse(resp),
                    )
                })
                .into_iter()
                .collect(),
            _ => Vec::new(),
        };
        self.log.push(msg);
        self.log.extend(out.iter().cloned());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authscore::paillier::PheKeypair;
    use crate::authscore::Modality;
    use num_bigint::BigUint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::BTreeMap;

    #[test]
    fn encrypted_request_yields_encrypted_total() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let kp = PheKeypair::generate(64, &mut rng).unwrap();
        let mut fasp = Fasp::new();
        fasp.set_policy("alice", FusionPolicy::default());
        let scores: BTreeMap<Modality, _> = [
            (Modality::Gait, 80u32),
            (Modality::Location, 50),
            (Modality::Heartbeat, 0),
        ]
        .into_iter()
        .map(|(m, s)| (m, kp.public.encrypt(&BigUint::from(s), &mut rng).unwrap()))
        .collect();
        let req = ScoreRequest::Encrypted {
            user_id: "alice".into(),
            scores,
            public_key: kp.public.clone(),
        };
        let ScoreResponse::Encrypted {
            fused,
            weight_total,
        } = fasp.score(&req, 0).unwrap()
        else {
            panic!("expected ciphertext");
        };
        assert_eq!(kp.decrypt(&fused).unwrap(), BigUint::from(550u32));
        assert_eq!(weight_total, 10);
        assert_eq!(fasp.plaintext_scores_seen(), 0);
    }

    #[test]
    fn unknown_user_has_no_policy() {
        let mut fasp = Fasp::new();
        let req = ScoreRequest::Plain {
            user_id: "bob".into(),
            readings: Vec::new(),
        };
        assert!(matches!(fasp.score(&req, 0), Err(Error::Policy(_))));
    }
}
