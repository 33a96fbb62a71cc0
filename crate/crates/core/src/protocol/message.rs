// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Wire vocabulary.
//!
//! Every message is one JSON object:
//! `{"v":"FAS-v1","type":...,"from":...,"to":...,"session":...,"payload":...}`.
//! Byte strings and big integers are lowercase hex.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::GroupElement;
use crate::authscore::{Modality, ModalityReading, PheCiphertext, PhePublicKey};
use crate::encoding::hex_bytes;
use crate::error::{Error, Result};
use crate::fuzzy_extractor::HelperData;
use crate::sharing::FeldmanCommitments;
use crate::thresholdsig::{NonceCommitment, PartialSignature, SessionId, Signature};

pub const PROTOCOL_VERSION: &str = "FAS-v1";

/// Length of SP challenge nonces in bytes.
pub const NONCE_LEN: usize = 32;

pub type Nonce = [u8; NONCE_LEN];

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    /// The user's gateway personal device.
    Pd,
    /// A dumb device, identified by its share index.
    Dd(u32),
    Sp(String),
    Fasp,
    /// Anything not belonging to the honest deployment.
    Adversary,
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Pd => f.write_str("pd"),
            EntityId::Dd(i) => write!(f, "dd-{i}"),
            EntityId::Sp(id) => write!(f, "sp:{id}"),
            EntityId::Fasp => f.write_str("fasp"),
            EntityId::Adversary => f.write_str("adversary"),
        }
    }
}

impl FromStr for EntityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" => return Ok(EntityId::Pd),
            "fasp" => return Ok(EntityId::Fasp),
            "adversary" => return Ok(EntityId::Adversary),
            _ => {}
        }
        if let Some(i) = s.strip_prefix("dd-") {
            return i
                .parse()
                .map(EntityId::Dd)
                .map_err(|_| Error::Encoding(format!("bad device id `{s}`")));
        }
        if let Some(id) = s.strip_prefix("sp:") {
            return Ok(EntityId::Sp(id.to_string()));
        }
        Err(Error::Encoding(format!("unknown entity `{s}`")))
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub sp_id: String,
    #[serde(with = "hex_bytes")]
    pub nonce: Nonce,
}

impl Challenge {
    /// `"FAS-v1" || sp_id || nonce`, the exact bytes every signer signs.
    pub fn signing_message(&self) -> Vec<u8> {
        signing_message(&self.sp_id, &self.nonce)
    }
}

pub fn signing_message(sp_id: &str, nonce: &Nonce) -> Vec<u8> {
    let mut out = Vec::with_capacity(PROTOCOL_VERSION.len() + sp_id.len() + NONCE_LEN);
    out.extend_from_slice(PROTOCOL_VERSION.as_bytes());
    out.extend_from_slice(sp_id.as_bytes());
    out.extend_from_slice(nonce);
    out
}

/// Score request to the FASP. Carries no service-provider identifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScoreRequest {
    Plain {
        user_id: String,
        readings: Vec<ModalityReading>,
    },
    Encrypted {
        user_id: String,
        scores: BTreeMap<Modality, PheCiphertext>,
        public_key: PhePublicKey,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScoreResponse {
    Plain {
        value: f64,
    },
    Encrypted {
        fused: PheCiphertext,
        weight_total: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Round1 {
    /// Gateway asks a device to commit to a nonce for `message` under `y`.
    Request {
        #[serde(with = "hex_bytes")]
        message: Vec<u8>,
        y: GroupElement,
    },
    Commit(NonceCommitment),
    /// The device has no usable share this session.
    Decline {
        index: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Round2 {
    Request {
        signers: Vec<u32>,
        #[serde(rename = "R")]
        aggregate_r: GroupElement,
    },
    Partial(PartialSignature),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthResponse {
    pub user_id: String,
    pub sp_id: String,
    #[serde(with = "hex_bytes")]
    pub nonce: Nonce,
    pub signature: Signature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenyReason {
    /// Fused score below the gate threshold.
    Score,
    /// Signature did not verify under the registered key.
    Signature,
    /// Nonce unknown, expired or already used.
    Replay,
    InsufficientDevices,
    /// Combined signature failed; some partial was tampered or wrong.
    InvalidPartial,
    UnknownUser,
    /// The flow stalled before producing a result.
    Incomplete,
}

impl DenyReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenyReason::Score => "score",
            DenyReason::Signature => "signature",
            DenyReason::Replay => "replay",
            DenyReason::InsufficientDevices => "insufficient_devices",
            DenyReason::InvalidPartial => "invalid_partial",
            DenyReason::UnknownUser => "unknown_user",
            DenyReason::Incomplete => "incomplete",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthResult {
    pub granted: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<DenyReason>,
}

impl AuthResult {
    pub fn granted() -> Self {
        AuthResult {
            granted: true,
            reason: None,
        }
    }

    pub fn denied(reason: DenyReason) -> Self {
        AuthResult {
            granted: false,
            reason: Some(reason),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum Payload {
    AuthRequest {
        user_id: String,
    },
    Challenge(Challenge),
    ScoreRequest(ScoreRequest),
    SensorReading(ModalityReading),
    ScoreResponse(ScoreResponse),
    HelperDelivery {
        helper: HelperData,
        commitments: FeldmanCommitments,
    },
    SignRound1(Round1),
    SignRound2(Round2),
    AuthResponse(AuthResponse),
    AuthResult(AuthResult),
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::AuthRequest { .. } => "AuthRequest",
            Payload::Challenge(_) => "Challenge",
            Payload::ScoreRequest(_) => "ScoreRequest",
            Payload::SensorReading(_) => "SensorReading",
            Payload::ScoreResponse(_) => "ScoreResponse",
            Payload::HelperDelivery { .. } => "HelperDelivery",
            Payload::SignRound1(_) => "SignRound1",
            Payload::SignRound2(_) => "SignRound2",
            Payload::AuthResponse(_) => "AuthResponse",
            Payload::AuthResult(_) => "AuthResult",
        }
    }

    /// Number of plaintext behavioural score values carried.
    pub fn plaintext_scores(&self) -> usize {
        match self {
            Payload::SensorReading(_) => 1,
            Payload::ScoreRequest(ScoreRequest::Plain { readings, .. }) => readings.len(),
            Payload::ScoreResponse(ScoreResponse::Plain { .. }) => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Message {
    pub v: String,
    #[serde(flatten)]
    pub payload: Payload,
    pub from: EntityId,
    pub to: EntityId,
    pub session: SessionId,
}

impl Message {
    pub fn new(from: EntityId, to: EntityId, session: SessionId, payload: Payload) -> Self {
        Message {
            v: PROTOCOL_VERSION.to_string(),
            payload,
            from,
            to,
            session,
        }
    }

    pub fn type_name(&self) -> &'static str {
        self.payload.type_name()
    }

    /// One JSON line, fields in wire order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let msg: Message = serde_json::from_str(s).map_err(|e| Error::Encoding(e.to_string()))?;
        if msg.v != PROTOCOL_VERSION {
            return Err(Error::Encoding(format!("unsupported version `{}`", msg.v)));
        }
        Ok(msg)
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireRef {
            v: &self.v,
            kind: self.type_name(),
            from: &self.from,
            to: &self.to,
            session: self.session,
            payload: PayloadBody(&self.payload),
        }
        .serialize(s)
    }
}

#[derive(Serialize)]
struct WireRef<'a> {
    v: &'a str,
    #[serde(rename = "type")]
    kind: &'static str,
    from: &'a EntityId,
    to: &'a EntityId,
    session: SessionId,
    payload: PayloadBody<'a>,
}

/// Serializes only the `payload` half of the adjacently tagged enum.
struct PayloadBody<'a>(&'a Payload);

impl Serialize for PayloadBody<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Payload::AuthRequest { user_id } => {
                #[derive(Serialize)]
                struct Body<'a> {
                    user_id: &'a str,
                }
                Body { user_id }.serialize(s)
            }
            Payload::Challenge(c) => c.serialize(s),
            Payload::ScoreRequest(r) => r.serialize(s),
            Payload::SensorReading(r) => r.serialize(s),
            Payload::ScoreResponse(r) => r.serialize(s),
            Payload::HelperDelivery {
                helper,
                commitments,
            } => {
                #[derive(Serialize)]
                struct Body<'a> {
                    helper: &'a HelperData,
                    commitments: &'a FeldmanCommitments,
                }
                Body {
                    helper,
                    commitments,
                }
                .serialize(s)
            }
            Payload::SignRound1(r) => r.serialize(s),
            Payload::SignRound2(r) => r.serialize(s),
            Payload::AuthResponse(r) => r.serialize(s),
            Payload::AuthResult(r) => r.serialize(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GroupParams;

    #[test]
    fn entity_ids_round_trip() {
        for id in [
            EntityId::Pd,
            EntityId::Dd(7),
            EntityId::Sp("bank".into()),
            EntityId::Fasp,
            EntityId::Adversary,
        ] {
            assert_eq!(id.to_string().parse::<EntityId>().unwrap(), id);
        }
        assert!("dd-x".parse::<EntityId>().is_err());
        assert!("mallory".parse::<EntityId>().is_err());
    }

    #[test]
    fn signing_message_layout() {
        let nonce = [0xabu8; NONCE_LEN];
        let msg = signing_message("bank", &nonce);
        assert_eq!(&msg[..6], b"FAS-v1");
        assert_eq!(&msg[6..10], b"bank");
        assert_eq!(&msg[10..], &nonce);
    }

    #[test]
    fn wire_format_field_order_and_round_trip() {
        let msg = Message::new(
            EntityId::Sp("bank".into()),
            EntityId::Pd,
            SessionId(5),
            Payload::Challenge(Challenge {
                sp_id: "bank".into(),
                nonce: [1u8; NONCE_LEN],
            }),
        );
        let json = msg.to_json();
        let expected = format!(
            r#"{{"v":"FAS-v1","type":"Challenge","from":"sp:bank","to":"pd","session":5,"payload":{{"sp_id":"bank","nonce":"{}"}}}}"#,
            "01".repeat(32)
        );
        assert_eq!(json, expected);
        assert_eq!(Message::from_json(&json).unwrap(), msg);
    }

    #[test]
    fn every_variant_round_trips() {
        let group = GroupParams::test_group();
        let f = group.field();
        let y = group.base_exp(&f.from_u64(7));
        let payloads = vec![
            Payload::AuthRequest {
                user_id: "alice".into(),
            },
            Payload::SignRound1(Round1::Request {
                message: b"hi".to_vec(),
                y: y.clone(),
            }),
            Payload::SignRound1(Round1::Decline { index: 3 }),
            Payload::SignRound2(Round2::Request {
                signers: vec![1, 2],
                aggregate_r: y.clone(),
            }),
            Payload::ScoreResponse(ScoreResponse::Plain { value: 0.5 }),
            Payload::AuthResult(AuthResult::denied(DenyReason::Replay)),
            Payload::AuthResult(AuthResult::granted()),
        ];
        for p in payloads {
            let msg = Message::new(EntityId::Pd, EntityId::Dd(1), SessionId(1), p);
            assert_eq!(Message::from_json(&msg.to_json()).unwrap(), msg);
        }
    }

    #[test]
    fn encrypted_score_request_has_no_sp_field() {
        let req = ScoreRequest::Encrypted {
            user_id: "alice".into(),
            scores: BTreeMap::new(),
            public_key: PhePublicKey { n: 15u32.into() },
        };
        let v = serde_json::to_value(&req).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, vec!["mode", "public_key", "scores", "user_id"]);
        let with_sp = r#"{"mode":"plain","user_id":"a","readings":[],"sp_id":"bank"}"#;
        assert!(serde_json::from_str::<ScoreRequest>(with_sp).is_err());
    }

    #[test]
    fn version_is_enforced() {
        let msg = Message::new(
            EntityId::Pd,
            EntityId::Fasp,
            SessionId(1),
            Payload::AuthResult(AuthResult::granted()),
        );
        let json = msg.to_json().replace("FAS-v1", "FAS-v0");
        assert!(Message::from_json(&json).is_err());
    }
}
