// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Entities and message flow of the frictionless authentication scheme.
//!
//! A user owns a gateway personal device (PD) and a set of dumb devices
//! (DDs). A service provider (SP) challenges the user; the PD collects
//! behavioural readings from the DDs, obtains a fused score (locally or from
//! the FASP), and only if the score passes the gate does it let the devices
//! sign the challenge. How the signing key is held is the [`CaseStrategy`]:
//!
//! * `case1`: the whole key sits on the PD;
//! * `case2`: the key is threshold-shared and each device persists its share;
//! * `case3`: as `case2`, but DDs persist nothing and regenerate their share
//!   per session from a sensor template and helper data held by the PD.
//!
//! DDs only ever talk to the PD; all SP and FASP traffic goes through it.

mod adversary;
mod device;
mod enrol;
mod fasp;
mod gateway;
pub mod message;
mod sp;
mod world;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::GroupParams;
use crate::thresholdsig::{ChallengeHash, Sha256Challenge};

pub use adversary::{AdversaryGateway, AttackPlan};
pub use device::{DumbDevice, SensorSample};
pub use enrol::{
    enroll, enroll_with_polynomial, expected_devices, DdEnrolment, DeviceProfile, Enrolment,
    PdEnrolment, PdKey, SpRegistration,
};
pub use fasp::Fasp;
pub use gateway::{PersonalDevice, SessionPhase};
pub use message::{
    AuthResponse, AuthResult, Challenge, DenyReason, EntityId, Message, Payload, Round1, Round2,
    ScoreRequest, ScoreResponse,
};
pub use sp::ServiceProvider;
pub use world::{FlowOutcome, MessageHook, World};

/// Default lifetime of an SP challenge, in ticks.
pub const DEFAULT_CHALLENGE_EXPIRY: u64 = 100;

/// How the user's signing key is held.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CaseStrategy {
    Case1,
    Case2 {
        #[serde(default)]
        pd_holds_share: bool,
    },
    Case3 {
        #[serde(default)]
        pd_holds_share: bool,
        /// Repetition factor of the fuzzy-commitment code.
        #[serde(default = "default_repetition")]
        r: usize,
    },
}

fn default_repetition() -> usize {
    5
}

impl CaseStrategy {
    pub fn from_number(case: u8) -> Option<Self> {
        match case {
            1 => Some(CaseStrategy::Case1),
            2 => Some(CaseStrategy::Case2 {
                pd_holds_share: false,
            }),
            3 => Some(CaseStrategy::Case3 {
                pd_holds_share: false,
                r: default_repetition(),
            }),
            _ => None,
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            CaseStrategy::Case1 => 1,
            CaseStrategy::Case2 { .. } => 2,
            CaseStrategy::Case3 { .. } => 3,
        }
    }

    pub fn pd_holds_share(&self) -> bool {
        match self {
            CaseStrategy::Case1 => false,
            CaseStrategy::Case2 { pd_holds_share } | CaseStrategy::Case3 { pd_holds_share, .. } => {
                *pd_holds_share
            }
        }
    }

    pub fn is_threshold(&self) -> bool {
        !matches!(self, CaseStrategy::Case1)
    }
}

/// Where the fused score is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringMode {
    /// On the PD; the FASP is not contacted.
    #[default]
    Local,
    /// FASP fuses plaintext readings.
    CloudPlain,
    /// FASP fuses Paillier ciphertexts and never sees plaintext.
    CloudEncrypted,
}

/// Parameters every entity shares.
#[derive(Clone)]
pub struct ProtocolContext {
    pub group: GroupParams,
    pub hasher: Arc<dyn ChallengeHash + Send + Sync>,
}

impl ProtocolContext {
    pub fn new(group: GroupParams) -> Self {
        ProtocolContext {
            group,
            hasher: Arc::new(Sha256Challenge),
        }
    }

    /// Replaces the challenge hash; used to pin known-answer signatures.
    pub fn with_hasher(mut self, hasher: Arc<dyn ChallengeHash + Send + Sync>) -> Self {
        self.hasher = hasher;
        self
    }
}

impl std::fmt::Debug for ProtocolContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProtocolContext")
            .field("group", &self.group)
            .finish_non_exhaustive()
    }
}
