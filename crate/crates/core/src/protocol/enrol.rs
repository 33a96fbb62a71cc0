// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::CaseStrategy;
use crate::algebra::{GroupParams, Scalar};
use crate::authscore::Modality;
use crate::error::{Error, Result};
use crate::fuzzy_extractor::{fe_enroll, scalar_to_bits, CodeParams, HelperData, Template};
use crate::sharing::{FeldmanCommitments, ThresholdParams};
use crate::thresholdsig::{keygen_dealer, keygen_from_polynomial, GroupPublicKey, KeyShare};

/// A dumb device as presented at enrolment.
#[derive(Clone, Debug)]
pub struct DeviceProfile {
    pub modality: Modality,
    /// Enrolment template; required for case 3.
    pub template: Option<Template>,
}

/// What the SP stores for a user.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpRegistration {
    pub user_id: String,
    pub public_key: GroupPublicKey,
}

/// Signing material kept on the PD.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PdKey {
    /// Case 1: the full key, as a single share of a `(0, 1)` sharing.
    Whole(KeyShare),
    /// Cases 2 and 3: the PD's own share, if it takes one.
    Threshold(Option<KeyShare>),
}

#[derive(Clone, Debug)]
pub struct PdEnrolment {
    pub case: CaseStrategy,
    pub public_key: GroupPublicKey,
    pub key: PdKey,
    pub commitments: FeldmanCommitments,
    /// Case 3 helper data by DD index.
    pub helpers: BTreeMap<u32, HelperData>,
}

#[derive(Clone, Debug)]
pub struct DdEnrolment {
    pub index: u32,
    pub modality: Modality,
    /// Persisted share (case 2 only).
    pub share: Option<KeyShare>,
}

#[derive(Clone, Debug)]
pub struct Enrolment {
    pub registration: SpRegistration,
    pub pd: PdEnrolment,
    pub dds: Vec<DdEnrolment>,
}

/// Number of DDs a case expects for the given sharing.
pub fn expected_devices(case: CaseStrategy, params: ThresholdParams) -> Option<usize> {
    match case {
        CaseStrategy::Case1 => None,
        _ if case.pd_holds_share() => Some(params.n as usize - 1),
        _ => Some(params.n as usize),
    }
}

/// Trusted-dealer enrolment run on the PD. The full key never outlives this
/// call in cases 2 and 3; in case 3 DD shares and templates are consumed
/// into helper data.
pub fn enroll<R: RngCore + ?Sized>(
    user_id: &str,
    case: CaseStrategy,
    params: ThresholdParams,
    devices: Vec<DeviceProfile>,
    group: &GroupParams,
    rng: &mut R,
) -> Result<Enrolment> {
    enroll_inner(user_id, case, params, devices, group, |p| {
        keygen_dealer(p, group, rng)
    })
}

/// [`enroll`] with a fixed dealer polynomial `secret + a_1 X + ...`.
pub fn enroll_with_polynomial(
    user_id: &str,
    case: CaseStrategy,
    params: ThresholdParams,
    devices: Vec<DeviceProfile>,
    group: &GroupParams,
    secret: &Scalar,
    coefficients: &[Scalar],
) -> Result<Enrolment> {
    enroll_inner(user_id, case, params, devices, group, |p| {
        keygen_from_polynomial(secret, coefficients, p, group)
    })
}

type Keygen = (GroupPublicKey, Vec<KeyShare>, FeldmanCommitments);

fn enroll_inner(
    user_id: &str,
    case: CaseStrategy,
    params: ThresholdParams,
    devices: Vec<DeviceProfile>,
    group: &GroupParams,
    keygen: impl FnOnce(ThresholdParams) -> Result<Keygen>,
) -> Result<Enrolment> {
    let key_params = match case {
        CaseStrategy::Case1 => ThresholdParams::new(0, 1)?,
        _ => {
            params.validate()?;
            params
        }
    };
    if let Some(want) = expected_devices(case, params) {
        if devices.len() != want {
            return Err(Error::param(format!(
                "case {} with n = {} needs {want} dumb devices, got {}",
                case.number(),
                params.n,
                devices.len()
            )));
        }
    }
    let code = match case {
        CaseStrategy::Case3 { r, .. } => Some(CodeParams::for_field(&group.field(), r)?),
        _ => None,
    };
    let (public_key, shares, commitments) = keygen(key_params)?;
    let mut shares = shares.into_iter();

    let key = match case {
        CaseStrategy::Case1 => PdKey::Whole(shares.next().expect("one share")),
        _ if case.pd_holds_share() => PdKey::Threshold(shares.next()),
        _ => PdKey::Threshold(None),
    };
    let index_offset = u32::from(case.pd_holds_share());

    let mut helpers = BTreeMap::new();
    let mut dds = Vec::with_capacity(devices.len());
    for (i, device) in devices.into_iter().enumerate() {
        let index = i as u32 + 1 + index_offset;
        let share = match case {
            CaseStrategy::Case1 => None,
            _ => Some(shares.next().expect("one share per device")),
        };
        let share = match (&code, share) {
            (Some(code), Some(share)) => {
                let template = device.template.ok_or_else(|| {
                    Error::param(format!(
                        "case 3 needs an enrolment template for device {index}"
                    ))
                })?;
                let bits = scalar_to_bits(&share.value, code.m)?;
                helpers.insert(index, fe_enroll(bits, template, code)?);
                None
            }
            (_, share) => share,
        };
        dds.push(DdEnrolment {
            index,
            modality: device.modality,
            share,
        });
    }

    Ok(Enrolment {
        registration: SpRegistration {
            user_id: user_id.to_string(),
            public_key: public_key.clone(),
        },
        pd: PdEnrolment {
            case,
            public_key,
            key,
            commitments,
            helpers,
        },
        dds,
    })
}
