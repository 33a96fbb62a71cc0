// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic scenario harness.
//!
//! Every trial builds a fresh user, SP and FASP, enrols, then runs one
//! genuine or adversarial authentication over the logical-tick network.
//! Trial `i` draws all randomness from generators seeded with
//! `seed ^ i`, one ChaCha20 stream per purpose:
//!
//! | stream | draws                                                   |
//! |--------|---------------------------------------------------------|
//! | 0      | template bits (enrolment, then impostor templates)      |
//! | 1      | noise bits of genuine authentication templates          |
//! | 2      | protocol nonces: SP challenges, signing nonces, Paillier |
//! | 3      | polynomial coefficients, Paillier primes                |
//! | 4      | behavioural scores, stolen-device choice                |
//!
//! Trials are independent, so they may run in parallel; the report is
//! assembled in trial order and is byte-identical either way.

mod config;
mod hooks;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{AdversaryKind, ScenarioConfig, ScoreModel};
pub use hooks::{ForgeScore, TamperPartial};

use crate::algebra::GroupParams;
use crate::authscore::paillier::PheKeypair;
use crate::error::{Error, Result};
use crate::exec::{map_trials, ExecMode};
use crate::fuzzy_extractor::{fe_enroll, fe_reproduce, Bits, CodeParams, Template};
use crate::protocol::{
    enroll, AdversaryGateway, AttackPlan, AuthResult, CaseStrategy, DenyReason, DeviceProfile,
    Enrolment, EntityId, Message, Payload, ProtocolContext, ScoringMode, SensorSample, World,
};
use crate::sharing::ThresholdParams;

/// Threats the simulator deliberately does not model.
pub const OUT_OF_SCOPE: [&str; 3] = ["denial_of_service", "availability", "timing_side_channels"];

const TEMPLATE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const PROTOCOL_STREAM: u64 = 2;
const KEY_STREAM: u64 = 3;
const SCORE_STREAM: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub adversarial: bool,
    pub granted: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<DenyReason>,
    /// Fused score seen by the PD gate, when it got that far.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    pub messages: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecoveryStats {
    pub attempts: u64,
    pub failures: u64,
}

/// What a passive observer of the PD's external links learnt.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EavesdropReport {
    /// Messages to or from the SP or the FASP.
    pub external_messages: u64,
    /// External messages carrying at least one plaintext score.
    pub plaintext_score_payloads: u64,
    pub plaintext_score_values: u64,
    /// Payload types seen with plaintext scores.
    pub plaintext_types: BTreeSet<String>,
    /// Plaintext scores retained anywhere in FASP state.
    pub fasp_plaintext_scores_held: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub granted: u64,
    pub denied: u64,
    pub grant_rate: Option<f64>,
    pub genuine_trials: u64,
    pub adversarial_trials: u64,
    /// Genuine denials over genuine trials.
    pub frr: Option<f64>,
    /// Adversarial grants over adversarial trials.
    pub far: Option<f64>,
    pub deny_reasons: BTreeMap<String, u64>,
    pub message_counts: BTreeMap<String, u64>,
    pub share_recovery: ShareRecoveryStats,
    /// Hex SHA-256 of the JSON-lines transcript.
    pub transcript_digest: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eavesdrop: Option<EavesdropReport>,
    pub out_of_scope: Vec<String>,
    pub outcomes: Vec<TrialOutcome>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// A report plus its transcript, one wire message per line.
#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub report: SimReport,
    pub transcript: Vec<String>,
}

/// Result of [`authenticate_once`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleRun {
    pub outcome: TrialOutcome,
    pub transcript_digest: String,
    #[serde(skip)]
    pub transcript: Vec<String>,
}

struct TrialRecord {
    outcome: TrialOutcome,
    lines: Vec<String>,
    counts: BTreeMap<&'static str, u64>,
    fe: ShareRecoveryStats,
    eavesdrop: EavesdropReport,
}

/// Runs a scenario with the default execution mode.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimReport> {
    Ok(simulate(config, ExecMode::default())?.report)
}

pub fn run_scenario_with(config: &ScenarioConfig, mode: ExecMode) -> Result<SimReport> {
    Ok(simulate(config, mode)?.report)
}

/// Runs every trial and keeps the transcript.
pub fn simulate(config: &ScenarioConfig, mode: ExecMode) -> Result<SimRun> {
    config.validate()?;
    let group = config.group_params()?;
    let records: Vec<TrialRecord> =
        map_trials(config.trials, mode, |i| run_trial(config, &group, i, None))
            .into_iter()
            .collect::<Result<_>>()?;
    Ok(assemble(config, records))
}

fn transcript_digest<'a>(lines: impl IntoIterator<Item = &'a String>) -> String {
    let mut h = Sha256::new();
    for line in lines {
        h.update(line.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn assemble(config: &ScenarioConfig, records: Vec<TrialRecord>) -> SimRun {
    let mut granted = 0;
    let mut genuine = 0;
    let mut genuine_denied = 0;
    let mut adversarial = 0;
    let mut adversarial_granted = 0;
    let mut deny_reasons = BTreeMap::new();
    let mut message_counts = BTreeMap::new();
    let mut share_recovery = ShareRecoveryStats::default();
    let mut eavesdrop = EavesdropReport::default();
    let mut outcomes = Vec::with_capacity(records.len());
    let mut transcript = Vec::new();
    for rec in records {
        let o = &rec.outcome;
        granted += u64::from(o.granted);
        if o.adversarial {
            adversarial += 1;
            adversarial_granted += u64::from(o.granted);
        } else {
            genuine += 1;
            genuine_denied += u64::from(!o.granted);
        }
        if let Some(r) = o.reason {
            *deny_reasons.entry(r.as_str().to_string()).or_insert(0) += 1;
        }
        for (k, v) in rec.counts {
            *message_counts.entry(k.to_string()).or_insert(0) += v;
        }
        share_recovery.attempts += rec.fe.attempts;
        share_recovery.failures += rec.fe.failures;
        eavesdrop.external_messages += rec.eavesdrop.external_messages;
        eavesdrop.plaintext_score_payloads += rec.eavesdrop.plaintext_score_payloads;
        eavesdrop.plaintext_score_values += rec.eavesdrop.plaintext_score_values;
        eavesdrop.fasp_plaintext_scores_held += rec.eavesdrop.fasp_plaintext_scores_held;
        eavesdrop
            .plaintext_types
            .extend(rec.eavesdrop.plaintext_types);
        outcomes.push(rec.outcome);
        transcript.extend(rec.lines);
    }
    let trials = outcomes.len() as u64;
    let report = SimReport {
        trials,
        granted,
        denied: trials - granted,
        grant_rate: ratio(granted, trials),
        genuine_trials: genuine,
        adversarial_trials: adversarial,
        frr: ratio(genuine_denied, genuine),
        far: ratio(adversarial_granted, adversarial),
        deny_reasons,
        message_counts,
        share_recovery,
        transcript_digest: transcript_digest(&transcript),
        eavesdrop: (config.adversary == AdversaryKind::Eavesdrop).then_some(eavesdrop),
        out_of_scope: OUT_OF_SCOPE.iter().map(|s| s.to_string()).collect(),
        outcomes,
    };
    SimRun { report, transcript }
}

fn uniform(rng: &mut ChaCha20Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// One authentication (trial 0 of `config`), optionally with fixed
/// behavioural scores in DD order instead of draws from the score model.
pub fn authenticate_once(config: &ScenarioConfig, scores: Option<&[f64]>) -> Result<SingleRun> {
    config.validate()?;
    let group = config.group_params()?;
    if let Some(scores) = scores {
        let dds = config.dd_indices().len();
        if scores.len() != dds {
            return Err(Error::config(
                "scores",
                format!("expected {dds} scores, got {}", scores.len()),
            ));
        }
        if let Some(i) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::config(
                format!("scores[{i}]"),
                format!("{} is outside [0, 1]", scores[i]),
            ));
        }
    }
    let record = run_trial(config, &group, 0, scores)?;
    Ok(SingleRun {
        transcript_digest: transcript_digest(&record.lines),
        outcome: record.outcome,
        transcript: record.lines,
    })
}

/// Enrolment of trial 0, as the CLI `enroll` command shows it.
pub fn enroll_scenario(config: &ScenarioConfig) -> Result<Enrolment> {
    config.validate()?;
    let group = config.group_params()?;
    let mut template_rng = stream(config.seed, TEMPLATE_STREAM);
    let mut key_rng = stream(config.seed, KEY_STREAM);
    Ok(enrol_user(config, &group, &mut template_rng, &mut key_rng)?.0)
}

type EnrolledUser = (Enrolment, Option<CodeParams>, Option<Vec<Bits>>);

fn enrol_user(
    config: &ScenarioConfig,
    group: &GroupParams,
    template_rng: &mut ChaCha20Rng,
    key_rng: &mut ChaCha20Rng,
) -> Result<EnrolledUser> {
    let code = match config.case {
        CaseStrategy::Case3 { r, .. } => Some(CodeParams::for_field(&group.field(), r)?),
        _ => None,
    };
    let templates: Option<Vec<Bits>> = code.map(|code| {
        config
            .dd_indices()
            .iter()
            .map(|_| Bits::random(code.codeword_len(), template_rng))
            .collect()
    });
    let profiles: Vec<DeviceProfile> = config
        .modalities()
        .into_iter()
        .enumerate()
        .map(|(i, modality)| DeviceProfile {
            modality,
            template: templates.as_ref().map(|t| Template(t[i].clone())),
        })
        .collect();
    let params = ThresholdParams {
        t: config.t,
        n: config.n,
    };
    let enrolment = enroll(
        &config.user_id,
        config.case,
        params,
        profiles,
        group,
        key_rng,
    )?;
    Ok((enrolment, code, templates))
}

fn run_trial(
    config: &ScenarioConfig,
    group: &GroupParams,
    trial: u64,
    fixed_scores: Option<&[f64]>,
) -> Result<TrialRecord> {
    let seed = config.seed ^ trial;
    let mut template_rng = stream(seed, TEMPLATE_STREAM);
    let mut noise_rng = stream(seed, NOISE_STREAM);
    let mut protocol_rng = stream(seed, PROTOCOL_STREAM);
    let mut key_rng = stream(seed, KEY_STREAM);
    let mut score_rng = stream(seed, SCORE_STREAM);

    let indices = config.dd_indices();
    let (enrolment, code, enrolment_templates) =
        enrol_user(config, group, &mut template_rng, &mut key_rng)?;
    let public_y = enrolment.registration.public_key.y.clone();
    let ctx = ProtocolContext::new(group.clone());
    let mut world = World::from_enrolment(enrolment, config.policy.clone(), &ctx, &config.sp_id);
    world.set_session_base(trial.wrapping_shl(8) | 1);

    let impostor = config.impostor || config.adversary == AdversaryKind::ScoreInflate;
    let range = if impostor {
        config.score_model.impostor
    } else {
        config.score_model.genuine
    };
    for (slot, index) in indices.iter().enumerate() {
        let drawn = uniform(&mut score_rng, range);
        let score = fixed_scores.map_or(drawn, |s| s[slot]);
        let template = match (&code, &enrolment_templates) {
            (Some(code), _) if impostor => {
                Some(Bits::random(code.codeword_len(), &mut template_rng))
            }
            (Some(code), Some(enrolled)) => {
                let noise = Bits::bernoulli(code.codeword_len(), config.noise, &mut noise_rng);
                Some(&enrolled[slot] ^ &noise)
            }
            _ => None,
        };
        world
            .dds
            .get_mut(index)
            .expect("enrolled")
            .set_sensor(SensorSample {
                score,
                template: template.map(Template),
            });
    }
    let present = config.present();
    // a thief holds the stolen devices whether or not the user has them nearby
    if !matches!(config.adversary, AdversaryKind::StolenK { .. }) {
        world.dds.retain(|i, _| present.contains(i));
    }
    let pd = world.pd.as_mut().expect("world has a PD");
    pd.set_live(present.iter().copied());
    match config.scoring {
        ScoringMode::Local => {}
        ScoringMode::CloudPlain => pd.set_scoring(ScoringMode::CloudPlain, None)?,
        ScoringMode::CloudEncrypted => {
            let kp = PheKeypair::generate(config.paillier_bits, &mut key_rng)?;
            pd.set_scoring(ScoringMode::CloudEncrypted, Some(kp))?;
        }
    }

    let result = match config.adversary {
        AdversaryKind::None | AdversaryKind::Eavesdrop => {
            world.authenticate(&mut protocol_rng)?.result
        }
        AdversaryKind::TamperPartial => {
            world.add_hook(Box::new(TamperPartial::new(group.field())));
            world.authenticate(&mut protocol_rng)?.result
        }
        AdversaryKind::ScoreInflate => {
            world.add_hook(Box::new(ForgeScore));
            world.authenticate(&mut protocol_rng)?.result
        }
        AdversaryKind::Replay => {
            world.authenticate(&mut protocol_rng)?;
            let captured = world.transcript().iter().find_map(|m| match &m.payload {
                Payload::AuthResponse(r) => Some(r.clone()),
                _ => None,
            });
            match captured {
                Some(resp) => {
                    world.adversary =
                        Some(AdversaryGateway::new(AttackPlan::Replay(resp), ctx.clone()));
                    world.attack(&mut protocol_rng)?.result
                }
                None => AuthResult::denied(DenyReason::Incomplete),
            }
        }
        AdversaryKind::StolenK { k } => {
            let picks = rand::seq::index::sample(&mut score_rng, indices.len(), k as usize);
            let stolen: BTreeSet<u32> = picks.into_iter().map(|i| indices[i]).collect();
            world.dds.retain(|i, _| stolen.contains(i));
            world.pd = None;
            world.adversary = Some(AdversaryGateway::new(
                AttackPlan::StolenDevices {
                    user_id: config.user_id.clone(),
                    y: public_y,
                    devices: stolen,
                },
                ctx.clone(),
            ));
            world.attack(&mut protocol_rng)?.result
        }
    };

    let mut counts = BTreeMap::new();
    let mut eavesdrop = EavesdropReport::default();
    let mut lines = Vec::with_capacity(world.transcript().len());
    for m in world.transcript() {
        *counts.entry(m.type_name()).or_insert(0) += 1;
        if is_external(m) {
            eavesdrop.external_messages += 1;
            let values = m.payload.plaintext_scores() as u64;
            if values > 0 {
                eavesdrop.plaintext_score_payloads += 1;
                eavesdrop.plaintext_score_values += values;
                eavesdrop.plaintext_types.insert(m.type_name().to_string());
            }
        }
        lines.push(m.to_json());
    }
    eavesdrop.fasp_plaintext_scores_held = world.fasp.plaintext_scores_held() as u64;
    let fe = world
        .dds
        .values()
        .fold(ShareRecoveryStats::default(), |acc, d| {
            let (a, f) = d.fe_stats();
            ShareRecoveryStats {
                attempts: acc.attempts + a,
                failures: acc.failures + f,
            }
        });
    let score = world
        .pd
        .as_ref()
        .and_then(|pd| world.transcript().first().and_then(|m| pd.score(m.session)));
    Ok(TrialRecord {
        outcome: TrialOutcome {
            trial,
            adversarial: config.impostor || config.adversary.is_active(),
            granted: result.granted,
            reason: result.reason,
            score,
            messages: lines.len() as u64,
        },
        lines,
        counts,
        fe,
        eavesdrop,
    })
}

fn is_external(m: &Message) -> bool {
    [&m.from, &m.to]
        .iter()
        .any(|e| matches!(e, EntityId::Sp(_) | EntityId::Fasp))
}

/// FRR and FAR at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub p_flip: f64,
    pub frr: Option<f64>,
    pub far: Option<f64>,
    /// Per-DD share-recovery failure rate in the genuine runs.
    pub share_recovery_failure: Option<f64>,
    pub genuine_trials: u64,
    pub impostor_trials: u64,
}

/// For each `p_flip`, one genuine run for FRR and one impostor run for FAR,
/// both adversary-free.
pub fn estimate_rates(
    config: &ScenarioConfig,
    sweep: &[f64],
    mode: ExecMode,
) -> Result<Vec<RateRow>> {
    sweep
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut genuine = config.clone();
            genuine.noise = p;
            genuine.impostor = false;
            genuine.adversary = AdversaryKind::None;
            genuine.validate().map_err(|e| match e {
                Error::Config { path, message } if path == "noise" => {
                    Error::config(format!("sweep[{i}]"), message)
                }
                other => other,
            })?;
            let mut impostor = genuine.clone();
            impostor.impostor = true;
            let g = run_scenario_with(&genuine, mode)?;
            let a = run_scenario_with(&impostor, mode)?;
            Ok(RateRow {
                p_flip: p,
                frr: g.frr,
                far: a.far,
                share_recovery_failure: ratio(g.share_recovery.failures, g.share_recovery.attempts),
                genuine_trials: g.genuine_trials,
                impostor_trials: a.adversarial_trials,
            })
        })
        .collect()
}

/// Fraction of single-device enrol/reproduce rounds that fail to return
/// the enrolled key, with uniformly random `m`-bit keys and templates and
/// per-bit template noise `p_flip`.
pub fn estimate_share_recovery_failure(
    code: CodeParams,
    p_flip: f64,
    trials: u64,
    seed: u64,
    mode: ExecMode,
) -> Result<f64> {
    code.validate()?;
    if !(0.0..=1.0).contains(&p_flip) {
        return Err(Error::param(format!("p_flip {p_flip} is outside [0, 1]")));
    }
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let failures: Vec<Result<bool>> = map_trials(trials, mode, |i| {
        let seed = seed ^ i;
        let mut template_rng = stream(seed, TEMPLATE_STREAM);
        let mut noise_rng = stream(seed, NOISE_STREAM);
        let mut key_rng = stream(seed, KEY_STREAM);
        let enrolled = Bits::random(code.codeword_len(), &mut template_rng);
        let key = Bits::random(code.m, &mut key_rng);
        let helper = fe_enroll(key.clone(), Template(enrolled.clone()), &code)?;
        let noisy = &enrolled ^ &Bits::bernoulli(code.codeword_len(), p_flip, &mut noise_rng);
        Ok(fe_reproduce(&Template(noisy), &helper)? != key)
    });
    let mut count = 0u64;
    for f in failures {
        count += u64::from(f?);
    }
    Ok(count as f64 / trials as f64)
}

/// Reruns `config` and checks its transcript digest. With the recorded
/// transcript at hand, a mismatch names the first divergent message.
pub fn replay_transcript(
    digest: &str,
    config: &ScenarioConfig,
    recorded: Option<&[String]>,
) -> Result<bool> {
    let run = simulate(config, ExecMode::default())?;
    if run.report.transcript_digest == digest {
        return Ok(true);
    }
    let detail = recorded.and_then(|old| {
        let at = old
            .iter()
            .zip(&run.transcript)
            .position(|(a, b)| a != b)
            .or_else(|| {
                (old.len() != run.transcript.len()).then(|| old.len().min(run.transcript.len()))
            })?;
        let describe = |line: Option<&String>| {
            line.and_then(|l| Message::from_json(l).ok())
                .map(|m| {
                    format!(
                        "{} {} -> {} (session {})",
                        m.type_name(),
                        m.from,
                        m.to,
                        m.session.0
                    )
                })
                .unwrap_or_else(|| "end of transcript".to_string())
        };
        Some(format!(
            "first divergent message is #{at}: recorded {}, replayed {}",
            describe(old.get(at)),
            describe(run.transcript.get(at))
        ))
    });
    Err(Error::Nondeterminism(detail.unwrap_or_else(|| {
        format!(
            "transcript digest {} != expected {digest}",
            run.report.transcript_digest
        )
    })))
}
