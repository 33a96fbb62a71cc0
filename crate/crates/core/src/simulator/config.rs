// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::algebra::GroupParams;
use crate::authscore::{FusionPolicy, Modality};
use crate::error::{Error, Result};
use crate::fuzzy_extractor::CodeParams;
use crate::protocol::{CaseStrategy, ScoringMode};
use crate::sharing::ThresholdParams;

/// Adversary behaviour for every trial of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryKind {
    #[default]
    None,
    /// Runs the flow with only the persistent state of `k` stolen DDs.
    StolenK { k: u32 },
    /// Flips one bit of a partial signature in transit.
    TamperPartial,
    /// Resubmits the genuine flow's response.
    Replay,
    /// Passive: reports plaintext payloads seen on external links.
    Eavesdrop,
    /// Impostor readings plus a forged maximal score response.
    ScoreInflate,
}

impl AdversaryKind {
    /// Whether trials under this adversary count towards FAR.
    pub fn is_active(&self) -> bool {
        !matches!(self, AdversaryKind::None | AdversaryKind::Eavesdrop)
    }
}

/// Behavioural score distributions; each reading is uniform in its range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreModel {
    pub genuine: [f64; 2],
    pub impostor: [f64; 2],
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel {
            genuine: [0.75, 1.0],
            impostor: [0.0, 0.6],
        }
    }
}

fn default_group() -> String {
    "sim-q32".to_string()
}

fn default_paillier_bits() -> u64 {
    256
}

fn default_user() -> String {
    "user-1".to_string()
}

fn default_sp() -> String {
    "sp-1".to_string()
}

/// One reproducible scenario. In case 1, `n` is the number of dumb devices
/// and `t` is ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: CaseStrategy,
    pub t: u32,
    pub n: u32,
    /// DD indices reachable during authentication; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub present_devices: Option<Vec<u32>>,
    /// Per-bit flip probability of genuine authentication templates.
    #[serde(default)]
    pub noise: f64,
    /// Fresh uniform templates and impostor-range scores.
    #[serde(default)]
    pub impostor: bool,
    #[serde(default)]
    pub adversary: AdversaryKind,
    #[serde(default)]
    pub policy: FusionPolicy,
    #[serde(default)]
    pub scoring: ScoringMode,
    #[serde(default = "default_group")]
    pub group: String,
    #[serde(default)]
    pub score_model: ScoreModel,
    #[serde(default = "default_paillier_bits")]
    pub paillier_bits: u64,
    #[serde(default = "default_user")]
    pub user_id: String,
    #[serde(default = "default_sp")]
    pub sp_id: String,
    pub seed: u64,
    pub trials: u64,
}

impl ScenarioConfig {
    /// Genuine, adversary-free scenario with defaults elsewhere.
    pub fn new(case: CaseStrategy, t: u32, n: u32, seed: u64, trials: u64) -> Self {
        ScenarioConfig {
            case,
            t,
            n,
            present_devices: None,
            noise: 0.0,
            impostor: false,
            adversary: AdversaryKind::None,
            policy: FusionPolicy::default(),
            scoring: ScoringMode::Local,
            group: default_group(),
            score_model: ScoreModel::default(),
            paillier_bits: default_paillier_bits(),
            user_id: default_user(),
            sp_id: default_sp(),
            seed,
            trials,
        }
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Indices of all enrolled DDs.
    pub fn dd_indices(&self) -> Vec<u32> {
        let first = 1 + u32::from(self.case.pd_holds_share());
        (first..=self.n).collect()
    }

    pub fn present(&self) -> Vec<u32> {
        match &self.present_devices {
            Some(p) => {
                let mut p = p.clone();
                p.sort_unstable();
                p
            }
            None => self.dd_indices(),
        }
    }

    /// DD modalities, cycling through the positively weighted ones.
    pub fn modalities(&self) -> Vec<Modality> {
        let weighted: Vec<Modality> = self
            .policy
            .weights
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(m, _)| *m)
            .collect();
        (0..self.dd_indices().len())
            .map(|i| weighted[i % weighted.len()])
            .collect()
    }

    pub fn group_params(&self) -> Result<GroupParams> {
        GroupParams::by_name(&self.group).map_err(|e| Error::config("group", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let group = self.group_params()?;
        if self.n == 0 {
            return Err(Error::config("n", "at least one device is required"));
        }
        if self.case.is_threshold() {
            ThresholdParams::new(self.t, self.n).map_err(|e| Error::config("t", e.to_string()))?;
            if self.case.pd_holds_share() && self.n < 2 {
                return Err(Error::config("n", "a PD share leaves no dumb devices"));
            }
        }
        if BigUint::from(self.n) >= *group.q() {
            return Err(Error::config("n", "must be below the group order"));
        }
        if let CaseStrategy::Case3 { r, .. } = self.case {
            CodeParams::for_field(&group.field(), r)
                .map_err(|e| Error::config("case.r", e.to_string()))?;
        }
        if let Some(present) = &self.present_devices {
            let valid: BTreeSet<u32> = self.dd_indices().into_iter().collect();
            let mut seen = BTreeSet::new();
            for (i, d) in present.iter().enumerate() {
                if !valid.contains(d) {
                    return Err(Error::config(
                        format!("present_devices[{i}]"),
                        format!("{d} is not an enrolled dumb device"),
                    ));
                }
                if !seen.insert(*d) {
                    return Err(Error::config(
                        format!("present_devices[{i}]"),
                        format!("{d} is listed twice"),
                    ));
                }
            }
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::config(
                "noise",
                format!("{} is outside [0, 0.5]", self.noise),
            ));
        }
        if let AdversaryKind::StolenK { k } = self.adversary {
            if k > self.n {
                return Err(Error::config(
                    "adversary.k",
                    format!("k = {k} exceeds n = {}", self.n),
                ));
            }
            if k as usize > self.dd_indices().len() {
                return Err(Error::config(
                    "adversary.k",
                    format!(
                        "only {} dumb devices can be stolen",
                        self.dd_indices().len()
                    ),
                ));
            }
        }
        self.policy
            .validate()
            .map_err(|e| Error::config("policy", e.to_string()))?;
        for (name, [lo, hi]) in [
            ("score_model.genuine", self.score_model.genuine),
            ("score_model.impostor", self.score_model.impostor),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::config(name, "range must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        if self.scoring == ScoringMode::CloudEncrypted && self.paillier_bits < 32 {
            return Err(Error::config(
                "paillier_bits",
                "at least 32 bits are required",
            ));
        }
        if self.user_id.is_empty() {
            return Err(Error::config("user_id", "must not be empty"));
        }
        if self.sp_id.is_empty() {
            return Err(Error::config("sp_id", "must not be empty"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_json(s)
    }

    fn path_of(r: Result<ScenarioConfig>) -> String {
        match r {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(r#"{"case":{"kind":"case3"},"t":2,"n":5,"seed":1,"trials":10}"#).unwrap();
        assert_eq!(
            c.case,
            CaseStrategy::Case3 {
                pd_holds_share: false,
                r: 5
            }
        );
        assert_eq!(c.group, "sim-q32");
        assert_eq!(c.adversary, AdversaryKind::None);
        assert_eq!(c.dd_indices(), [1, 2, 3, 4, 5]);
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn errors_carry_field_paths() {
        let base = r#""case":{"kind":"case2"},"t":1,"n":3,"seed":1,"trials":1"#;
        assert_eq!(
            path_of(parse(&format!(r#"{{{base},"noise":0.7}}"#))),
            "noise"
        );
        assert_eq!(
            path_of(parse(&format!(
                r#"{{{base},"adversary":{{"kind":"stolen_k","k":4}}}}"#
            ))),
            "adversary.k"
        );
        assert_eq!(
            path_of(parse(&format!(r#"{{{base},"present_devices":[1,9]}}"#))),
            "present_devices[1]"
        );
        assert_eq!(
            path_of(parse(&format!(r#"{{{base},"group":"nope"}}"#))),
            "group"
        );
        assert_eq!(
            path_of(parse(&format!(
                r#"{{{base},"policy":{{"weights":{{"gait":-1}},"theta":0.7,"staleness_max":10}}}}"#
            ))),
            "policy"
        );
        assert_eq!(
            path_of(parse(&format!(
                r#"{{{base},"adversary":{{"kind":"sneaky"}}}}"#
            ))),
            "adversary.kind"
        );
        assert_eq!(path_of(parse(&format!(r#"{{{base},"bogus":1}}"#))), "bogus");
        assert_eq!(
            path_of(parse(
                r#"{"case":{"kind":"case2"},"t":3,"n":3,"seed":1,"trials":1}"#
            )),
            "t"
        );
        assert_eq!(
            path_of(parse(
                r#"{"case":{"kind":"case3","r":4},"t":1,"n":3,"seed":1,"trials":1}"#
            )),
            "case.r"
        );
        assert_eq!(
            path_of(parse(
                r#"{"case":{"kind":"case2"},"t":1,"n":"3","seed":1,"trials":1}"#
            )),
            "n"
        );
    }

    #[test]
    fn pd_share_shifts_device_indices() {
        let c = parse(
            r#"{"case":{"kind":"case2","pd_holds_share":true},"t":1,"n":3,"seed":1,"trials":1}"#,
        )
        .unwrap();
        assert_eq!(c.dd_indices(), [2, 3]);
        assert_eq!(c.modalities().len(), 2);
    }
}
