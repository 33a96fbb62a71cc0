// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::fs;
use std::path::Path;

use fas_core::algebra::GroupParams;
use fas_core::exec::ExecMode;
use fas_core::kat;
use fas_core::protocol::{CaseStrategy, PdKey, ScoringMode};
use fas_core::sharing::ThresholdParams;
use fas_core::simulator::{
    authenticate_once, enroll_scenario, estimate_rates, simulate, ScenarioConfig,
};
use fas_core::thresholdsig::keygen_dealer;
use fas_core::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::{Command, ScenarioArgs};

/// Below this many trials per point, rate estimates are too coarse to quote.
const MIN_RATE_TRIALS: u64 = 1000;

pub struct Outcome {
    pub json: Value,
    pub summary: String,
    pub exit: u8,
}

impl Outcome {
    fn ok(json: Value, summary: String) -> Self {
        Outcome {
            json,
            summary,
            exit: 0,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub path: Option<String>,
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError {
            kind: "usage",
            path: None,
            message,
            code: 2,
        }
    }

    pub fn internal(message: String) -> Self {
        CliError {
            kind: "internal",
            path: None,
            message,
            code: 3,
        }
    }

    fn config(path: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: "config",
            path: Some(path.to_string()),
            message: message.into(),
            code: 2,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            kind: "io",
            path: Some(path.display().to_string()),
            message: e.to_string(),
            code: 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) if !p.is_empty() => write!(f, "{} error at `{p}`: {}", self.kind, self.message),
            _ => write!(f, "{} error: {}", self.kind, self.message),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { path, message } => CliError {
                kind: "config",
                path: Some(path),
                message,
                code: 2,
            },
            Error::Parameter(_)
            | Error::Policy(_)
            | Error::Registration(_)
            | Error::Encoding(_)
            | Error::NonInvertible => CliError {
                kind: "parameter",
                path: None,
                message: e.to_string(),
                code: 2,
            },
            other => CliError::internal(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_output(output: Option<&Path>, value: &Value) -> CliResult<()> {
    match output {
        Some(path) => write_file(path, &format!("{}\n", pretty(value))),
        None => Ok(()),
    }
}

fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

fn exec_mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.4}"))
}

/// Builds a scenario from an optional base file plus flag overrides.
fn scenario(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let mut config = match (&args.config, args.case) {
        (Some(path), _) => load_config(path)?,
        (None, Some(_)) => ScenarioConfig::new(CaseStrategy::Case1, 1, 3, 0, 1),
        (None, None) => return Err(CliError::config("case", "give --case or --config")),
    };
    if let Some(c) = args.case {
        config.case = CaseStrategy::from_number(c)
            .ok_or_else(|| CliError::config("case", format!("{c} is not 1, 2 or 3")))?;
    }
    match &mut config.case {
        CaseStrategy::Case1 => {
            if args.pd_share {
                return Err(CliError::config(
                    "pd_share",
                    "case 1 has no threshold shares",
                ));
            }
            if args.r.is_some() {
                return Err(CliError::config("r", "only case 3 uses a repetition code"));
            }
        }
        CaseStrategy::Case2 { pd_holds_share } => {
            *pd_holds_share |= args.pd_share;
            if args.r.is_some() {
                return Err(CliError::config("r", "only case 3 uses a repetition code"));
            }
        }
        CaseStrategy::Case3 { pd_holds_share, r } => {
            *pd_holds_share |= args.pd_share;
            if let Some(v) = args.r {
                *r = v;
            }
        }
    }
    if let Some(t) = args.t {
        config.t = t;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(noise) = args.noise {
        config.noise = noise;
    }
    if let Some(s) = &args.scoring {
        config.scoring = serde_json::from_value::<ScoringMode>(json!(s)).map_err(|_| {
            CliError::config(
                "scoring",
                format!("`{s}` is not local, cloud-plain or cloud-encrypted"),
            )
        })?;
    }
    if let Some(g) = &args.group {
        config.group = g.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(command: Command, verbose: u8) -> CliResult<Outcome> {
    match command {
        Command::Keygen {
            group,
            t,
            n,
            seed,
            output,
        } => keygen(&group, t, n, seed, output.as_deref()),
        Command::Enroll {
            scenario: s,
            output,
        } => enroll(&scenario(&s)?, output.as_deref()),
        Command::Auth {
            scenario: s,
            scores,
            output,
        } => auth(&scenario(&s)?, scores.as_deref(), output.as_deref()),
        Command::Simulate {
            config,
            seed,
            output,
            transcript,
            sequential,
        } => {
            let mut c = load_config(&config)?;
            if let Some(seed) = seed {
                c.seed = seed;
            }
            run_simulation(
                &c,
                output.as_deref(),
                transcript,
                exec_mode(sequential),
                verbose,
            )
        }
        Command::Rates {
            config,
            seed,
            sweep,
            output,
            sequential,
        } => {
            let mut c = load_config(&config)?;
            if let Some(seed) = seed {
                c.seed = seed;
            }
            rates(&c, &sweep, output.as_deref(), exec_mode(sequential))
        }
        Command::VerifyKat { output } => verify_kat(output.as_deref(), verbose),
    }
}

fn keygen(group: &str, t: u32, n: u32, seed: u64, output: Option<&Path>) -> CliResult<Outcome> {
    let g = GroupParams::by_name(group).map_err(|e| CliError::config("group", e.to_string()))?;
    let params = ThresholdParams::new(t, n).map_err(|e| CliError::config("t", e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (pk, shares, commitments) = keygen_dealer(params, &g, &mut rng)?;
    let json = json!({
        "command": "keygen",
        "group": group,
        "seed": seed,
        "public_key": pk,
        "shares": shares,
        "commitments": commitments,
    });
    write_output(output, &json)?;
    let summary = format!("keygen: {} shares, any {} sign, group {group}", n, t + 1);
    Ok(Outcome::ok(json, summary))
}

fn enroll(config: &ScenarioConfig, output: Option<&Path>) -> CliResult<Outcome> {
    let e = enroll_scenario(config)?;
    let pd_key = match &e.pd.key {
        PdKey::Whole(_) => json!("whole_key"),
        PdKey::Threshold(Some(s)) => json!({ "share_index": s.index }),
        PdKey::Threshold(None) => Value::Null,
    };
    let dds: Vec<Value> = e
        .dds
        .iter()
        .map(|d| {
            json!({
                "index": d.index,
                "modality": d.modality,
                "stores_share": d.share.is_some(),
                "helper_data": e.pd.helpers.get(&d.index),
            })
        })
        .collect();
    let json = json!({
        "command": "enroll",
        "case": config.case,
        "seed": config.seed,
        "registration": e.registration,
        "pd": {
            "key": pd_key,
            "commitments": e.pd.commitments,
            "helper_data_count": e.pd.helpers.len(),
        },
        "dds": dds,
    });
    write_output(output, &json)?;
    let storing = e.dds.iter().filter(|d| d.share.is_some()).count();
    let summary = format!(
        "enroll: case {}, {} dumb devices ({} store a share), {} helper records on the PD",
        config.case.number(),
        e.dds.len(),
        storing,
        e.pd.helpers.len()
    );
    Ok(Outcome::ok(json, summary))
}

fn auth(
    config: &ScenarioConfig,
    scores: Option<&[f64]>,
    output: Option<&Path>,
) -> CliResult<Outcome> {
    let run = authenticate_once(config, scores)?;
    let o = &run.outcome;
    let json = json!({
        "command": "auth",
        "case": config.case,
        "seed": config.seed,
        "granted": o.granted,
        "reason": o.reason,
        "score": o.score,
        "messages": o.messages,
        "transcript_digest": run.transcript_digest,
    });
    write_output(output, &json)?;
    let verdict = match o.reason {
        None if o.granted => "granted".to_string(),
        reason => format!("denied ({})", reason.map_or("unknown", |r| r.as_str())),
    };
    let score = o
        .score
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
    Ok(Outcome {
        json,
        summary: format!("auth: {verdict}, score {score}, {} messages", o.messages),
        exit: if o.granted { 0 } else { 1 },
    })
}

fn run_simulation(
    config: &ScenarioConfig,
    output: Option<&Path>,
    with_transcript: bool,
    mode: ExecMode,
    verbose: u8,
) -> CliResult<Outcome> {
    let run = simulate(config, mode)?;
    let report = &run.report;
    let json = serde_json::to_value(report).map_err(|e| CliError::internal(e.to_string()))?;
    match output {
        Some(dir) if with_transcript => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            write_file(&dir.join("report.json"), &format!("{}\n", pretty(&json)))?;
            let lines: String = run.transcript.iter().map(|l| format!("{l}\n")).collect();
            write_file(&dir.join("transcript.jsonl"), &lines)?;
        }
        Some(path) => write_file(path, &format!("{}\n", pretty(&json)))?,
        None => {}
    }
    let mut summary = format!(
        "simulate: {} trials, {} granted, {} denied, FRR {}, FAR {}, digest {}",
        report.trials,
        report.granted,
        report.denied,
        fmt_rate(report.frr),
        fmt_rate(report.far),
        report.transcript_digest
    );
    if verbose >= 1 {
        for (reason, count) in &report.deny_reasons {
            summary.push_str(&format!("\n  denied {reason}: {count}"));
        }
    }
    if verbose >= 2 {
        for o in &report.outcomes {
            let reason = o.reason.map_or("", |r| r.as_str());
            summary.push_str(&format!(
                "\n  trial {} granted={} {reason}",
                o.trial, o.granted
            ));
        }
    }
    Ok(Outcome::ok(json, summary))
}

fn rates(
    config: &ScenarioConfig,
    sweep: &[f64],
    output: Option<&Path>,
    mode: ExecMode,
) -> CliResult<Outcome> {
    let rows = estimate_rates(config, sweep, mode)?;
    let mut warnings = Vec::new();
    if config.trials < MIN_RATE_TRIALS {
        warnings.push(format!(
            "{} trials per point; at least {MIN_RATE_TRIALS} are needed for stable estimates",
            config.trials
        ));
    }
    let json = json!({
        "command": "rates",
        "trials": config.trials,
        "seed": config.seed,
        "rows": rows,
        "warnings": warnings,
    });
    write_output(output, &json)?;
    let mut summary = String::from("rates: p_flip  FRR  FAR");
    for r in &rows {
        summary.push_str(&format!(
            "\n  {:.3}  {}  {}",
            r.p_flip,
            fmt_rate(r.frr),
            fmt_rate(r.far)
        ));
    }
    for w in &warnings {
        summary.push_str(&format!("\nwarning: {w}"));
    }
    Ok(Outcome::ok(json, summary))
}

fn verify_kat(output: Option<&Path>, verbose: u8) -> CliResult<Outcome> {
    let checks = kat::run_all();
    let failed: Vec<&kat::KatCheck> = checks.iter().filter(|c| !c.pass).collect();
    let json = json!({
        "command": "verify-kat",
        "passed": checks.len() - failed.len(),
        "failed": failed.len(),
        "checks": checks,
    });
    write_output(output, &json)?;
    let mut summary = format!(
        "verify-kat: {}/{} checks pass",
        checks.len() - failed.len(),
        checks.len()
    );
    for c in &checks {
        if !c.pass || verbose >= 1 {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            summary.push_str(&format!(
                "\n  {mark} {}: expected {}, got {}",
                c.name, c.expected, c.actual
            ));
        }
    }
    Ok(Outcome {
        exit: if failed.is_empty() { 0 } else { 3 },
        json,
        summary,
    })
}
