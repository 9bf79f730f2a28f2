//! Flat key-value configuration files.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Keys are dotted, values are identifiers with optional
//! parenthesized arguments. Example:
//!
//! ```text
//! label = two-proposal-pool
//! target = bimodal
//! proposal.1 = ind_gauss(-10,10)
//! proposal.1.count = 50
//! proposal.2 = ind_gauss(2,10)
//! proposal.2.count = 50
//! weight = importance
//! acceptance = generalized
//! iterations = 5000
//! replications = 200
//! seed = 1
//! init = 0
//! stats = accept_rate, lag1_corr, sel_rate
//! out = results.csv
//! ```
//!
//! Recognized identifiers:
//!
//! * target: `bimodal`, `levy(eta,nu)`, `smiling_face`
//! * proposal: `rw_gauss(sigma)`, `ind_gauss(mu,sigma)` with `mu` a number
//!   or `(u,v)` for the two-dimensional target
//! * weight: `importance`, `target`, `constant`, `sqrt_target`, `target_sq`,
//!   `target_cube`, `target_power(theta)`, `reverse_proposal`,
//!   `inv_proposal`, `target_times_reverse`, `lambda_form(lambda)`
//! * lambda: `const(c)`, `cross_max`, `cross_min`, `cross_sum`
//! * acceptance: `mh`, `generalized`, `noref`, `composed(betaK,gammaK)` with
//!   `beta1`..`beta7` and `gamma1`..`gamma3`
//! * stats: `accept_rate`, `lag1_corr`, `mode_jump_rate`, `normconst_recip`,
//!   `sel_rate`

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{HarnessError, Result};
use crate::experiment::{
    AcceptanceSpec, BetaSpec, ExperimentSpec, GammaSpec, LambdaSpec, ProposalGroup,
    ProposalSpec, StatKind, TargetSpec, WeightSpec,
};

const VALID_KEYS: &str = "label, target, proposal.<i>, proposal.<i>.count, weight, \
     acceptance, iterations, replications, seed, init, stats, out, tries";

/// Parses a configuration file into an experiment description.
///
/// The spec still needs [`ExperimentSpec::validate`] before running.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(HarnessError::Config(format!(
                "line {}: empty value for '{key}'",
                lineno + 1
            )));
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(HarnessError::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }

    let mut take = |key: &str| pairs.remove(key);

    let label = take("label").unwrap_or_else(|| "experiment".to_string());
    let target = parse_target(&require(take("target"), "target")?)?;
    let weight = match take("weight") {
        Some(v) => parse_weight(&v)?,
        None => WeightSpec::Importance,
    };
    let acceptance = match take("acceptance") {
        Some(v) => parse_acceptance(&v)?,
        None => AcceptanceSpec::Generalized,
    };
    let iterations = parse_int(take("iterations").as_deref().unwrap_or("5000"), "iterations")?;
    let replications =
        parse_int(take("replications").as_deref().unwrap_or("200"), "replications")?;
    let seed: u64 = take("seed")
        .as_deref()
        .unwrap_or("1")
        .parse()
        .map_err(|_| HarnessError::config("seed must be an unsigned integer"))?;
    let init = take("init").map(|v| parse_point(&v)).transpose()?;
    let stats = match take("stats") {
        Some(v) => parse_stats(&v)?,
        None => vec![StatKind::AcceptRate, StatKind::Lag1Corr],
    };
    let out = take("out").map(PathBuf::from);
    let expected_tries = take("tries")
        .map(|v| parse_int(&v, "tries"))
        .transpose()?;

    // Remaining keys are the proposal entries; anything else is unknown.
    let mut proposals: BTreeMap<usize, (Option<String>, Option<String>)> = BTreeMap::new();
    for (key, value) in pairs {
        let Some(rest) = key.strip_prefix("proposal.") else {
            return Err(HarnessError::Config(format!(
                "unknown key '{key}'; valid keys: {VALID_KEYS}"
            )));
        };
        let (index_str, field) = match rest.split_once('.') {
            Some((i, "count")) => (i, true),
            Some((_, other)) => {
                return Err(HarnessError::Config(format!(
                    "unknown proposal field '{other}' in '{key}' (only 'count' is valid)"
                )));
            }
            None => (rest, false),
        };
        let index: usize = index_str.parse().map_err(|_| {
            HarnessError::Config(format!("proposal index in '{key}' must be an integer"))
        })?;
        let entry = proposals.entry(index).or_default();
        if field {
            entry.1 = Some(value);
        } else {
            entry.0 = Some(value);
        }
    }
    if proposals.is_empty() {
        return Err(HarnessError::config(
            "at least one proposal.<i> entry is required",
        ));
    }
    let mut groups = Vec::new();
    for (expected, (index, (id, count))) in proposals.into_iter().enumerate() {
        if index != expected + 1 {
            return Err(HarnessError::Config(format!(
                "proposal indices must be contiguous from 1; missing proposal.{}",
                expected + 1
            )));
        }
        let id = id.ok_or_else(|| {
            HarnessError::Config(format!("proposal.{index} has a count but no identifier"))
        })?;
        let count = match count {
            Some(c) => parse_int(&c, "count")?,
            None => 1,
        };
        if count == 0 {
            return Err(HarnessError::Config(format!(
                "proposal.{index}.count must be at least 1"
            )));
        }
        groups.push(ProposalGroup { spec: parse_proposal(&id)?, count });
    }

    Ok(ExperimentSpec {
        label,
        target,
        proposals: groups,
        weight,
        acceptance,
        iterations,
        replications,
        seed,
        init,
        stats,
        out,
        expected_tries,
    })
}

fn require(value: Option<String>, key: &str) -> Result<String> {
    value.ok_or_else(|| HarnessError::Config(format!("missing required key '{key}'")))
}

fn parse_int(value: &str, key: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{key} must be a nonnegative integer, got '{value}'")))
}

fn parse_f64(value: &str, context: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{context}: '{value}' is not a number")))
}

/// Splits `name(arg1,arg2)` into the name and top-level arguments;
/// a bare `name` yields no arguments.
fn parse_call(value: &str) -> Result<(&str, Vec<&str>)> {
    let value = value.trim();
    let Some(open) = value.find('(') else {
        return Ok((value, Vec::new()));
    };
    if !value.ends_with(')') {
        return Err(HarnessError::Config(format!(
            "'{value}' is missing a closing parenthesis"
        )));
    }
    let name = value[..open].trim();
    let inner = &value[open + 1..value.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(|| {
                    HarnessError::Config(format!("unbalanced parentheses in '{value}'"))
                })?;
            }
            ',' if depth == 0 => {
                args.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(HarnessError::Config(format!(
            "unbalanced parentheses in '{value}'"
        )));
    }
    let last = inner[start..].trim();
    if !last.is_empty() {
        args.push(last);
    }
    Ok((name, args))
}

fn expect_args(name: &str, args: &[&str], want: usize) -> Result<()> {
    if args.len() != want {
        return Err(HarnessError::Config(format!(
            "{name} takes {want} argument(s), got {}",
            args.len()
        )));
    }
    Ok(())
}

pub fn parse_target(value: &str) -> Result<TargetSpec> {
    let (name, args) = parse_call(value)?;
    match name {
        "bimodal" => {
            expect_args("bimodal", &args, 0)?;
            Ok(TargetSpec::Bimodal)
        }
        "levy" => {
            expect_args("levy", &args, 2)?;
            let eta = parse_f64(args[0], "levy eta")?;
            let nu = parse_f64(args[1], "levy nu")?;
            if nu <= 0.0 {
                return Err(HarnessError::config("levy nu must be positive"));
            }
            Ok(TargetSpec::Levy { eta, nu })
        }
        "smiling_face" => {
            expect_args("smiling_face", &args, 0)?;
            Ok(TargetSpec::SmilingFace)
        }
        other => Err(HarnessError::Config(format!(
            "unknown target '{other}'; valid: bimodal, levy(eta,nu), smiling_face"
        ))),
    }
}

fn parse_point(value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    if let Some(inner) = value.strip_prefix('(').and_then(|v| v.strip_suffix(')')) {
        inner
            .split(',')
            .map(|part| parse_f64(part, "coordinate"))
            .collect()
    } else {
        Ok(vec![parse_f64(value, "coordinate")?])
    }
}

pub fn parse_proposal(value: &str) -> Result<ProposalSpec> {
    let (name, args) = parse_call(value)?;
    match name {
        "rw_gauss" => {
            expect_args("rw_gauss", &args, 1)?;
            let sigma = parse_f64(args[0], "rw_gauss sigma")?;
            if sigma <= 0.0 {
                return Err(HarnessError::config("rw_gauss sigma must be positive"));
            }
            Ok(ProposalSpec::RwGauss { sigma })
        }
        "ind_gauss" => {
            expect_args("ind_gauss", &args, 2)?;
            let mean = parse_point(args[0])?;
            let sigma = parse_f64(args[1], "ind_gauss sigma")?;
            if sigma <= 0.0 {
                return Err(HarnessError::config("ind_gauss sigma must be positive"));
            }
            Ok(ProposalSpec::IndGauss { mean, sigma })
        }
        other => Err(HarnessError::Config(format!(
            "unknown proposal '{other}'; valid: rw_gauss(sigma), ind_gauss(mu,sigma)"
        ))),
    }
}

fn parse_lambda(value: &str) -> Result<LambdaSpec> {
    let (name, args) = parse_call(value)?;
    match name {
        "const" => {
            expect_args("const", &args, 1)?;
            let c = parse_f64(args[0], "const lambda")?;
            if c < 0.0 {
                return Err(HarnessError::config("const lambda must be nonnegative"));
            }
            Ok(LambdaSpec::Const(c))
        }
        "cross_max" => {
            expect_args("cross_max", &args, 0)?;
            Ok(LambdaSpec::CrossMax)
        }
        "cross_min" => {
            expect_args("cross_min", &args, 0)?;
            Ok(LambdaSpec::CrossMin)
        }
        "cross_sum" => {
            expect_args("cross_sum", &args, 0)?;
            Ok(LambdaSpec::CrossSum)
        }
        other => Err(HarnessError::Config(format!(
            "unknown lambda '{other}'; valid: const(c), cross_max, cross_min, cross_sum"
        ))),
    }
}

pub fn parse_weight(value: &str) -> Result<WeightSpec> {
    let (name, args) = parse_call(value)?;
    match name {
        "importance" => Ok(WeightSpec::Importance),
        "target" => Ok(WeightSpec::TargetOnly),
        "constant" => Ok(WeightSpec::Constant),
        "sqrt_target" => Ok(WeightSpec::SqrtTarget),
        "target_sq" => Ok(WeightSpec::TargetSquared),
        "target_cube" => Ok(WeightSpec::TargetCubed),
        "target_power" => {
            expect_args("target_power", &args, 1)?;
            let theta = parse_f64(args[0], "target_power theta")?;
            if theta <= 0.0 {
                return Err(HarnessError::config("target_power theta must be positive"));
            }
            Ok(WeightSpec::TargetPower(theta))
        }
        "reverse_proposal" => Ok(WeightSpec::ReverseProposal),
        "inv_proposal" => Ok(WeightSpec::InverseProposal),
        "target_times_reverse" => Ok(WeightSpec::TargetTimesReverse),
        "lambda_form" => {
            expect_args("lambda_form", &args, 1)?;
            Ok(WeightSpec::LambdaForm(parse_lambda(args[0])?))
        }
        other => Err(HarnessError::Config(format!(
            "unknown weight '{other}'; valid: importance, target, constant, sqrt_target, \
             target_sq, target_cube, target_power(theta), reverse_proposal, inv_proposal, \
             target_times_reverse, lambda_form(lambda)"
        ))),
    }
}

pub fn parse_acceptance(value: &str) -> Result<AcceptanceSpec> {
    let (name, args) = parse_call(value)?;
    match name {
        "mh" => Ok(AcceptanceSpec::Mh),
        "generalized" => Ok(AcceptanceSpec::Generalized),
        "noref" => Ok(AcceptanceSpec::NoReference),
        "composed" => {
            expect_args("composed", &args, 2)?;
            Ok(AcceptanceSpec::Composed {
                beta: parse_beta(args[0])?,
                gamma: parse_gamma(args[1])?,
            })
        }
        other => Err(HarnessError::Config(format!(
            "unknown acceptance '{other}'; valid: mh, generalized, noref, \
             composed(beta,gamma)"
        ))),
    }
}

pub fn parse_beta(value: &str) -> Result<BetaSpec> {
    match value.trim() {
        "beta1" => Ok(BetaSpec::Beta1),
        "beta2" => Ok(BetaSpec::Beta2),
        "beta3" => Ok(BetaSpec::Beta3),
        "beta4" => Ok(BetaSpec::Beta4),
        "beta5" => Ok(BetaSpec::Beta5),
        "beta6" => Ok(BetaSpec::Beta6),
        "beta7" => Ok(BetaSpec::Beta7),
        other => Err(HarnessError::Config(format!(
            "unknown beta '{other}'; valid: beta1..beta7"
        ))),
    }
}

pub fn parse_gamma(value: &str) -> Result<GammaSpec> {
    match value.trim() {
        "gamma1" => Ok(GammaSpec::Gamma1),
        "gamma2" => Ok(GammaSpec::Gamma2),
        "gamma3" => Ok(GammaSpec::Gamma3),
        other => Err(HarnessError::Config(format!(
            "unknown gamma '{other}'; valid: gamma1, gamma2, gamma3"
        ))),
    }
}

fn parse_stats(value: &str) -> Result<Vec<StatKind>> {
    let mut stats = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let kind = match part {
            "accept_rate" => StatKind::AcceptRate,
            "lag1_corr" => StatKind::Lag1Corr,
            "mode_jump_rate" => StatKind::ModeJumpRate,
            "normconst_recip" => StatKind::NormconstRecip,
            "sel_rate" => StatKind::SelRate,
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown statistic '{other}'; valid: accept_rate, lag1_corr, \
                     mode_jump_rate, normconst_recip, sel_rate"
                )));
            }
        };
        if stats.contains(&kind) {
            return Err(HarnessError::Config(format!("duplicate statistic '{part}'")));
        }
        stats.push(kind);
    }
    Ok(stats)
}
