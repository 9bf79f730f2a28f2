//! Experiment descriptions and the replication runner.
//!
//! An [`ExperimentSpec`] is a declarative description of one table row: a
//! target, a proposal pool, a weight preset, an acceptance rule and the run
//! geometry. [`run_experiment`] compiles it, runs the replications in
//! parallel on deterministic per-replication streams and aggregates the
//! requested statistics.

use std::path::PathBuf;
use std::sync::Arc;

use mtm::acceptance::{
    AcceptanceRule, BetaRule, CrossMax, CrossMin, CrossSum, GammaRule, LambdaRef,
};
use mtm::diagnostics::{
    acceptance_rate, aggregate, lag1_correlation, mode_jump_rate,
    normconst_from_accumulator, AggregateSummary, RunSummary,
};
use mtm::models::{
    BimodalQuartic, IndGauss, LevyDensity, RwGauss, SmilingFace, WeightPreset,
};
use mtm::sampler::{run_chain_with, run_mh, ChainTrace, SamplerConfig, TraceOptions};
use mtm::state::{ProposalRef, RngStream, StatePoint, TargetRef, WeightRef};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Target identifier with parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Bimodal,
    Levy { eta: f64, nu: f64 },
    SmilingFace,
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::SmilingFace => 2,
            _ => 1,
        }
    }

    pub fn build(&self) -> TargetRef {
        match self {
            TargetSpec::Bimodal => Arc::new(BimodalQuartic),
            TargetSpec::Levy { eta, nu } => Arc::new(LevyDensity::new(*eta, *nu)),
            TargetSpec::SmilingFace => Arc::new(SmilingFace),
        }
    }

    /// Default initial state: the origin, except for the one-sided density
    /// where the origin may be out of support.
    pub fn default_init(&self) -> Vec<f64> {
        match self {
            TargetSpec::Bimodal => vec![0.0],
            TargetSpec::Levy { eta, nu } => vec![eta + nu],
            TargetSpec::SmilingFace => vec![0.0, 0.0],
        }
    }

    pub fn id_string(&self) -> String {
        match self {
            TargetSpec::Bimodal => "bimodal".into(),
            TargetSpec::Levy { eta, nu } => format!("levy({},{})", fmt_num(*eta), fmt_num(*nu)),
            TargetSpec::SmilingFace => "smiling_face".into(),
        }
    }
}

/// Proposal identifier with parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ProposalSpec {
    RwGauss { sigma: f64 },
    IndGauss { mean: Vec<f64>, sigma: f64 },
}

impl ProposalSpec {
    pub fn build(&self, dim: usize) -> ProposalRef {
        match self {
            ProposalSpec::RwGauss { sigma } => Arc::new(RwGauss::new(*sigma, dim)),
            ProposalSpec::IndGauss { mean, sigma } => {
                Arc::new(IndGauss::new(StatePoint::new(mean.iter().cloned()), *sigma))
            }
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ProposalSpec::RwGauss { .. } => None,
            ProposalSpec::IndGauss { mean, .. } => Some(mean.len()),
        }
    }

    pub fn id_string(&self) -> String {
        match self {
            ProposalSpec::RwGauss { sigma } => format!("rw_gauss({})", fmt_num(*sigma)),
            ProposalSpec::IndGauss { mean, sigma } => {
                let mu = if mean.len() == 1 {
                    fmt_num(mean[0])
                } else {
                    let parts: Vec<String> = mean.iter().map(|m| fmt_num(*m)).collect();
                    format!("({})", parts.join(","))
                };
                format!("ind_gauss({mu},{})", fmt_num(*sigma))
            }
        }
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// A proposal repeated `count` times in the pool.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalGroup {
    pub spec: ProposalSpec,
    pub count: usize,
}

/// Built-in lambda identifiers for weight and acceptance parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSpec {
    Const(f64),
    CrossMax,
    CrossMin,
    CrossSum,
}

impl LambdaSpec {
    pub fn build(&self) -> LambdaRef {
        match self {
            LambdaSpec::Const(c) => Arc::new(mtm::acceptance::ConstLambda(*c)),
            LambdaSpec::CrossMax => Arc::new(CrossMax),
            LambdaSpec::CrossMin => Arc::new(CrossMin),
            LambdaSpec::CrossSum => Arc::new(CrossSum),
        }
    }

    pub fn id_string(&self) -> String {
        match self {
            LambdaSpec::Const(c) => format!("const({})", fmt_num(*c)),
            LambdaSpec::CrossMax => "cross_max".into(),
            LambdaSpec::CrossMin => "cross_min".into(),
            LambdaSpec::CrossSum => "cross_sum".into(),
        }
    }
}

/// Weight preset identifier with parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Importance,
    TargetOnly,
    Constant,
    SqrtTarget,
    TargetSquared,
    TargetCubed,
    TargetPower(f64),
    ReverseProposal,
    InverseProposal,
    TargetTimesReverse,
    LambdaForm(LambdaSpec),
}

impl WeightSpec {
    pub fn build(&self) -> WeightRef {
        match self {
            WeightSpec::Importance => Arc::new(WeightPreset::Importance),
            WeightSpec::TargetOnly => Arc::new(WeightPreset::TargetOnly),
            WeightSpec::Constant => Arc::new(WeightPreset::Constant),
            WeightSpec::SqrtTarget => Arc::new(WeightPreset::SqrtTarget),
            WeightSpec::TargetSquared => Arc::new(WeightPreset::TargetSquared),
            WeightSpec::TargetCubed => Arc::new(WeightPreset::TargetCubed),
            WeightSpec::TargetPower(theta) => Arc::new(WeightPreset::TargetPower(*theta)),
            WeightSpec::ReverseProposal => Arc::new(WeightPreset::ReverseProposal),
            WeightSpec::InverseProposal => Arc::new(WeightPreset::InverseProposal),
            WeightSpec::TargetTimesReverse => Arc::new(WeightPreset::TargetTimesReverse),
            WeightSpec::LambdaForm(l) => Arc::new(WeightPreset::LambdaForm(l.build())),
        }
    }

    pub fn id_string(&self) -> String {
        match self {
            WeightSpec::Importance => "importance".into(),
            WeightSpec::TargetOnly => "target".into(),
            WeightSpec::Constant => "constant".into(),
            WeightSpec::SqrtTarget => "sqrt_target".into(),
            WeightSpec::TargetSquared => "target_sq".into(),
            WeightSpec::TargetCubed => "target_cube".into(),
            WeightSpec::TargetPower(t) => format!("target_power({})", fmt_num(*t)),
            WeightSpec::ReverseProposal => "reverse_proposal".into(),
            WeightSpec::InverseProposal => "inv_proposal".into(),
            WeightSpec::TargetTimesReverse => "target_times_reverse".into(),
            WeightSpec::LambdaForm(l) => format!("lambda_form({})", l.id_string()),
        }
    }
}

/// Acceptance rule identifier.
#[derive(Clone, Debug, PartialEq)]
pub enum AcceptanceSpec {
    /// Textbook single-try chain; requires a pool of exactly one proposal.
    Mh,
    Generalized,
    NoReference,
    Composed { beta: BetaSpec, gamma: GammaSpec },
}

/// Pointwise factor identifiers. The lambda-based rules get admissible
/// built-in lambdas so every configurable rule stays inside [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaSpec {
    Beta1,
    Beta2,
    Beta3,
    Beta4,
    Beta5,
    Beta6,
    Beta7,
}

impl BetaSpec {
    pub fn build(&self) -> BetaRule {
        match self {
            BetaSpec::Beta1 => BetaRule::MinRatio,
            BetaSpec::Beta2 => BetaRule::Barker,
            BetaSpec::Beta3 => BetaRule::Hastings(None),
            BetaSpec::Beta4 => BetaRule::ReverseOverLambda(Arc::new(CrossMax)),
            BetaSpec::Beta5 => BetaRule::LambdaOverForward(Arc::new(CrossMin)),
            BetaSpec::Beta6 => {
                BetaRule::TargetScaled(Arc::new(mtm::acceptance::MinProposalOverTarget))
            }
            BetaSpec::Beta7 => {
                BetaRule::ProposalScaled(Arc::new(mtm::acceptance::MinTargetOverProposal))
            }
        }
    }

    pub fn id_string(&self) -> &'static str {
        match self {
            BetaSpec::Beta1 => "beta1",
            BetaSpec::Beta2 => "beta2",
            BetaSpec::Beta3 => "beta3",
            BetaSpec::Beta4 => "beta4",
            BetaSpec::Beta5 => "beta5",
            BetaSpec::Beta6 => "beta6",
            BetaSpec::Beta7 => "beta7",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaSpec {
    Gamma1,
    Gamma2,
    Gamma3,
}

impl GammaSpec {
    pub fn build(&self) -> GammaRule {
        match self {
            GammaSpec::Gamma1 => GammaRule::ReverseWeight,
            GammaSpec::Gamma2 => GammaRule::BarkerWeights,
            GammaSpec::Gamma3 => GammaRule::MinWeightRatio,
        }
    }

    pub fn id_string(&self) -> &'static str {
        match self {
            GammaSpec::Gamma1 => "gamma1",
            GammaSpec::Gamma2 => "gamma2",
            GammaSpec::Gamma3 => "gamma3",
        }
    }
}

impl AcceptanceSpec {
    pub fn id_string(&self) -> String {
        match self {
            AcceptanceSpec::Mh => "mh".into(),
            AcceptanceSpec::Generalized => "generalized".into(),
            AcceptanceSpec::NoReference => "noref".into(),
            AcceptanceSpec::Composed { beta, gamma } => {
                format!("composed({},{})", beta.id_string(), gamma.id_string())
            }
        }
    }
}

/// Statistics the harness can report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatKind {
    AcceptRate,
    Lag1Corr,
    ModeJumpRate,
    NormconstRecip,
    SelRate,
}

impl StatKind {
    pub fn id_string(&self) -> &'static str {
        match self {
            StatKind::AcceptRate => "accept_rate",
            StatKind::Lag1Corr => "lag1_corr",
            StatKind::ModeJumpRate => "mode_jump_rate",
            StatKind::NormconstRecip => "normconst_recip",
            StatKind::SelRate => "sel_rate",
        }
    }
}

/// Declarative description of one experiment (one table row).
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    /// Row key in the output table.
    pub label: String,
    pub target: TargetSpec,
    pub proposals: Vec<ProposalGroup>,
    pub weight: WeightSpec,
    pub acceptance: AcceptanceSpec,
    pub iterations: usize,
    pub replications: usize,
    pub seed: u64,
    /// Initial state; target default when absent.
    pub init: Option<Vec<f64>>,
    pub stats: Vec<StatKind>,
    /// Output path requested by the config file, if any.
    pub out: Option<PathBuf>,
    /// Optional cross-check against the total pool size.
    pub expected_tries: Option<usize>,
}

impl ExperimentSpec {
    pub fn num_tries(&self) -> usize {
        self.proposals.iter().map(|g| g.count).sum()
    }

    /// Canonical one-line description of the sampler parameters, used by the
    /// table manifest.
    pub fn manifest_fragment(&self) -> String {
        let proposals: Vec<String> = self
            .proposals
            .iter()
            .map(|g| format!("{}x{}", g.spec.id_string(), g.count))
            .collect();
        format!(
            "{}:{}:{}:{}",
            self.label,
            self.acceptance.id_string(),
            proposals.join("+"),
            self.weight.id_string()
        )
    }

    /// Checks identifiers, dimensions and statistic applicability. Returns
    /// warnings for statistics that are dropped rather than rejected.
    pub fn validate(&mut self) -> Result<Vec<String>> {
        if self.replications < 1 {
            return Err(HarnessError::config("replications must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(HarnessError::config("iterations must be at least 1"));
        }
        if self.proposals.is_empty() || self.num_tries() == 0 {
            return Err(HarnessError::config("need at least one proposal try"));
        }
        if let Some(expected) = self.expected_tries {
            let actual = self.num_tries();
            if expected != actual {
                return Err(HarnessError::Config(format!(
                    "tries = {expected} does not match the proposal pool size {actual}"
                )));
            }
        }
        if matches!(self.acceptance, AcceptanceSpec::Mh) && self.num_tries() != 1 {
            return Err(HarnessError::config(
                "acceptance = mh requires a pool of exactly one proposal",
            ));
        }
        let dim = self.target.dim();
        for group in &self.proposals {
            if let Some(d) = group.spec.dim() {
                if d != dim {
                    return Err(HarnessError::Config(format!(
                        "proposal '{}' has dimension {d} but the target has dimension {dim}",
                        group.spec.id_string()
                    )));
                }
            }
        }
        if let Some(init) = &self.init {
            if init.len() != dim {
                return Err(HarnessError::Config(format!(
                    "init has dimension {} but the target has dimension {dim}",
                    init.len()
                )));
            }
        }
        if self.stats.is_empty() {
            return Err(HarnessError::config("stats list must not be empty"));
        }
        if self.stats.contains(&StatKind::NormconstRecip)
            && !matches!(self.weight, WeightSpec::Importance)
        {
            return Err(HarnessError::config(
                "normconst_recip requires weight = importance",
            ));
        }
        if self.stats.contains(&StatKind::NormconstRecip)
            && matches!(self.acceptance, AcceptanceSpec::Mh)
        {
            return Err(HarnessError::config(
                "normconst_recip needs candidate weights; use a multiple-try acceptance rule",
            ));
        }
        if self.stats.contains(&StatKind::ModeJumpRate)
            && matches!(self.target, TargetSpec::Levy { .. })
        {
            return Err(HarnessError::config(
                "mode_jump_rate is not defined for the one-sided target",
            ));
        }
        let mut warnings = Vec::new();
        if matches!(self.target, TargetSpec::Levy { .. })
            && self.stats.contains(&StatKind::Lag1Corr)
        {
            self.stats.retain(|s| *s != StatKind::Lag1Corr);
            warnings.push(
                "lag1_corr dropped: the heavy-tailed target has no finite moments".to_string(),
            );
            if self.stats.is_empty() {
                return Err(HarnessError::config(
                    "no statistics left after dropping lag1_corr",
                ));
            }
        }
        Ok(warnings)
    }
}

/// Aggregated outcome of one experiment.
#[derive(Clone, Debug)]
pub struct RowOutcome {
    pub key: String,
    pub stats: Vec<StatKind>,
    pub dim: usize,
    pub groups: usize,
    pub aggregate: AggregateSummary,
}

struct Compiled {
    target: TargetRef,
    sampler: Option<SamplerConfig>,
    mh_proposal: Option<ProposalRef>,
    init: StatePoint,
    options: TraceOptions,
    group_of: Vec<usize>,
    mode_fn: Option<fn(&StatePoint) -> usize>,
}

fn bimodal_mode(point: &StatePoint) -> usize {
    usize::from(point.as_scalar() > 0.0)
}

fn face_mode(point: &StatePoint) -> usize {
    SmilingFace.mode_index(point)
}

fn compile(spec: &ExperimentSpec) -> Result<Compiled> {
    let dim = spec.target.dim();
    let target = spec.target.build();
    let mut pool: Vec<ProposalRef> = Vec::with_capacity(spec.num_tries());
    let mut group_of = Vec::with_capacity(spec.num_tries());
    for (g, group) in spec.proposals.iter().enumerate() {
        let built = group.spec.build(dim);
        for _ in 0..group.count {
            pool.push(built.clone());
            group_of.push(g);
        }
    }
    let init = StatePoint::new(
        spec.init
            .clone()
            .unwrap_or_else(|| spec.target.default_init())
            .into_iter(),
    );
    let options = TraceOptions {
        keep_step_detail: false,
        track_forward_weight_mean: spec.stats.contains(&StatKind::NormconstRecip),
    };
    let mode_fn: Option<fn(&StatePoint) -> usize> =
        if spec.stats.contains(&StatKind::ModeJumpRate) {
            match spec.target {
                TargetSpec::Bimodal => Some(bimodal_mode),
                TargetSpec::SmilingFace => Some(face_mode),
                TargetSpec::Levy { .. } => None,
            }
        } else {
            None
        };
    let (sampler, mh_proposal) = match &spec.acceptance {
        AcceptanceSpec::Mh => (None, Some(pool[0].clone())),
        AcceptanceSpec::Generalized => (
            Some(SamplerConfig {
                proposals: pool,
                weight: spec.weight.build(),
                acceptance: AcceptanceRule::Generalized,
            }),
            None,
        ),
        AcceptanceSpec::NoReference => (
            Some(SamplerConfig {
                proposals: pool,
                weight: spec.weight.build(),
                acceptance: AcceptanceRule::NoReference,
            }),
            None,
        ),
        AcceptanceSpec::Composed { beta, gamma } => (
            Some(SamplerConfig {
                proposals: pool,
                weight: spec.weight.build(),
                acceptance: AcceptanceRule::Composed {
                    beta: beta.build(),
                    gamma: gamma.build(),
                },
            }),
            None,
        ),
    };
    Ok(Compiled {
        target,
        sampler,
        mh_proposal,
        init,
        options,
        group_of,
        mode_fn,
    })
}

fn run_replication(
    compiled: &Compiled,
    spec: &ExperimentSpec,
    replication: u64,
) -> Result<RunSummary> {
    let mut rng = RngStream::new(spec.seed, replication);
    let trace = run_trace(compiled, spec.iterations, &mut rng)?;
    Ok(summarize(compiled, spec, &trace))
}

fn run_trace(compiled: &Compiled, steps: usize, rng: &mut RngStream) -> Result<ChainTrace> {
    match (&compiled.sampler, &compiled.mh_proposal) {
        (Some(cfg), None) => run_chain_with(
            compiled.init.clone(),
            cfg,
            &*compiled.target,
            steps,
            rng,
            compiled.options,
        ),
        (None, Some(proposal)) => Ok(run_mh(
            compiled.init.clone(),
            &*compiled.target,
            &**proposal,
            steps,
            rng,
        )),
        _ => unreachable!("compile produces exactly one driver"),
    }
    .map_err(HarnessError::from)
}

fn summarize(compiled: &Compiled, spec: &ExperimentSpec, trace: &ChainTrace) -> RunSummary {
    let dim = compiled.init.dim();
    let accept = acceptance_rate(trace);
    let lag1_corr: Vec<Option<f64>> = if spec.stats.contains(&StatKind::Lag1Corr) {
        (0..dim).map(|c| lag1_correlation(trace, c)).collect()
    } else {
        Vec::new()
    };
    let mode_jump = compiled.mode_fn.map(|f| {
        let rate = mode_jump_rate(trace, f);
        assert!(
            rate <= accept,
            "mode jumps are accepted moves, so their rate cannot exceed the acceptance rate"
        );
        rate
    });
    let normconst_recip = trace
        .forward_weight_mean
        .as_ref()
        .and_then(normconst_from_accumulator)
        .map(|mass| 1.0 / mass);
    let groups = compiled.group_of.last().map_or(0, |g| g + 1);
    let group_selection = if spec.stats.contains(&StatKind::SelRate) {
        let mut counts = vec![0usize; groups];
        let mut selected_total = 0usize;
        for r in &trace.records {
            if let Some(k) = r.selected {
                counts[compiled.group_of[k]] += 1;
                selected_total += 1;
            }
        }
        counts
            .into_iter()
            .map(|c| if selected_total == 0 { 0.0 } else { c as f64 / selected_total as f64 })
            .collect()
    } else {
        Vec::new()
    };
    RunSummary {
        acceptance_rate: accept,
        lag1_corr,
        mode_jump_rate: mode_jump,
        normconst_recip,
        group_selection,
    }
}

/// Runs all replications of one experiment and aggregates them.
///
/// Replication `r` always uses the random stream `(seed, r)`, so results are
/// independent of worker count and identical across repeated invocations.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RowOutcome> {
    let compiled = compile(spec)?;
    let summaries: Vec<RunSummary> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(&compiled, spec, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RowOutcome {
        key: spec.label.clone(),
        stats: spec.stats.clone(),
        dim: compiled.init.dim(),
        groups: spec.proposals.len(),
        aggregate: aggregate(&summaries),
    })
}

/// Runs a single chain (stream id 0) and returns its trace, for dumps.
pub fn run_single_trace(spec: &ExperimentSpec, steps: usize) -> Result<ChainTrace> {
    let compiled = compile(spec)?;
    let mut rng = RngStream::new(spec.seed, 0);
    run_trace(&compiled, steps, &mut rng)
}
