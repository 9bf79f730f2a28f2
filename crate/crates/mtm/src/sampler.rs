//! Chain drivers for multiple-try and single-try Metropolis steps.
//!
//! Randomness consumption order per step is fixed and documented so coupled
//! runs that share a stream stay aligned:
//!
//! 1. candidate draws, one per proposal in ascending index order;
//! 2. one selection uniform, only when there are at least two proposals and
//!    at least one candidate carries positive weight (a single proposal
//!    selects index 0 without drawing);
//! 3. reference draws in ascending index order, skipping the selected index
//!    (only for the rules that use reference points);
//! 4. one acceptance uniform, skipped when the step was already forced to
//!    reject because every candidate had zero weight.
//!
//! The single-try [`mh_step`] consumes one candidate draw and one acceptance
//! uniform, skipping the acceptance uniform when the candidate has zero
//! target density. A multiple-try step with one proposal therefore consumes
//! the stream exactly like the single-try step.

use crate::acceptance::{
    alpha_composed, alpha_generalized, alpha_noref, AcceptanceRule,
};
use crate::diagnostics::LogMeanAccumulator;
use crate::error::Result;
use crate::numeric::normalized_component;
use crate::state::{
    log_weight_eval, Proposal, ProposalRef, RngStream, StatePoint, Target, WeightRef,
};

/// Proposal pool, weight function and acceptance rule of one sampler.
#[derive(Clone)]
pub struct SamplerConfig {
    pub proposals: Vec<ProposalRef>,
    pub weight: WeightRef,
    pub acceptance: AcceptanceRule,
}

impl SamplerConfig {
    /// A pool of `n` tries through one shared proposal.
    pub fn homogeneous(
        proposal: ProposalRef,
        n: usize,
        weight: WeightRef,
        acceptance: AcceptanceRule,
    ) -> Self {
        assert!(n > 0, "need at least one try");
        SamplerConfig { proposals: vec![proposal; n], weight, acceptance }
    }

    pub fn num_tries(&self) -> usize {
        self.proposals.len()
    }
}

/// Candidate pool and weight tables of one step, kept only when requested.
#[derive(Clone, Debug)]
pub struct StepDetail {
    pub candidates: Vec<StatePoint>,
    pub forward_log_weights: Vec<f64>,
    pub reverse_log_weights: Vec<f64>,
}

/// Outcome of one step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub current: StatePoint,
    /// Index of the selected candidate; `None` when every candidate carried
    /// zero weight and the step was a forced rejection.
    pub selected: Option<usize>,
    /// Normalized forward selection weight of the selected candidate.
    pub w_y: f64,
    /// Normalized reverse selection weight of the selected candidate.
    pub w_x: f64,
    pub alpha: f64,
    pub accepted: bool,
    pub next: StatePoint,
    pub detail: Option<StepDetail>,
}

/// Samples an index proportional to `exp(log_weights)`.
///
/// Returns the index and its normalized weight, or `None` without touching
/// the stream when every weight is zero. A single-entry table selects index
/// 0 without drawing.
pub fn select_candidate(log_weights: &[f64], rng: &mut RngStream) -> Option<(usize, f64)> {
    assert!(!log_weights.is_empty());
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    if log_weights.len() == 1 {
        return Some((0, 1.0));
    }
    let mut total = 0.0;
    let exps: Vec<f64> = log_weights
        .iter()
        .map(|lw| {
            let e = (lw - max).exp();
            total += e;
            e
        })
        .collect();
    let u = rng.uniform() * total;
    let mut cum = 0.0;
    let mut chosen = None;
    for (i, e) in exps.iter().enumerate() {
        cum += e;
        if u < cum {
            chosen = Some(i);
            break;
        }
    }
    // Rounding can leave u marginally above the final cumulative sum; fall
    // back to the last positive entry.
    let k = chosen.unwrap_or_else(|| {
        exps.iter().rposition(|e| *e > 0.0).expect("a positive weight exists")
    });
    Some((k, exps[k] / total))
}

fn draw_candidates(
    x: &StatePoint,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
) -> Vec<StatePoint> {
    cfg.proposals.iter().map(|p| p.sample(x, rng)).collect()
}

fn forward_log_weights(
    x: &StatePoint,
    candidates: &[StatePoint],
    cfg: &SamplerConfig,
    target: &dyn Target,
) -> Result<Vec<f64>> {
    candidates
        .iter()
        .zip(&cfg.proposals)
        .map(|(y, p)| log_weight_eval(&*cfg.weight, target, &**p, y, x))
        .collect()
}

fn forced_rejection(x: &StatePoint, detail: StepDetail) -> StepRecord {
    StepRecord {
        current: x.clone(),
        selected: None,
        w_y: 0.0,
        w_x: 0.0,
        alpha: 0.0,
        accepted: false,
        next: x.clone(),
        detail: Some(detail),
    }
}

/// One multiple-try step with freshly drawn reference points.
///
/// Covers the [`AcceptanceRule::Generalized`] and
/// [`AcceptanceRule::Composed`] rules.
pub fn mtm_step_generalized(
    x: &StatePoint,
    cfg: &SamplerConfig,
    target: &dyn Target,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    assert!(
        !matches!(cfg.acceptance, AcceptanceRule::NoReference),
        "no-reference rule must go through mtm_step_noref"
    );
    let candidates = draw_candidates(x, cfg, rng);
    let fwd = forward_log_weights(x, &candidates, cfg, target)?;
    let Some((k, w_y)) = select_candidate(&fwd, rng) else {
        return Ok(forced_rejection(
            x,
            StepDetail {
                candidates,
                forward_log_weights: fwd,
                reverse_log_weights: Vec::new(),
            },
        ));
    };
    let y = &candidates[k];

    // Reference points: x stands in at slot k, the rest are fresh draws
    // conditioned on the selected candidate.
    let references: Vec<Option<StatePoint>> = cfg
        .proposals
        .iter()
        .enumerate()
        .map(|(i, p)| if i == k { None } else { Some(p.sample(y, rng)) })
        .collect();
    let rev: Vec<f64> = references
        .iter()
        .zip(&cfg.proposals)
        .map(|(r, p)| {
            let point = r.as_ref().unwrap_or(x);
            log_weight_eval(&*cfg.weight, target, &**p, point, y)
        })
        .collect::<Result<_>>()?;
    let w_x = normalized_component(&rev, k);

    let alpha = match &cfg.acceptance {
        AcceptanceRule::Generalized => {
            alpha_generalized(target, &*cfg.proposals[k], x, y, w_x, w_y)
        }
        AcceptanceRule::Composed { beta, gamma } => {
            alpha_composed(beta, gamma, target, &*cfg.proposals[k], x, y, w_x, w_y)?
        }
        AcceptanceRule::NoReference => unreachable!(),
    };
    let accepted = rng.uniform() < alpha;
    let next = if accepted { y.clone() } else { x.clone() };
    Ok(StepRecord {
        current: x.clone(),
        selected: Some(k),
        w_y,
        w_x,
        alpha,
        accepted,
        next,
        detail: Some(StepDetail {
            candidates,
            forward_log_weights: fwd,
            reverse_log_weights: rev,
        }),
    })
}

/// One multiple-try step that reuses the candidate pool in place of
/// reference points, drawing nothing on the reverse side.
pub fn mtm_step_noref(
    x: &StatePoint,
    cfg: &SamplerConfig,
    target: &dyn Target,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    let candidates = draw_candidates(x, cfg, rng);
    let fwd = forward_log_weights(x, &candidates, cfg, target)?;
    let Some((k, w_y)) = select_candidate(&fwd, rng) else {
        return Ok(forced_rejection(
            x,
            StepDetail {
                candidates,
                forward_log_weights: fwd,
                reverse_log_weights: Vec::new(),
            },
        ));
    };
    let y = &candidates[k];

    let rev: Vec<f64> = candidates
        .iter()
        .zip(&cfg.proposals)
        .enumerate()
        .map(|(i, (c, p))| {
            let point = if i == k { x } else { c };
            log_weight_eval(&*cfg.weight, target, &**p, point, y)
        })
        .collect::<Result<_>>()?;
    let w_x = normalized_component(&rev, k);

    let alpha = alpha_noref(target, &cfg.proposals, &candidates, k, x, w_x, w_y);
    let accepted = rng.uniform() < alpha;
    let next = if accepted { y.clone() } else { x.clone() };
    Ok(StepRecord {
        current: x.clone(),
        selected: Some(k),
        w_y,
        w_x,
        alpha,
        accepted,
        next,
        detail: Some(StepDetail {
            candidates,
            forward_log_weights: fwd,
            reverse_log_weights: rev,
        }),
    })
}

/// One single-try Metropolis step.
pub fn mh_step(
    x: &StatePoint,
    target: &dyn Target,
    proposal: &dyn Proposal,
    rng: &mut RngStream,
) -> StepRecord {
    let lp_x = target.log_density(x);
    assert!(lp_x > f64::NEG_INFINITY, "current state must have positive density");
    let y = proposal.sample(x, rng);
    let lp_y = target.log_density(&y);
    if lp_y == f64::NEG_INFINITY {
        return StepRecord {
            current: x.clone(),
            selected: None,
            w_y: 1.0,
            w_x: 1.0,
            alpha: 0.0,
            accepted: false,
            next: x.clone(),
            detail: Some(StepDetail {
                candidates: vec![y],
                forward_log_weights: vec![f64::NEG_INFINITY],
                reverse_log_weights: Vec::new(),
            }),
        };
    }
    let lq_y_x = proposal.log_cond_density(&y, x);
    let lq_x_y = proposal.log_cond_density(x, &y);
    let log_ratio = (lp_y + lq_x_y) - (lp_x + lq_y_x);
    let alpha = log_ratio.min(0.0).exp();
    let accepted = rng.uniform() < alpha;
    let next = if accepted { y.clone() } else { x.clone() };
    StepRecord {
        current: x.clone(),
        selected: Some(0),
        w_y: 1.0,
        w_x: 1.0,
        alpha,
        accepted,
        next,
        detail: Some(StepDetail {
            candidates: vec![y],
            forward_log_weights: Vec::new(),
            reverse_log_weights: Vec::new(),
        }),
    }
}

/// What a chain run keeps per step.
#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Keep candidate pools and weight tables inside each record.
    pub keep_step_detail: bool,
    /// Accumulate the running mean of the forward weights across all
    /// candidates and steps, in log space.
    pub track_forward_weight_mean: bool,
}

impl TraceOptions {
    /// Keep everything.
    pub fn full() -> Self {
        TraceOptions { keep_step_detail: true, track_forward_weight_mean: false }
    }

    /// Keep only states and step summaries. This is the memory-friendly
    /// choice for long chains with large candidate pools.
    pub fn lean() -> Self {
        TraceOptions { keep_step_detail: false, track_forward_weight_mean: false }
    }
}

/// States and per-step records of one chain run.
#[derive(Clone, Debug)]
pub struct ChainTrace {
    /// Visited states, `steps + 1` entries including the initial state.
    pub states: Vec<StatePoint>,
    pub records: Vec<StepRecord>,
    /// Log of the mean forward weight across every candidate of every step,
    /// present when requested in [`TraceOptions`].
    pub forward_weight_mean: Option<LogMeanAccumulator>,
}

/// Runs a multiple-try chain, keeping full step detail.
pub fn run_chain(
    init: StatePoint,
    cfg: &SamplerConfig,
    target: &dyn Target,
    steps: usize,
    rng: &mut RngStream,
) -> Result<ChainTrace> {
    run_chain_with(init, cfg, target, steps, rng, TraceOptions::full())
}

/// Runs a multiple-try chain with explicit trace options.
pub fn run_chain_with(
    init: StatePoint,
    cfg: &SamplerConfig,
    target: &dyn Target,
    steps: usize,
    rng: &mut RngStream,
    options: TraceOptions,
) -> Result<ChainTrace> {
    assert!(steps >= 1);
    assert!(!cfg.proposals.is_empty(), "need at least one proposal");
    for p in &cfg.proposals {
        assert_eq!(p.dim(), target.dim(), "proposal and target dimensions must agree");
    }
    assert_eq!(init.dim(), target.dim());
    assert!(
        target.log_density(&init) > f64::NEG_INFINITY,
        "initial state must have positive density"
    );
    let noref = matches!(cfg.acceptance, AcceptanceRule::NoReference);
    let mut states = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps);
    let mut accumulator =
        options.track_forward_weight_mean.then(LogMeanAccumulator::new);
    states.push(init);
    for _ in 0..steps {
        let x = states.last().expect("states never empty");
        let mut record = if noref {
            mtm_step_noref(x, cfg, target, rng)?
        } else {
            mtm_step_generalized(x, cfg, target, rng)?
        };
        if let (Some(acc), Some(detail)) = (accumulator.as_mut(), record.detail.as_ref()) {
            for lw in &detail.forward_log_weights {
                acc.push(*lw);
            }
        }
        if !options.keep_step_detail {
            record.detail = None;
        }
        states.push(record.next.clone());
        records.push(record);
    }
    Ok(ChainTrace { states, records, forward_weight_mean: accumulator })
}

/// Runs a single-try Metropolis chain.
pub fn run_mh(
    init: StatePoint,
    target: &dyn Target,
    proposal: &dyn Proposal,
    steps: usize,
    rng: &mut RngStream,
) -> ChainTrace {
    assert!(steps >= 1);
    assert_eq!(proposal.dim(), target.dim());
    assert_eq!(init.dim(), target.dim());
    assert!(
        target.log_density(&init) > f64::NEG_INFINITY,
        "initial state must have positive density"
    );
    let mut states = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps);
    states.push(init);
    for _ in 0..steps {
        let x = states.last().expect("states never empty");
        let mut record = mh_step(x, target, proposal, rng);
        record.detail = None;
        states.push(record.next.clone());
        records.push(record);
    }
    ChainTrace { states, records, forward_weight_mean: None }
}
