//! Acceptance rules.
//!
//! Three families are provided:
//!
//! * [`alpha_generalized`]: the ratio rule
//!   `min{1, [p(y) q_k(x|y) W_x] / [p(x) q_k(y|x) W_y]}`, where `W_y` and
//!   `W_x` are the normalized selection weights of the chosen candidate on
//!   the forward and reverse side;
//! * composed rules `alpha = beta(x, y) * gamma(W_x, W_y)`, where
//!   [`BetaRule`] covers the pointwise factor and [`GammaRule`] the
//!   selection-weight factor, each satisfying its own balance identity;
//! * [`alpha_noref`]: the rule used when reference points are not drawn and
//!   the candidate pool is reused in their place.
//!
//! Throughout, `R(x, y) = [p(y) q(x|y)] / [p(x) q(y|x)]` denotes the usual
//! likelihood ratio for a move from `x` to `y`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::log_sigmoid;
use crate::state::{Proposal, ProposalRef, StatePoint, Target};

/// Symmetric nonnegative scaling function used by the lambda-based rules.
///
/// Implementations must satisfy `lambda(a, b) = lambda(b, a)`; the crate
/// checks the acceptance factors built from a lambda stay inside `[0, 1]` at
/// evaluation time.
pub trait Lambda: Send + Sync {
    fn log_lambda(
        &self,
        target: &dyn Target,
        proposal: &dyn Proposal,
        a: &StatePoint,
        b: &StatePoint,
    ) -> f64;
}

pub type LambdaRef = Arc<dyn Lambda>;

/// Constant lambda.
pub struct ConstLambda(pub f64);

impl Lambda for ConstLambda {
    fn log_lambda(&self, _: &dyn Target, _: &dyn Proposal, _: &StatePoint, _: &StatePoint) -> f64 {
        assert!(self.0 >= 0.0, "lambda must be nonnegative");
        self.0.ln()
    }
}

/// `lambda(a, b) = max{p(a) q(b|a), p(b) q(a|b)}`.
///
/// Admissible for [`BetaRule::ReverseOverLambda`], which it turns into the
/// plain min-ratio rule.
pub struct CrossMax;

/// `lambda(a, b) = p(a) q(b|a) + p(b) q(a|b)`.
///
/// Admissible for [`BetaRule::ReverseOverLambda`], which it turns into the
/// Barker rule.
pub struct CrossSum;

/// `lambda(a, b) = min{p(a) q(b|a), p(b) q(a|b)}`.
///
/// Admissible for [`BetaRule::LambdaOverForward`], which it turns into the
/// min-ratio rule.
pub struct CrossMin;

/// `lambda(a, b) = min{q(b|a)/p(b), q(a|b)/p(a)}`.
///
/// Admissible for [`BetaRule::TargetScaled`], which it turns into the
/// min-ratio rule.
pub struct MinProposalOverTarget;

/// `lambda(a, b) = min{p(a)/q(a|b), p(b)/q(b|a)}`.
///
/// Admissible for [`BetaRule::ProposalScaled`], which it turns into the
/// min-ratio rule.
pub struct MinTargetOverProposal;

fn cross_terms(
    target: &dyn Target,
    proposal: &dyn Proposal,
    a: &StatePoint,
    b: &StatePoint,
) -> (f64, f64, f64, f64) {
    let lp_a = target.log_density(a);
    let lp_b = target.log_density(b);
    let lq_b_a = proposal.log_cond_density(b, a);
    let lq_a_b = proposal.log_cond_density(a, b);
    (lp_a, lp_b, lq_b_a, lq_a_b)
}

impl Lambda for CrossMax {
    fn log_lambda(&self, t: &dyn Target, q: &dyn Proposal, a: &StatePoint, b: &StatePoint) -> f64 {
        let (lp_a, lp_b, lq_b_a, lq_a_b) = cross_terms(t, q, a, b);
        (lp_a + lq_b_a).max(lp_b + lq_a_b)
    }
}

impl Lambda for CrossSum {
    fn log_lambda(&self, t: &dyn Target, q: &dyn Proposal, a: &StatePoint, b: &StatePoint) -> f64 {
        let (lp_a, lp_b, lq_b_a, lq_a_b) = cross_terms(t, q, a, b);
        crate::numeric::log_sum_exp(&[lp_a + lq_b_a, lp_b + lq_a_b])
    }
}

impl Lambda for CrossMin {
    fn log_lambda(&self, t: &dyn Target, q: &dyn Proposal, a: &StatePoint, b: &StatePoint) -> f64 {
        let (lp_a, lp_b, lq_b_a, lq_a_b) = cross_terms(t, q, a, b);
        (lp_a + lq_b_a).min(lp_b + lq_a_b)
    }
}

impl Lambda for MinProposalOverTarget {
    fn log_lambda(&self, t: &dyn Target, q: &dyn Proposal, a: &StatePoint, b: &StatePoint) -> f64 {
        let (lp_a, lp_b, lq_b_a, lq_a_b) = cross_terms(t, q, a, b);
        (lq_b_a - lp_b).min(lq_a_b - lp_a)
    }
}

impl Lambda for MinTargetOverProposal {
    fn log_lambda(&self, t: &dyn Target, q: &dyn Proposal, a: &StatePoint, b: &StatePoint) -> f64 {
        let (lp_a, lp_b, lq_b_a, lq_a_b) = cross_terms(t, q, a, b);
        (lp_a - lq_a_b).min(lp_b - lq_b_a)
    }
}

/// Map from a positive likelihood ratio to an acceptance probability.
///
/// Implementations must map into `[0, 1]` and satisfy the balance identity
/// `F(t) = t * F(1/t)`; the two classical members are [`MinOneBalance`] and
/// [`OddsBalance`].
pub trait BalanceFunction: Send + Sync {
    /// Evaluates `F` at the ratio `exp(log_ratio)`.
    fn eval(&self, log_ratio: f64) -> f64;
}

pub type BalanceFnRef = Arc<dyn BalanceFunction>;

/// `F(t) = min{1, t}`.
pub struct MinOneBalance;

impl BalanceFunction for MinOneBalance {
    fn eval(&self, log_ratio: f64) -> f64 {
        log_ratio.min(0.0).exp()
    }
}

/// `F(t) = t / (1 + t)`.
pub struct OddsBalance;

impl BalanceFunction for OddsBalance {
    fn eval(&self, log_ratio: f64) -> f64 {
        log_sigmoid(log_ratio).exp()
    }
}

/// Log factors of a move from `x` to a candidate `y` under one proposal.
#[derive(Clone, Copy, Debug)]
pub struct MovePair {
    /// log p(x).
    pub log_p_x: f64,
    /// log q(y|x).
    pub log_q_y_x: f64,
    /// log p(y).
    pub log_p_y: f64,
    /// log q(x|y).
    pub log_q_x_y: f64,
}

impl MovePair {
    pub fn from_eval(
        target: &dyn Target,
        proposal: &dyn Proposal,
        x: &StatePoint,
        y: &StatePoint,
    ) -> Self {
        MovePair {
            log_p_x: target.log_density(x),
            log_q_y_x: proposal.log_cond_density(y, x),
            log_p_y: target.log_density(y),
            log_q_x_y: proposal.log_cond_density(x, y),
        }
    }

    /// The same factors viewed from the opposite direction.
    pub fn swapped(&self) -> Self {
        MovePair {
            log_p_x: self.log_p_y,
            log_q_y_x: self.log_q_x_y,
            log_p_y: self.log_p_x,
            log_q_x_y: self.log_q_y_x,
        }
    }

    /// log R = log [p(y) q(x|y)] - log [p(x) q(y|x)].
    pub fn log_ratio(&self) -> f64 {
        (self.log_p_y + self.log_q_x_y) - (self.log_p_x + self.log_q_y_x)
    }
}

/// Pointwise acceptance factor beta(x, y).
///
/// Every rule satisfies `p(x) q(y|x) beta(x, y) = p(y) q(x|y) beta(y, x)`
/// (for the lambda rules, provided the lambda is symmetric).
#[derive(Clone)]
pub enum BetaRule {
    /// `min{1, R}`, the Metropolis choice.
    MinRatio,
    /// `R / (1 + R)`, the Barker choice.
    Barker,
    /// `lambda(x, y) / (1 + 1/R)`; `None` means `lambda = 1`, which recovers
    /// the Barker factor.
    Hastings(Option<LambdaRef>),
    /// `p(y) q(x|y) / lambda(x, y)`.
    ReverseOverLambda(LambdaRef),
    /// `lambda(x, y) / (p(x) q(y|x))`.
    LambdaOverForward(LambdaRef),
    /// `p(y) lambda(x, y) / q(y|x)`.
    TargetScaled(LambdaRef),
    /// `q(x|y) lambda(x, y) / p(x)`.
    ProposalScaled(LambdaRef),
    /// `F(R)` for a symmetric balance function.
    General(BalanceFnRef),
}

impl BetaRule {
    /// Evaluates beta(x, y). Requires `p(x) > 0`.
    pub fn eval(
        &self,
        target: &dyn Target,
        proposal: &dyn Proposal,
        x: &StatePoint,
        y: &StatePoint,
    ) -> Result<f64> {
        let pair = MovePair::from_eval(target, proposal, x, y);
        let log_lambda = match self {
            BetaRule::MinRatio | BetaRule::Barker | BetaRule::General(_) => 0.0,
            BetaRule::Hastings(l) => l
                .as_ref()
                .map_or(0.0, |l| l.log_lambda(target, proposal, x, y)),
            BetaRule::ReverseOverLambda(l)
            | BetaRule::LambdaOverForward(l)
            | BetaRule::TargetScaled(l)
            | BetaRule::ProposalScaled(l) => l.log_lambda(target, proposal, x, y),
        };
        self.eval_from_parts(pair, log_lambda)
    }

    /// Evaluates beta from precomputed log factors and a log-lambda value.
    ///
    /// The rule's own lambda reference is not consulted, which makes this the
    /// entry point for algebraic checks on synthetic inputs. Rules that take
    /// no lambda ignore `log_lambda`.
    pub fn eval_from_parts(&self, pair: MovePair, log_lambda: f64) -> Result<f64> {
        assert!(
            pair.log_p_x > f64::NEG_INFINITY,
            "beta requires a current point with positive density"
        );
        let value = match self {
            BetaRule::MinRatio => MinOneBalance.eval(pair.log_ratio()),
            BetaRule::Barker => OddsBalance.eval(pair.log_ratio()),
            BetaRule::Hastings(_) => (log_lambda + log_sigmoid(pair.log_ratio())).exp(),
            BetaRule::ReverseOverLambda(_) => {
                (pair.log_p_y + pair.log_q_x_y - log_lambda).exp()
            }
            BetaRule::LambdaOverForward(_) => {
                (log_lambda - (pair.log_p_x + pair.log_q_y_x)).exp()
            }
            BetaRule::TargetScaled(_) => (pair.log_p_y + log_lambda - pair.log_q_y_x).exp(),
            BetaRule::ProposalScaled(_) => (pair.log_q_x_y + log_lambda - pair.log_p_x).exp(),
            BetaRule::General(f) => f.eval(pair.log_ratio()),
        };
        validate_unit_interval(value)
    }

    /// Identifier matching the configuration schema.
    pub fn id(&self) -> &'static str {
        match self {
            BetaRule::MinRatio => "beta1",
            BetaRule::Barker => "beta2",
            BetaRule::Hastings(_) => "beta3",
            BetaRule::ReverseOverLambda(_) => "beta4",
            BetaRule::LambdaOverForward(_) => "beta5",
            BetaRule::TargetScaled(_) => "beta6",
            BetaRule::ProposalScaled(_) => "beta7",
            BetaRule::General(_) => "beta_general",
        }
    }
}

fn validate_unit_interval(value: f64) -> Result<f64> {
    if value.is_nan() || value < 0.0 || value > 1.0 + 1e-9 {
        return Err(Error::InvalidBeta { value });
    }
    Ok(value.min(1.0))
}

/// Selection-weight acceptance factor gamma(W_x, W_y).
///
/// Every rule satisfies `W_y gamma(x, y) = W_x gamma(y, x)`, where the swap
/// exchanges the two weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaRule {
    /// `gamma = W_x`.
    ReverseWeight,
    /// `gamma = W_x / (W_x + W_y)`.
    BarkerWeights,
    /// `gamma = min{1, W_x / W_y}`.
    MinWeightRatio,
}

impl GammaRule {
    /// Evaluates gamma. `w_y` must be positive: it is the selection
    /// probability of the candidate that was actually chosen.
    pub fn eval(&self, w_x: f64, w_y: f64) -> f64 {
        assert!(w_y > 0.0, "gamma requires the forward selection weight to be positive");
        debug_assert!((0.0..=1.0).contains(&w_x) && (0.0..=1.0).contains(&w_y));
        match self {
            GammaRule::ReverseWeight => w_x,
            GammaRule::BarkerWeights => w_x / (w_x + w_y),
            GammaRule::MinWeightRatio => (w_x / w_y).min(1.0),
        }
    }

    /// Identifier matching the configuration schema.
    pub fn id(&self) -> &'static str {
        match self {
            GammaRule::ReverseWeight => "gamma1",
            GammaRule::BarkerWeights => "gamma2",
            GammaRule::MinWeightRatio => "gamma3",
        }
    }
}

/// Acceptance rule used by a sampler step.
#[derive(Clone)]
pub enum AcceptanceRule {
    /// Ratio form with reference points.
    Generalized,
    /// `beta * gamma` with reference points.
    Composed { beta: BetaRule, gamma: GammaRule },
    /// Reference points are not drawn; candidates stand in for them.
    NoReference,
}

impl AcceptanceRule {
    pub fn id(&self) -> String {
        match self {
            AcceptanceRule::Generalized => "generalized".into(),
            AcceptanceRule::Composed { beta, gamma } => {
                format!("composed({},{})", beta.id(), gamma.id())
            }
            AcceptanceRule::NoReference => "noref".into(),
        }
    }
}

/// Acceptance probability of the generalized ratio rule,
/// `min{1, R(x, y) * W_x / W_y}`.
///
/// `proposal_k` is the proposal that produced the selected candidate, `w_y`
/// its forward selection weight (must be positive) and `w_x` its reverse
/// selection weight. Requires `p(x) > 0`; returns 0 when `p(y) = 0`.
pub fn alpha_generalized(
    target: &dyn Target,
    proposal_k: &dyn Proposal,
    x: &StatePoint,
    y: &StatePoint,
    w_x: f64,
    w_y: f64,
) -> f64 {
    let lp_x = target.log_density(x);
    assert!(lp_x > f64::NEG_INFINITY, "current state must have positive density");
    assert!(w_y > 0.0, "selected candidate must carry positive weight");
    let lp_y = target.log_density(y);
    if lp_y == f64::NEG_INFINITY {
        return 0.0;
    }
    let lq_y_x = proposal_k.log_cond_density(y, x);
    let lq_x_y = proposal_k.log_cond_density(x, y);
    let log_ratio = (lp_y + lq_x_y) - (lp_x + lq_y_x) + (w_x.ln() - w_y.ln());
    log_ratio.min(0.0).exp()
}

/// Acceptance probability `beta(x, y) * gamma(W_x, W_y)` of a composed rule.
///
/// Same conventions as [`alpha_generalized`].
pub fn alpha_composed(
    beta: &BetaRule,
    gamma: &GammaRule,
    target: &dyn Target,
    proposal_k: &dyn Proposal,
    x: &StatePoint,
    y: &StatePoint,
    w_x: f64,
    w_y: f64,
) -> Result<f64> {
    assert!(w_y > 0.0, "selected candidate must carry positive weight");
    if target.log_density(y) == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let b = beta.eval(target, proposal_k, x, y)?;
    Ok(b * gamma.eval(w_x, w_y))
}

/// Acceptance probability when reference points are not drawn:
/// `min{1, R(x, y) * prod_{i != k} [q_i(y_i|y) / q_i(y_i|x)] * W_x / W_y}`.
///
/// `candidates[k]` must be the selected candidate `y`. For independent
/// proposals the product collapses to one and the value coincides exactly
/// with [`alpha_generalized`] at the same weights.
pub fn alpha_noref(
    target: &dyn Target,
    proposals: &[ProposalRef],
    candidates: &[StatePoint],
    k: usize,
    x: &StatePoint,
    w_x: f64,
    w_y: f64,
) -> f64 {
    assert_eq!(proposals.len(), candidates.len());
    assert!(k < candidates.len());
    let lp_x = target.log_density(x);
    assert!(lp_x > f64::NEG_INFINITY, "current state must have positive density");
    assert!(w_y > 0.0, "selected candidate must carry positive weight");
    let y = &candidates[k];
    let lp_y = target.log_density(y);
    if lp_y == f64::NEG_INFINITY {
        return 0.0;
    }
    let lq_y_x = proposals[k].log_cond_density(y, x);
    let lq_x_y = proposals[k].log_cond_density(x, y);
    let mut log_ratio = (lp_y + lq_x_y) - (lp_x + lq_y_x);
    for (i, (prop, cand)) in proposals.iter().zip(candidates).enumerate() {
        if i == k {
            continue;
        }
        log_ratio += prop.log_cond_density(cand, y) - prop.log_cond_density(cand, x);
    }
    log_ratio += w_x.ln() - w_y.ln();
    log_ratio.min(0.0).exp()
}
