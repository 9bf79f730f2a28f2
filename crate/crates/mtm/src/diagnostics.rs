//! Chain statistics: acceptance rate, lag-one autocorrelation, mode jump
//! rate and the normalizing-constant estimator built from candidate weights.

use crate::sampler::{ChainTrace, StepRecord};
use crate::state::StatePoint;

/// Streaming mean of values given in log space.
///
/// Uses a running maximum with rescaling so the mean of values spanning
/// hundreds of orders of magnitude stays exact to double precision. Pushing
/// `-inf` counts the value as zero.
#[derive(Clone, Debug, Default)]
pub struct LogMeanAccumulator {
    max: f64,
    scaled_sum: f64,
    count: usize,
}

impl LogMeanAccumulator {
    pub fn new() -> Self {
        LogMeanAccumulator { max: f64::NEG_INFINITY, scaled_sum: 0.0, count: 0 }
    }

    pub fn push(&mut self, log_value: f64) {
        debug_assert!(!log_value.is_nan());
        self.count += 1;
        if log_value == f64::NEG_INFINITY {
            return;
        }
        if log_value > self.max {
            if self.max > f64::NEG_INFINITY {
                self.scaled_sum *= (self.max - log_value).exp();
            }
            self.max = log_value;
        }
        self.scaled_sum += (log_value - self.max).exp();
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Log of the arithmetic mean of the pushed values.
    pub fn log_mean(&self) -> f64 {
        assert!(self.count > 0, "log_mean of an empty accumulator");
        if self.scaled_sum == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.max + self.scaled_sum.ln() - (self.count as f64).ln()
    }
}

/// Fraction of accepted steps.
pub fn acceptance_rate(trace: &ChainTrace) -> f64 {
    assert!(!trace.records.is_empty());
    let accepted = trace.records.iter().filter(|r| r.accepted).count();
    accepted as f64 / trace.records.len() as f64
}

/// Lag-one Pearson autocorrelation of one coordinate of the visited states.
///
/// Returns `None` when either the leading or the trailing window has zero
/// variance, which happens for a chain that never moved.
pub fn lag1_correlation(trace: &ChainTrace, coord: usize) -> Option<f64> {
    let states = &trace.states;
    assert!(states.len() >= 3, "need at least two transitions");
    let n = states.len() - 1;
    let value = |s: &StatePoint| s[coord];
    let mean_a = states[..n].iter().map(value).sum::<f64>() / n as f64;
    let mean_b = states[1..].iter().map(value).sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for t in 0..n {
        let da = value(&states[t]) - mean_a;
        let db = value(&states[t + 1]) - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

/// Fraction of transitions that changed the dominant mixture component
/// under the supplied component classifier.
pub fn mode_jump_rate(trace: &ChainTrace, mode: impl Fn(&StatePoint) -> usize) -> f64 {
    let states = &trace.states;
    assert!(states.len() >= 2);
    let n = states.len() - 1;
    let mut jumps = 0usize;
    let mut prev = mode(&states[0]);
    for s in &states[1..] {
        let m = mode(s);
        if m != prev {
            jumps += 1;
        }
        prev = m;
    }
    jumps as f64 / n as f64
}

/// Estimate of the target's mass from the candidate-side importance weights
/// of a run, i.e. the mean of `omega` over every candidate of every step.
///
/// Requires step detail to be present. Returns `None` when every weight was
/// zero.
pub fn normconst_estimate(records: &[StepRecord]) -> Option<f64> {
    let mut acc = LogMeanAccumulator::new();
    for r in records {
        let detail = r
            .detail
            .as_ref()
            .expect("normalizing-constant estimate needs step detail");
        for lw in &detail.forward_log_weights {
            acc.push(*lw);
        }
    }
    normconst_from_accumulator(&acc)
}

/// Same estimate from a streaming accumulator filled during the run.
pub fn normconst_from_accumulator(acc: &LogMeanAccumulator) -> Option<f64> {
    let lm = acc.log_mean();
    if lm == f64::NEG_INFINITY {
        return None;
    }
    Some(lm.exp())
}

/// Statistics of a single run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub acceptance_rate: f64,
    /// Lag-one autocorrelation per coordinate, `None` on a frozen chain.
    pub lag1_corr: Vec<Option<f64>>,
    pub mode_jump_rate: Option<f64>,
    /// Reciprocal of the estimated target mass.
    pub normconst_recip: Option<f64>,
    /// Fraction of steps whose selected candidate came from each proposal
    /// group, when groups were requested.
    pub group_selection: Vec<f64>,
}

/// Mean and sample standard deviation over replications.
#[derive(Clone, Debug)]
pub struct AggregateSummary {
    pub runs: usize,
    pub acceptance_rate: (f64, f64),
    pub lag1_corr: Vec<Option<(f64, f64)>>,
    pub mode_jump_rate: Option<(f64, f64)>,
    pub normconst_recip: Option<(f64, f64)>,
    pub group_selection: Vec<(f64, f64)>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0);
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn mean_std_opt(values: Vec<Option<f64>>) -> Option<(f64, f64)> {
    let collected: Option<Vec<f64>> = values.into_iter().collect();
    collected.map(|v| mean_std(&v))
}

/// Aggregates per-run summaries. A statistic missing in any run is reported
/// as missing overall.
pub fn aggregate(runs: &[RunSummary]) -> AggregateSummary {
    assert!(!runs.is_empty());
    let coords = runs[0].lag1_corr.len();
    let groups = runs[0].group_selection.len();
    assert!(runs.iter().all(|r| r.lag1_corr.len() == coords));
    assert!(runs.iter().all(|r| r.group_selection.len() == groups));
    let acceptance =
        mean_std(&runs.iter().map(|r| r.acceptance_rate).collect::<Vec<_>>());
    let lag1_corr = (0..coords)
        .map(|c| mean_std_opt(runs.iter().map(|r| r.lag1_corr[c]).collect()))
        .collect();
    let mode_jump_rate = mean_std_opt(runs.iter().map(|r| r.mode_jump_rate).collect());
    let normconst_recip = mean_std_opt(runs.iter().map(|r| r.normconst_recip).collect());
    let group_selection = (0..groups)
        .map(|g| mean_std(&runs.iter().map(|r| r.group_selection[g]).collect::<Vec<_>>()))
        .collect();
    AggregateSummary {
        runs: runs.len(),
        acceptance_rate: acceptance,
        lag1_corr,
        mode_jump_rate,
        normconst_recip,
        group_selection,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::AcceptanceRule;
    use crate::models::{BimodalQuartic, IndGauss, RwGauss, WeightPreset};
    use crate::sampler::{run_chain, SamplerConfig};
    use crate::state::{Proposal, RngStream, StatePoint, Target};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn trace_from_values(values: &[f64]) -> ChainTrace {
        let states: Vec<StatePoint> = values.iter().map(|v| StatePoint::scalar(*v)).collect();
        let records = states
            .windows(2)
            .map(|w| crate::sampler::StepRecord {
                current: w[0].clone(),
                selected: Some(0),
                w_y: 1.0,
                w_x: 1.0,
                alpha: 1.0,
                accepted: w[0] != w[1],
                next: w[1].clone(),
                detail: None,
            })
            .collect();
        ChainTrace { states, records, forward_weight_mean: None }
    }

    #[test]
    fn log_mean_matches_direct_computation() {
        let values = [0.5f64, 2.0, 8.0, 0.125];
        let mut acc = LogMeanAccumulator::new();
        for v in values {
            acc.push(v.ln());
        }
        let direct = values.iter().sum::<f64>() / values.len() as f64;
        assert_abs_diff_eq!(acc.log_mean().exp(), direct, epsilon = 1e-14);
    }

    #[test]
    fn log_mean_survives_huge_magnitudes() {
        let mut acc = LogMeanAccumulator::new();
        acc.push(-800.0);
        acc.push(-700.0);
        // mean = [exp(-800) + exp(-700)] / 2, which in log space is
        // -700 + ln[(exp(-100) + 1) / 2].
        let want = -700.0 + (((-100.0f64).exp() + 1.0) / 2.0).ln();
        assert_abs_diff_eq!(acc.log_mean(), want, epsilon = 1e-12);
    }

    #[test]
    fn log_mean_counts_zeros() {
        let mut acc = LogMeanAccumulator::new();
        acc.push(f64::NEG_INFINITY);
        acc.push(2.0f64.ln());
        assert_eq!(acc.count(), 2);
        assert_abs_diff_eq!(acc.log_mean().exp(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn log_mean_all_zero_is_neg_infinity() {
        let mut acc = LogMeanAccumulator::new();
        acc.push(f64::NEG_INFINITY);
        assert_eq!(acc.log_mean(), f64::NEG_INFINITY);
    }

    #[test]
    fn acceptance_rate_counts_moves() {
        let trace = trace_from_values(&[0.0, 1.0, 1.0, 2.0, 2.0]);
        assert_eq!(acceptance_rate(&trace), 0.5);
    }

    #[test]
    fn lag1_of_linear_ramp_is_one() {
        let trace = trace_from_values(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_abs_diff_eq!(lag1_correlation(&trace, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lag1_of_frozen_chain_is_missing() {
        let trace = trace_from_values(&[1.5, 1.5, 1.5, 1.5]);
        assert_eq!(lag1_correlation(&trace, 0), None);
    }

    #[test]
    fn lag1_of_alternating_chain_is_negative() {
        let trace = trace_from_values(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        assert_abs_diff_eq!(lag1_correlation(&trace, 0).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn lag1_of_iid_draws_is_near_zero() {
        let mut rng = RngStream::new(61, 0);
        let values: Vec<f64> = (0..20_000).map(|_| rng.standard_normal()).collect();
        let trace = trace_from_values(&values);
        let corr = lag1_correlation(&trace, 0).unwrap();
        // Null standard error is about 1/sqrt(n).
        assert!(corr.abs() < 4.0 / (values.len() as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn mode_jump_counts_classifier_changes() {
        let trace = trace_from_values(&[-2.0, -2.1, 2.0, 2.1, -1.9]);
        let rate = mode_jump_rate(&trace, |s| usize::from(s.as_scalar() > 0.0));
        assert_eq!(rate, 0.5);
    }

    #[test]
    fn normconst_exact_when_weights_are_constant_ratio() {
        // Importance weights of a target equal to twice the proposal density
        // are exactly 2, so the estimate is exact regardless of the chain.
        struct Doubled(IndGauss);
        impl Target for Doubled {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &StatePoint) -> f64 {
                self.0.log_cond_density(x, x) + 2.0f64.ln()
            }
        }
        let proposal = Arc::new(IndGauss::new(StatePoint::scalar(0.0), 1.5));
        let target = Doubled(IndGauss::new(StatePoint::scalar(0.0), 1.5));
        let cfg = SamplerConfig::homogeneous(
            proposal,
            3,
            Arc::new(WeightPreset::Importance),
            AcceptanceRule::Generalized,
        );
        let mut rng = RngStream::new(62, 0);
        let trace = run_chain(StatePoint::scalar(0.0), &cfg, &target, 50, &mut rng).unwrap();
        let mass = normconst_estimate(&trace.records).unwrap();
        assert_abs_diff_eq!(mass, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn normconst_converges_on_gaussian_target() {
        // Unnormalized Gaussian with mass 0.5 estimated through importance
        // weights from a wider independent proposal.
        struct HalfGauss;
        impl Target for HalfGauss {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &StatePoint) -> f64 {
                let q = IndGauss::new(StatePoint::scalar(0.0), 1.0);
                q.log_cond_density(x, x) + 0.5f64.ln()
            }
        }
        let cfg = SamplerConfig::homogeneous(
            Arc::new(IndGauss::new(StatePoint::scalar(0.0), 2.0)),
            10,
            Arc::new(WeightPreset::Importance),
            AcceptanceRule::Generalized,
        );
        let mut rng = RngStream::new(63, 0);
        let trace =
            run_chain(StatePoint::scalar(0.0), &cfg, &HalfGauss, 2000, &mut rng).unwrap();
        let mass = normconst_estimate(&trace.records).unwrap();
        assert_abs_diff_eq!(mass, 0.5, epsilon = 0.01);
    }

    #[test]
    fn aggregate_mean_and_std() {
        let mk = |rate: f64, corr: f64| RunSummary {
            acceptance_rate: rate,
            lag1_corr: vec![Some(corr)],
            mode_jump_rate: None,
            normconst_recip: Some(rate * 2.0),
            group_selection: Vec::new(),
        };
        let agg = aggregate(&[mk(0.2, 0.9), mk(0.4, 0.7)]);
        assert_eq!(agg.runs, 2);
        assert_abs_diff_eq!(agg.acceptance_rate.0, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(agg.acceptance_rate.1, 0.02f64.sqrt(), epsilon = 1e-15);
        let (cm, cs) = agg.lag1_corr[0].unwrap();
        assert_abs_diff_eq!(cm, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(cs, 0.02f64.sqrt(), epsilon = 1e-12);
        assert!(agg.mode_jump_rate.is_none());
        assert_abs_diff_eq!(agg.normconst_recip.unwrap().0, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn aggregate_missing_statistic_poisons_the_column() {
        let mk = |corr: Option<f64>| RunSummary {
            acceptance_rate: 0.5,
            lag1_corr: vec![corr],
            mode_jump_rate: Some(0.1),
            normconst_recip: None,
            group_selection: Vec::new(),
        };
        let agg = aggregate(&[mk(Some(0.5)), mk(None)]);
        assert!(agg.lag1_corr[0].is_none());
        assert!(agg.normconst_recip.is_none());
        assert_eq!(agg.mode_jump_rate.unwrap().0, 0.1);
    }

    #[test]
    fn single_run_aggregate_has_zero_std() {
        let run = RunSummary {
            acceptance_rate: 0.4,
            lag1_corr: vec![Some(0.3)],
            mode_jump_rate: Some(0.2),
            normconst_recip: None,
            group_selection: vec![0.7],
        };
        let agg = aggregate(&[run]);
        assert_eq!(agg.acceptance_rate, (0.4, 0.0));
        assert_eq!(agg.group_selection[0], (0.7, 0.0));
    }

    #[test]
    fn rao_blackwell_rate_matches_mean_alpha() {
        // The empirical acceptance rate concentrates on the mean alpha.
        let target = BimodalQuartic;
        let cfg = SamplerConfig::homogeneous(
            Arc::new(RwGauss::new(2.0, 1)),
            5,
            Arc::new(WeightPreset::Importance),
            AcceptanceRule::Generalized,
        );
        let mut rng = RngStream::new(64, 0);
        let trace =
            run_chain(StatePoint::scalar(0.0), &cfg, &target, 20_000, &mut rng).unwrap();
        let rate = acceptance_rate(&trace);
        let mean_alpha: f64 =
            trace.records.iter().map(|r| r.alpha).sum::<f64>() / trace.records.len() as f64;
        // Bernoulli noise at three standard errors.
        let se = (mean_alpha * (1.0 - mean_alpha) / trace.records.len() as f64).sqrt();
        assert_abs_diff_eq!(rate, mean_alpha, epsilon = 3.0 * se);
    }
}
