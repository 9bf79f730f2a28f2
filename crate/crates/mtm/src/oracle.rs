//! Exact transition kernels on finite state spaces.
//!
//! A [`FiniteModel`] holds a small discrete target, one conditional proposal
//! table per try and a positive weight table. [`exact_kernel`] enumerates
//! every candidate tuple and every reference tuple to integrate the
//! multiple-try transition kernel without sampling, reusing the crate's
//! acceptance evaluators verbatim. [`check_detailed_balance`] and
//! [`stationarity_gap`] then measure how far the kernel is from reversible
//! and from leaving the target invariant.
//!
//! Enumeration cost grows like `M^(2N - 1)` for `M` states and `N` tries, so
//! the kernel builder enforces a small budget.

use crate::acceptance::{alpha_composed, alpha_generalized, alpha_noref, AcceptanceRule};
use crate::error::{Error, Result};
use crate::numeric::normalized_component;
use crate::state::{Proposal, ProposalRef, RngStream, StatePoint, Target};
use std::sync::Arc;

const MAX_STATES: usize = 8;
const MAX_TRIES: usize = 3;

/// Weight tables of a finite model, indexed `[candidate][conditioning]`.
#[derive(Clone, Debug)]
pub enum FiniteWeights {
    /// One table shared by every try.
    Shared(Vec<Vec<f64>>),
    /// One table per try.
    PerProposal(Vec<Vec<Vec<f64>>>),
}

impl FiniteWeights {
    fn log_weight(&self, try_index: usize, candidate: usize, cond: usize) -> f64 {
        let table = match self {
            FiniteWeights::Shared(t) => t,
            FiniteWeights::PerProposal(ts) => &ts[try_index],
        };
        table[candidate][cond].ln()
    }
}

/// Acceptance rule of a finite model.
#[derive(Clone)]
pub enum OracleAcceptance {
    Rule(AcceptanceRule),
    /// Accept every selected candidate. Breaks reversibility whenever the
    /// model is not symmetric, which makes it the negative control for the
    /// balance checks.
    AlwaysAccept,
}

/// Discrete target, per-try conditional proposal tables and weight tables.
///
/// States are the integers `0..M` embedded as one-dimensional points.
/// `proposals[j][from][to]` is the probability that try `j` proposes `to`
/// when conditioned on `from`; every row must sum to one and every entry of
/// the target and weight tables must be positive so no weight degenerates.
#[derive(Clone)]
pub struct FiniteModel {
    target_mass: Vec<f64>,
    proposals: Vec<Vec<Vec<f64>>>,
    weights: FiniteWeights,
    acceptance: OracleAcceptance,
}

impl FiniteModel {
    pub fn new(
        target_mass: Vec<f64>,
        proposals: Vec<Vec<Vec<f64>>>,
        weights: FiniteWeights,
        acceptance: OracleAcceptance,
    ) -> Self {
        let m = target_mass.len();
        assert!(m >= 2, "need at least two states");
        assert!(target_mass.iter().all(|p| *p > 0.0), "target masses must be positive");
        assert!(!proposals.is_empty(), "need at least one try");
        for table in &proposals {
            assert_eq!(table.len(), m);
            for row in table {
                assert_eq!(row.len(), m);
                assert!(row.iter().all(|p| *p >= 0.0));
                let sum: f64 = row.iter().sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-12,
                    "proposal rows must sum to one, got {sum}"
                );
            }
        }
        let check_table = |t: &Vec<Vec<f64>>| {
            assert_eq!(t.len(), m);
            for row in t {
                assert_eq!(row.len(), m);
                assert!(row.iter().all(|w| *w > 0.0), "weights must be positive");
            }
        };
        match &weights {
            FiniteWeights::Shared(t) => check_table(t),
            FiniteWeights::PerProposal(ts) => {
                assert_eq!(ts.len(), proposals.len());
                ts.iter().for_each(check_table);
            }
        }
        FiniteModel { target_mass, proposals, weights, acceptance }
    }

    pub fn num_states(&self) -> usize {
        self.target_mass.len()
    }

    pub fn num_tries(&self) -> usize {
        self.proposals.len()
    }

    pub fn target_mass(&self) -> &[f64] {
        &self.target_mass
    }

    pub fn acceptance(&self) -> &OracleAcceptance {
        &self.acceptance
    }

    pub fn with_acceptance(&self, acceptance: OracleAcceptance) -> Self {
        FiniteModel { acceptance, ..self.clone() }
    }
}

/// Target view exposing states as the points `0.0, 1.0, ...`.
struct FiniteTargetView {
    log_mass: Vec<f64>,
}

impl Target for FiniteTargetView {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &StatePoint) -> f64 {
        self.log_mass[state_index(x)]
    }
}

/// Proposal view over one conditional table.
struct FiniteProposalView {
    log_rows: Vec<Vec<f64>>,
    independent: bool,
}

impl FiniteProposalView {
    fn new(table: &[Vec<f64>]) -> Self {
        let independent = table.windows(2).all(|w| w[0] == w[1]);
        FiniteProposalView {
            log_rows: table
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect(),
            independent,
        }
    }
}

impl Proposal for FiniteProposalView {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, cond: &StatePoint, rng: &mut RngStream) -> StatePoint {
        let row = &self.log_rows[state_index(cond)];
        let u = rng.uniform();
        let mut cum = 0.0;
        for (to, lp) in row.iter().enumerate() {
            cum += lp.exp();
            if u < cum {
                return StatePoint::scalar(to as f64);
            }
        }
        StatePoint::scalar((row.len() - 1) as f64)
    }

    fn log_cond_density(&self, point: &StatePoint, cond: &StatePoint) -> f64 {
        self.log_rows[state_index(cond)][state_index(point)]
    }

    fn is_independent(&self) -> bool {
        self.independent
    }
}

fn state_index(point: &StatePoint) -> usize {
    let v = point.as_scalar();
    let i = v.round();
    assert!((v - i).abs() < 1e-9, "finite-model states are integer points");
    i as usize
}

/// Dense transition matrix with rows summing to one.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    entries: Vec<Vec<f64>>,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.entries[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Odometer over tuples in `{0..base}^len`, visiting all `base^len` of them.
fn for_each_tuple(base: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; len];
    loop {
        visit(&tuple);
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            tuple[pos] += 1;
            if tuple[pos] < base {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Integrates the multiple-try kernel of a finite model exactly.
///
/// For every current state the builder enumerates candidate tuples, the
/// selection step and (for rules with reference points) reference tuples,
/// weighting each path by its probability and the acceptance value computed
/// by the same functions the samplers call.
pub fn exact_kernel(model: &FiniteModel) -> Result<KernelMatrix> {
    let m = model.num_states();
    let n = model.num_tries();
    if m > MAX_STATES || n > MAX_TRIES {
        return Err(Error::EnumerationBudget { states: m, tries: n });
    }
    let target = FiniteTargetView {
        log_mass: model.target_mass.iter().map(|p| p.ln()).collect(),
    };
    let views: Vec<ProposalRef> = model
        .proposals
        .iter()
        .map(|t| Arc::new(FiniteProposalView::new(t)) as ProposalRef)
        .collect();
    let points: Vec<StatePoint> = (0..m).map(|s| StatePoint::scalar(s as f64)).collect();

    let noref = matches!(
        model.acceptance,
        OracleAcceptance::Rule(AcceptanceRule::NoReference)
    );

    let mut entries = vec![vec![0.0; m]; m];
    for x in 0..m {
        let row = &mut entries[x];
        for_each_tuple(m, n, |candidates| {
            // Probability of drawing this candidate tuple from x.
            let mut tuple_prob = 1.0;
            for (j, y_j) in candidates.iter().enumerate() {
                tuple_prob *= model.proposals[j][x][*y_j];
            }
            if tuple_prob == 0.0 {
                return;
            }
            let fwd: Vec<f64> = candidates
                .iter()
                .enumerate()
                .map(|(j, y_j)| model.weights.log_weight(j, *y_j, x))
                .collect();
            let fwd_lin: Vec<f64> = fwd.iter().map(|lw| lw.exp()).collect();
            let fwd_total: f64 = fwd_lin.iter().sum();
            for (k, y) in candidates.iter().enumerate() {
                let w_y = fwd_lin[k] / fwd_total;
                let select_prob = w_y;
                let path_prob = tuple_prob * select_prob;
                if path_prob == 0.0 {
                    continue;
                }
                let mut accumulate = |alpha: f64, weight: f64| {
                    row[*y] += path_prob * weight * alpha;
                };
                if noref {
                    let rev: Vec<f64> = candidates
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let point = if i == k { x } else { *c };
                            model.weights.log_weight(i, point, *y)
                        })
                        .collect();
                    let w_x = normalized_component(&rev, k);
                    let cand_points: Vec<StatePoint> =
                        candidates.iter().map(|c| points[*c].clone()).collect();
                    let alpha = alpha_noref(
                        &target,
                        &views,
                        &cand_points,
                        k,
                        &points[x],
                        w_x,
                        w_y,
                    );
                    accumulate(alpha, 1.0);
                } else {
                    // Enumerate reference tuples for the slots other than k.
                    for_each_tuple(m, n - 1, |partial| {
                        let mut refs = Vec::with_capacity(n);
                        let mut ref_prob = 1.0;
                        let mut pos = 0;
                        for i in 0..n {
                            if i == k {
                                refs.push(x);
                            } else {
                                let r = partial[pos];
                                pos += 1;
                                ref_prob *= model.proposals[i][*y][r];
                                refs.push(r);
                            }
                        }
                        if ref_prob == 0.0 {
                            return;
                        }
                        let rev: Vec<f64> = refs
                            .iter()
                            .enumerate()
                            .map(|(i, r)| model.weights.log_weight(i, *r, *y))
                            .collect();
                        let w_x = normalized_component(&rev, k);
                        let alpha = match &model.acceptance {
                            OracleAcceptance::AlwaysAccept => 1.0,
                            OracleAcceptance::Rule(AcceptanceRule::Generalized) => {
                                alpha_generalized(
                                    &target,
                                    &*views[k],
                                    &points[x],
                                    &points[*y],
                                    w_x,
                                    w_y,
                                )
                            }
                            OracleAcceptance::Rule(AcceptanceRule::Composed {
                                beta,
                                gamma,
                            }) => alpha_composed(
                                beta,
                                gamma,
                                &target,
                                &*views[k],
                                &points[x],
                                &points[*y],
                                w_x,
                                w_y,
                            )
                            .expect("finite models keep beta inside [0, 1]"),
                            OracleAcceptance::Rule(AcceptanceRule::NoReference) => {
                                unreachable!()
                            }
                        };
                        accumulate(alpha, ref_prob);
                    });
                }
            }
        });
    }

    // Rejected probability stays on the diagonal.
    for (x, row) in entries.iter_mut().enumerate() {
        let moved: f64 = row
            .iter()
            .enumerate()
            .filter(|(y, _)| *y != x)
            .map(|(_, p)| *p)
            .sum();
        let self_mass = row[x];
        row[x] = self_mass + (1.0 - moved - self_mass).max(0.0);
        // Acceptance of a self-move and rejection both keep the state, so
        // fold them together; numerical slack cannot push the row negative.
        let total: f64 = row.iter().sum();
        debug_assert!((total - 1.0).abs() < 1e-9, "kernel row sums to {total}");
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    Ok(KernelMatrix { entries })
}

/// Largest relative detailed-balance violation
/// `|p(x) K(x, y) - p(y) K(y, x)|` over off-diagonal pairs, scaled by the
/// larger flow.
pub fn check_detailed_balance(model: &FiniteModel, kernel: &KernelMatrix) -> f64 {
    let m = model.num_states();
    let total: f64 = model.target_mass.iter().sum();
    let pi: Vec<f64> = model.target_mass.iter().map(|p| p / total).collect();
    let mut worst: f64 = 0.0;
    for x in 0..m {
        for y in (x + 1)..m {
            let flow_xy = pi[x] * kernel.entry(x, y);
            let flow_yx = pi[y] * kernel.entry(y, x);
            let scale = flow_xy.max(flow_yx).max(1e-15);
            worst = worst.max((flow_xy - flow_yx).abs() / scale);
        }
    }
    worst
}

/// Largest component of `|pi K - pi|`, the stationarity defect of the
/// normalized target under the kernel.
pub fn stationarity_gap(model: &FiniteModel, kernel: &KernelMatrix) -> f64 {
    let m = model.num_states();
    let total: f64 = model.target_mass.iter().sum();
    let pi: Vec<f64> = model.target_mass.iter().map(|p| p / total).collect();
    let mut worst: f64 = 0.0;
    for y in 0..m {
        let flowed: f64 = (0..m).map(|x| pi[x] * kernel.entry(x, y)).sum();
        worst = worst.max((flowed - pi[y]).abs());
    }
    worst
}

/// Random finite model with heterogeneous proposals and per-try weight
/// tables, masses and weights bounded away from zero.
pub fn random_model(
    states: usize,
    tries: usize,
    acceptance: OracleAcceptance,
    rng: &mut RngStream,
) -> FiniteModel {
    let mut positive = |lo: f64, hi: f64| lo + (hi - lo) * rng.uniform();
    let target_mass: Vec<f64> = (0..states).map(|_| positive(0.2, 1.2)).collect();
    let mut proposals = Vec::with_capacity(tries);
    for _ in 0..tries {
        let mut table = Vec::with_capacity(states);
        for _ in 0..states {
            let raw: Vec<f64> = (0..states).map(|_| positive(0.05, 1.0)).collect();
            let sum: f64 = raw.iter().sum();
            table.push(raw.into_iter().map(|p| p / sum).collect());
        }
        proposals.push(table);
    }
    let mut weight_table = || -> Vec<Vec<f64>> {
        (0..states)
            .map(|_| (0..states).map(|_| positive(0.2, 1.2)).collect())
            .collect()
    };
    let weights = FiniteWeights::PerProposal((0..tries).map(|_| weight_table()).collect());
    FiniteModel::new(target_mass, proposals, weights, acceptance)
}
