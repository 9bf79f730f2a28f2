//! Acceptance suite: one test per release criterion, each printing a single
//! PASS or FAIL line (run with `--nocapture` to see them). Tolerances are
//! pinned here and nowhere else.

use mtm::acceptance::{alpha_generalized, alpha_noref, AcceptanceRule, BetaRule, CrossSum, GammaRule};
use mtm::models::{BimodalQuartic, IndGauss, RwGauss, WeightPreset};
use mtm::numeric::log_sum_exp;
use mtm::oracle::{check_detailed_balance, exact_kernel, random_model, stationarity_gap, OracleAcceptance};
use mtm::quad::integrate;
use mtm::sampler::{run_chain, run_mh, SamplerConfig};
use mtm::state::{ProposalRef, RngStream, StatePoint, Target};
use mtm_harness::experiment::{run_experiment, RowOutcome};
use mtm_harness::tables::table_preset;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

const RUNS: usize = 200;
const SEED: u64 = 1;

fn report(criterion: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {status} ({detail})");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn preset_rows(id: &str, keep: Option<&[&str]>) -> Vec<RowOutcome> {
    let preset = table_preset(id, RUNS, SEED).unwrap();
    preset
        .specs
        .iter()
        .filter(|s| keep.is_none_or(|labels| labels.contains(&s.label.as_str())))
        .map(|spec| {
            let mut spec = spec.clone();
            spec.validate().unwrap();
            run_experiment(&spec).unwrap()
        })
        .collect()
}

fn row<'a>(rows: &'a [RowOutcome], key: &str) -> &'a RowOutcome {
    rows.iter()
        .find(|r| r.key == key)
        .unwrap_or_else(|| panic!("row '{key}' missing"))
}

fn corr(row: &RowOutcome, coord: usize) -> (f64, f64) {
    row.aggregate.lag1_corr[coord].expect("correlation was requested and the chain moved")
}

fn se(std: f64) -> f64 {
    std / (RUNS as f64).sqrt()
}

#[test]
fn c01_reversibility_battery() {
    let start = Instant::now();
    let variants = vec![
        AcceptanceRule::Generalized,
        AcceptanceRule::NoReference,
        AcceptanceRule::Composed { beta: BetaRule::MinRatio, gamma: GammaRule::ReverseWeight },
        AcceptanceRule::Composed { beta: BetaRule::MinRatio, gamma: GammaRule::BarkerWeights },
        AcceptanceRule::Composed { beta: BetaRule::MinRatio, gamma: GammaRule::MinWeightRatio },
        AcceptanceRule::Composed { beta: BetaRule::Barker, gamma: GammaRule::MinWeightRatio },
    ];
    let mut worst: f64 = 0.0;
    let mut min_control: f64 = f64::INFINITY;
    let mut rng = RngStream::new(2024, 0);
    for _ in 0..50 {
        let base = random_model(4, 2, OracleAcceptance::Rule(AcceptanceRule::Generalized), &mut rng);
        for rule in &variants {
            let model = base.with_acceptance(OracleAcceptance::Rule(rule.clone()));
            let kernel = exact_kernel(&model).unwrap();
            worst = worst
                .max(check_detailed_balance(&model, &kernel))
                .max(stationarity_gap(&model, &kernel));
        }
        let control = base.with_acceptance(OracleAcceptance::AlwaysAccept);
        let kernel = exact_kernel(&control).unwrap();
        min_control = min_control.min(check_detailed_balance(&control, &kernel));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && min_control > 1e-3 && secs < 30.0;
    report(
        "1",
        pass,
        &format!(
            "6 variants x 50 models: worst violation {worst:.2e} (tol 1e-10), \
             weakest control {min_control:.2e} (floor 1e-3), {secs:.1}s (budget 30s)"
        ),
    );
}

#[test]
fn c02_single_try_equals_metropolis() {
    let target = BimodalQuartic;
    let proposal = Arc::new(RwGauss::new(2.0, 1));
    let cfg = SamplerConfig::homogeneous(
        proposal.clone(),
        1,
        Arc::new(WeightPreset::Importance),
        AcceptanceRule::Generalized,
    );
    let steps = 10_000;
    let mut rng_a = RngStream::new(123, 0);
    let mut rng_b = RngStream::new(123, 0);
    let mtm = run_chain(StatePoint::scalar(0.0), &cfg, &target, steps, &mut rng_a).unwrap();
    let mh = run_mh(StatePoint::scalar(0.0), &target, &*proposal, steps, &mut rng_b);
    let discrepancies = (0..steps)
        .filter(|&t| {
            mtm.records[t].alpha != mh.records[t].alpha
                || mtm.records[t].accepted != mh.records[t].accepted
                || mtm.states[t + 1].coords() != mh.states[t + 1].coords()
        })
        .count();
    report(
        "2",
        discrepancies == 0,
        &format!("{discrepancies} discrepancies over {steps} coupled steps"),
    );
}

#[test]
fn c03_full_lambda_weights_collapse_alpha() {
    let target = BimodalQuartic;
    let cfg = SamplerConfig::homogeneous(
        Arc::new(RwGauss::new(2.0, 1)),
        5,
        Arc::new(WeightPreset::LambdaForm(Arc::new(CrossSum))),
        AcceptanceRule::Generalized,
    );
    let steps = 10_000;
    let mut rng = RngStream::new(314, 0);
    let trace = run_chain(StatePoint::scalar(0.0), &cfg, &target, steps, &mut rng).unwrap();
    let mut worst: f64 = 0.0;
    for record in &trace.records {
        let detail = record.detail.as_ref().unwrap();
        let expected = (log_sum_exp(&detail.forward_log_weights)
            - log_sum_exp(&detail.reverse_log_weights))
        .min(0.0);
        worst = worst.max((record.alpha.ln() - expected).abs());
    }
    report(
        "3",
        worst <= 1e-12,
        &format!("worst log-space deviation {worst:.2e} over {steps} steps (tol 1e-12)"),
    );
}

#[test]
fn c04_independent_proposals_collapse_noref() {
    let target = BimodalQuartic;
    let mut proposals: Vec<ProposalRef> = Vec::new();
    for _ in 0..3 {
        proposals.push(Arc::new(IndGauss::new(StatePoint::scalar(-10.0), 10.0)));
    }
    for _ in 0..2 {
        proposals.push(Arc::new(IndGauss::new(StatePoint::scalar(2.0), 10.0)));
    }
    let cfg = SamplerConfig {
        proposals: proposals.clone(),
        weight: Arc::new(WeightPreset::Importance),
        acceptance: AcceptanceRule::NoReference,
    };
    let steps = 10_000;
    let mut rng = RngStream::new(2718, 0);
    let trace = run_chain(StatePoint::scalar(0.0), &cfg, &target, steps, &mut rng).unwrap();
    let mismatches = trace
        .records
        .iter()
        .filter(|record| {
            let k = record.selected.expect("positive target");
            let detail = record.detail.as_ref().unwrap();
            let generalized = alpha_generalized(
                &target,
                &*proposals[k],
                &record.current,
                &detail.candidates[k],
                record.w_x,
                record.w_y,
            );
            let noref = alpha_noref(
                &target,
                &proposals,
                &detail.candidates,
                k,
                &record.current,
                record.w_x,
                record.w_y,
            );
            !(noref == generalized && record.alpha == generalized)
        })
        .count();
    report(
        "4",
        mismatches == 0,
        &format!("{mismatches} acceptance mismatches over {steps} steps (exact equality)"),
    );
}

#[test]
fn c05_bimodal_narrow_proposal_anchors() {
    let rows = preset_rows("t2", Some(&["MH N=1", "MTM-rw N=100", "MTM-noref N=1000"]));
    let mh = row(&rows, "MH N=1").aggregate.acceptance_rate.0;
    let rw = row(&rows, "MTM-rw N=100");
    let (rw_acc, rw_corr) = (rw.aggregate.acceptance_rate.0, corr(rw, 0).0);
    let noref = row(&rows, "MTM-noref N=1000");
    let (no_acc, no_corr) = (noref.aggregate.acceptance_rate.0, corr(noref, 0).0);
    let pass = (mh - 0.30).abs() <= 0.02
        && (rw_acc - 0.86).abs() <= 0.02
        && (rw_corr - 0.19).abs() <= 0.04
        && no_acc <= 0.01
        && no_corr >= 0.99;
    report(
        "5",
        pass,
        &format!(
            "MH acc {mh:.4} (0.30+-0.02); pool-100 acc {rw_acc:.4} (0.86+-0.02), \
             corr {rw_corr:.4} (0.19+-0.04); no-reference pool-1000 acc {no_acc:.4} (<=0.01), \
             corr {no_corr:.4} (>=0.99)"
        ),
    );
}

#[test]
fn c06_wide_proposal_correlation_shape() {
    let rows = preset_rows("t3", None);
    let ladder = ["MH N=1", "MTM-rw N=2", "MTM-rw N=5", "MTM-rw N=100", "MTM-rw N=1000"];
    let rw: Vec<(f64, f64)> = ladder.iter().map(|key| corr(row(&rows, key), 0)).collect();
    let mut decreasing = true;
    let mut weakest_gap = f64::INFINITY;
    for pair in rw.windows(2) {
        let gap = pair[0].0 - pair[1].0;
        let combined = (se(pair[0].1).powi(2) + se(pair[1].1).powi(2)).sqrt();
        weakest_gap = weakest_gap.min(gap / (3.0 * combined));
        if gap <= 3.0 * combined {
            decreasing = false;
        }
    }
    let noref: Vec<f64> = ["MTM-noref N=2", "MTM-noref N=5", "MTM-noref N=100", "MTM-noref N=1000"]
        .iter()
        .map(|key| corr(row(&rows, key), 0).0)
        .collect();
    let min_at = noref
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let nonmonotone = noref.windows(2).any(|p| p[1] < p[0]) && noref.windows(2).any(|p| p[1] > p[0]);
    let pass = decreasing && min_at == 1 && nonmonotone;
    report(
        "6",
        pass,
        &format!(
            "fresh-reference corr {:.3?} strictly decreasing with weakest gap {:.1}x the \
             3-SE bar; no-reference corr {:.3?} non-monotone with minimum at pool 5",
            rw.iter().map(|c| c.0).collect::<Vec<_>>(),
            weakest_gap,
            noref
        ),
    );
}

#[test]
fn c07_weight_choice_ranking() {
    let rows = preset_rows("t4", None);
    // A missing mean correlation means at least one replication froze (the
    // chain never moved, so its per-run correlation is undefined). A preset
    // with frozen replications cannot be the best mixer, so it counts as
    // ranked above every reported value; the winner itself must report one.
    let corrs: Vec<(String, Option<f64>)> = rows
        .iter()
        .map(|r| (r.key.clone(), r.aggregate.lag1_corr[0].map(|(mean, _)| mean)))
        .collect();
    let importance = corrs
        .iter()
        .find(|(k, _)| k == "importance")
        .unwrap()
        .1
        .expect("importance correlation must be reported");
    let lowest = corrs
        .iter()
        .all(|(k, c)| k == "importance" || c.is_none_or(|c| c > importance));
    let unreported: Vec<&str> = corrs
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(k, _)| k.as_str())
        .collect();

    let constant = row(&rows, "constant");
    let mh_rows = preset_rows("t3", Some(&["MH N=1"]));
    let mh = row(&mh_rows, "MH N=1");
    let acc_gap = (constant.aggregate.acceptance_rate.0 - mh.aggregate.acceptance_rate.0).abs();
    let corr_gap = (corr(constant, 0).0 - corr(mh, 0).0).abs();
    let pass = lowest && acc_gap <= 0.02 && corr_gap <= 0.02;
    report(
        "7",
        pass,
        &format!(
            "importance corr {importance:.4} is the lowest of nine: {lowest} \
             (unreported due to frozen replications: {unreported:?}); \
             unit weights vs single-try gaps acc {acc_gap:.4}, corr {corr_gap:.4} (<=0.02)"
        ),
    );
}

#[test]
fn c08_mass_reciprocal_estimates() {
    let rows = preset_rows("t6", None);
    let expected = [("MTM-ind mu=10", 0.6056), ("MTM-ind mu=100", 0.5994), ("MTM-rw", 0.5819)];
    let mut detail = String::new();
    let mut pass = true;
    for (key, want) in expected {
        let got = row(&rows, key).aggregate.normconst_recip.expect("requested").0;
        let ok = (got - want).abs() <= 0.02;
        pass &= ok;
        detail.push_str(&format!("{key}: {got:.4} vs {want} ({}); ", if ok { "ok" } else { "off" }));
    }
    report("8", pass, &format!("{detail}tolerance +-0.02"));
}

#[test]
fn c09_composition_spread() {
    let mut detail = String::new();
    let mut pass = true;
    for (id, a11_expected) in [("t7", 0.1167), ("t8", 0.0173)] {
        let rows = preset_rows(id, None);
        let accs: Vec<(String, f64)> =
            rows.iter().map(|r| (r.key.clone(), r.aggregate.acceptance_rate.0)).collect();
        let corrs: Vec<(String, f64)> = rows.iter().map(|r| (r.key.clone(), corr(r, 0).0)).collect();
        let a13_acc = accs.iter().find(|(k, _)| k == "alpha_1_3").unwrap().1;
        let a13_corr = corrs.iter().find(|(k, _)| k == "alpha_1_3").unwrap().1;
        let highest = accs.iter().all(|(k, a)| k == "alpha_1_3" || *a < a13_acc);
        let lowest = corrs.iter().all(|(k, c)| k == "alpha_1_3" || *c > a13_corr);
        let a11 = accs.iter().find(|(k, _)| k == "alpha_1_1").unwrap().1;
        let anchored = (a11 - a11_expected).abs() <= 0.01;
        pass &= highest && lowest && anchored;
        detail.push_str(&format!(
            "{id}: min-ratio/min-weight acc {a13_acc:.3} highest {highest}, \
             corr {a13_corr:.4} lowest {lowest}, plain-weight acc {a11:.4} vs \
             {a11_expected}+-0.01 {anchored}; "
        ));
    }
    report("9", pass, detail.trim_end_matches("; "));
}

#[test]
fn c10_face_mixing_ladder() {
    let rows = preset_rows("t10", None);
    let ladder = ["MH N=1", "MTM N=5", "MTM N=100", "MTM N=1000"];
    let jumps: Vec<f64> = ladder
        .iter()
        .map(|key| row(&rows, key).aggregate.mode_jump_rate.expect("requested").0)
        .collect();
    let monotone = jumps.windows(2).all(|p| p[1] > p[0]);
    let top = jumps[3];
    let in_band = (top - 0.65).abs() <= 0.05;
    let big = row(&rows, "MTM N=1000");
    let (c1, c2) = (corr(big, 0).0, corr(big, 1).0);
    let decorrelated = c1 < 0.2 && c2 < 0.2;
    let pass = monotone && in_band && decorrelated;
    report(
        "10",
        pass,
        &format!(
            "jump rates {jumps:.4?} monotone {monotone}; top {top:.4} in 0.65+-0.05 {in_band}; \
             pool-1000 correlations ({c1:.4}, {c2:.4}) < 0.2 {decorrelated}"
        ),
    );
}

#[test]
fn c11_single_try_histogram_matches_density() {
    let target = BimodalQuartic;
    let proposal = RwGauss::new(2.0, 1);
    let bins = 50usize;
    let (lo, hi) = (-5.0f64, 5.0f64);
    let width = (hi - lo) / bins as f64;

    let mut counts = vec![0u64; bins + 2];
    let mut total = 0u64;
    for r in 0..RUNS as u64 {
        let mut rng = RngStream::new(11, r);
        let trace = run_mh(StatePoint::scalar(0.0), &target, &proposal, 5000, &mut rng);
        for state in &trace.states[1..] {
            let x = state.as_scalar();
            let bin = if x < lo {
                bins
            } else if x >= hi {
                bins + 1
            } else {
                ((x - lo) / width) as usize
            };
            counts[bin] += 1;
            total += 1;
        }
    }

    let dens = |x: f64| target.log_density(&StatePoint::scalar(x)).exp();
    let mass = integrate(&dens, -8.0, 8.0, 1e-12);
    let mut tv = 0.0;
    for b in 0..bins {
        let a = lo + b as f64 * width;
        let p = integrate(&dens, a, a + width, 1e-12) / mass;
        let hat = counts[b] as f64 / total as f64;
        tv += (hat - p).abs();
    }
    // The density is symmetric and falls off past |x| = 3; both tails carry
    // only the quadrature remainder.
    let tail = (1.0f64 - integrate(&dens, lo, hi, 1e-12) / mass).max(0.0);
    tv += ((counts[bins] + counts[bins + 1]) as f64 / total as f64 - tail).abs();
    tv *= 0.5;
    report(
        "11",
        tv <= 0.05,
        &format!("total variation {tv:.4} over {bins} bins + tails, {total} pooled samples (tol 0.05)"),
    );
}

#[test]
fn c12_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: Option<&str>, env: Option<&str>| -> Vec<u8> {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtm"));
        cmd.args(["table", "--id", "t2", "--runs", "20", "--seed", "7"]);
        cmd.args(["--out", out.to_str().unwrap()]);
        if let Some(w) = workers {
            cmd.args(["--workers", w]);
        }
        if let Some(w) = env {
            cmd.env("MTM_WORKERS", w);
        }
        let status = cmd.status().unwrap();
        assert!(status.success(), "table run failed");
        std::fs::read(out).unwrap()
    };
    let serial = run("serial.csv", Some("1"), None);
    let parallel = run("parallel.csv", Some("4"), None);
    let via_env = run("env.csv", None, Some("3"));
    let repeat = run("repeat.csv", Some("4"), None);
    let pass = serial == parallel && parallel == via_env && via_env == repeat;
    report(
        "12",
        pass,
        &format!(
            "{} bytes; workers 1 == workers 4: {}, == env MTM_WORKERS=3: {}, == rerun: {}",
            serial.len(),
            serial == parallel,
            parallel == via_env,
            via_env == repeat
        ),
    );
}
