//! Built-in experiment tables.
//!
//! Each table id expands to a fixed list of experiment rows whose sampler
//! parameters are pinned by `tables.manifest`, a checked-in canonical
//! serialization. Reproducing a table first re-derives the manifest lines
//! from the presets and fails if they drifted from the checked-in file, so
//! a parameter edit cannot silently change what a table id means.
//!
//! Run geometry (`--runs`, `--seed`) is an invocation choice and is not part
//! of the manifest.

use crate::csvout::{build_table, ResultTable};
use crate::error::{HarnessError, Result};
use crate::experiment::{
    run_experiment, AcceptanceSpec, BetaSpec, ExperimentSpec, GammaSpec, ProposalGroup,
    ProposalSpec, RowOutcome, StatKind, TargetSpec, WeightSpec,
};

/// Table identifiers, in catalogue order.
pub const TABLE_IDS: &[&str] = &["t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9", "t10"];

const MANIFEST: &str = include_str!("tables.manifest");

/// A table preset: the rows to run plus the column layout they share.
#[derive(Clone, Debug)]
pub struct TablePreset {
    pub id: String,
    pub specs: Vec<ExperimentSpec>,
    pub stats: Vec<StatKind>,
    pub dim: usize,
    pub groups: usize,
}

struct RowBuilder {
    target: TargetSpec,
    iterations: usize,
    stats: Vec<StatKind>,
    init: Option<Vec<f64>>,
    runs: usize,
    seed: u64,
}

impl RowBuilder {
    fn row(
        &self,
        label: &str,
        acceptance: AcceptanceSpec,
        proposals: Vec<ProposalGroup>,
        weight: WeightSpec,
    ) -> ExperimentSpec {
        ExperimentSpec {
            label: label.to_string(),
            target: self.target.clone(),
            proposals,
            weight,
            acceptance,
            iterations: self.iterations,
            replications: self.runs,
            seed: self.seed,
            init: self.init.clone(),
            stats: self.stats.clone(),
            out: None,
            expected_tries: None,
        }
    }
}

fn rw(sigma: f64, count: usize) -> Vec<ProposalGroup> {
    vec![ProposalGroup { spec: ProposalSpec::RwGauss { sigma }, count }]
}

fn ind(mean: &[f64], sigma: f64, count: usize) -> ProposalGroup {
    ProposalGroup {
        spec: ProposalSpec::IndGauss { mean: mean.to_vec(), sigma },
        count,
    }
}

/// The random-walk ladder shared by the two acceptance-spread tables: one
/// single-try baseline, then growing pools under the two reference schemes.
fn spread_rows(builder: &RowBuilder, sigma: f64) -> Vec<ExperimentSpec> {
    let mut specs = vec![builder.row(
        "MH N=1",
        AcceptanceSpec::Mh,
        rw(sigma, 1),
        WeightSpec::Importance,
    )];
    for n in [2usize, 5, 100, 1000] {
        specs.push(builder.row(
            &format!("MTM-rw N={n}"),
            AcceptanceSpec::Generalized,
            rw(sigma, n),
            WeightSpec::Importance,
        ));
    }
    for n in [2usize, 5, 100, 1000] {
        specs.push(builder.row(
            &format!("MTM-noref N={n}"),
            AcceptanceSpec::NoReference,
            rw(sigma, n),
            WeightSpec::Importance,
        ));
    }
    specs
}

fn face_rows(builder: &RowBuilder, sigma: f64) -> Vec<ExperimentSpec> {
    let mut specs = vec![builder.row(
        "MH N=1",
        AcceptanceSpec::Mh,
        rw(sigma, 1),
        WeightSpec::Importance,
    )];
    for n in [5usize, 100, 1000] {
        specs.push(builder.row(
            &format!("MTM N={n}"),
            AcceptanceSpec::Generalized,
            rw(sigma, n),
            WeightSpec::Importance,
        ));
    }
    specs
}

/// Builds the preset for a table id without running it.
pub fn table_preset(id: &str, runs: usize, seed: u64) -> Result<TablePreset> {
    let accept_corr = vec![StatKind::AcceptRate, StatKind::Lag1Corr];
    let preset = match id {
        "t2" | "t3" => {
            let sigma = if id == "t2" { 2.0 } else { 10.0 };
            let builder = RowBuilder {
                target: TargetSpec::Bimodal,
                iterations: 5000,
                stats: accept_corr.clone(),
                init: None,
                runs,
                seed,
            };
            TablePreset {
                id: id.to_string(),
                specs: spread_rows(&builder, sigma),
                stats: accept_corr,
                dim: 1,
                groups: 1,
            }
        }
        "t4" => {
            let builder = RowBuilder {
                target: TargetSpec::Bimodal,
                iterations: 5000,
                stats: accept_corr.clone(),
                init: None,
                runs,
                seed,
            };
            let weights = [
                WeightSpec::Importance,
                WeightSpec::TargetOnly,
                WeightSpec::Constant,
                WeightSpec::SqrtTarget,
                WeightSpec::TargetSquared,
                WeightSpec::TargetCubed,
                WeightSpec::ReverseProposal,
                WeightSpec::InverseProposal,
                WeightSpec::TargetTimesReverse,
            ];
            let specs = weights
                .into_iter()
                .map(|w| {
                    builder.row(
                        &w.id_string(),
                        AcceptanceSpec::Generalized,
                        rw(10.0, 100),
                        w,
                    )
                })
                .collect();
            TablePreset { id: id.to_string(), specs, stats: accept_corr, dim: 1, groups: 1 }
        }
        "t5" => {
            let stats = vec![StatKind::AcceptRate, StatKind::Lag1Corr, StatKind::SelRate];
            let builder = RowBuilder {
                target: TargetSpec::Bimodal,
                iterations: 5000,
                stats: stats.clone(),
                init: None,
                runs,
                seed,
            };
            let mut specs = Vec::new();
            for weight in [WeightSpec::Importance, WeightSpec::TargetOnly] {
                specs.push(builder.row(
                    &format!("ind(0) {}", weight.id_string()),
                    AcceptanceSpec::Generalized,
                    vec![ind(&[0.0], 10.0, 100)],
                    weight,
                ));
            }
            for weight in [WeightSpec::Importance, WeightSpec::TargetOnly] {
                specs.push(builder.row(
                    &format!("ind(-10,2) {}", weight.id_string()),
                    AcceptanceSpec::Generalized,
                    vec![ind(&[-10.0], 10.0, 50), ind(&[2.0], 10.0, 50)],
                    weight,
                ));
            }
            TablePreset { id: id.to_string(), specs, stats, dim: 1, groups: 2 }
        }
        "t6" => {
            let stats = vec![StatKind::AcceptRate, StatKind::NormconstRecip];
            let builder = RowBuilder {
                target: TargetSpec::Levy { eta: 0.0, nu: 2.0 },
                iterations: 5000,
                stats: stats.clone(),
                init: None,
                runs,
                seed,
            };
            let specs = vec![
                builder.row(
                    "MTM-ind mu=10",
                    AcceptanceSpec::Generalized,
                    vec![ind(&[10.0], 50.0, 1000)],
                    WeightSpec::Importance,
                ),
                builder.row(
                    "MTM-ind mu=100",
                    AcceptanceSpec::Generalized,
                    vec![ind(&[100.0], 50.0, 1000)],
                    WeightSpec::Importance,
                ),
                builder.row(
                    "MTM-rw",
                    AcceptanceSpec::Generalized,
                    rw(50.0, 1000),
                    WeightSpec::Importance,
                ),
            ];
            TablePreset { id: id.to_string(), specs, stats, dim: 1, groups: 1 }
        }
        "t7" | "t8" => {
            let n = if id == "t7" { 10 } else { 100 };
            let builder = RowBuilder {
                target: TargetSpec::Bimodal,
                iterations: 5000,
                stats: accept_corr.clone(),
                init: None,
                runs,
                seed,
            };
            let compositions = [
                ("alpha_1_1", BetaSpec::Beta1, GammaSpec::Gamma1),
                ("alpha_1_2", BetaSpec::Beta1, GammaSpec::Gamma2),
                ("alpha_1_3", BetaSpec::Beta1, GammaSpec::Gamma3),
                ("alpha_2_3", BetaSpec::Beta2, GammaSpec::Gamma3),
            ];
            let specs = compositions
                .into_iter()
                .map(|(label, beta, gamma)| {
                    builder.row(
                        label,
                        AcceptanceSpec::Composed { beta, gamma },
                        rw(1.0, n),
                        WeightSpec::TargetPower(0.5),
                    )
                })
                .collect();
            TablePreset { id: id.to_string(), specs, stats: accept_corr, dim: 1, groups: 1 }
        }
        "t9" | "t10" => {
            let sigma = if id == "t9" { 5.0 } else { 10.0 };
            let stats = vec![StatKind::AcceptRate, StatKind::ModeJumpRate, StatKind::Lag1Corr];
            let builder = RowBuilder {
                target: TargetSpec::SmilingFace,
                iterations: 500,
                stats: stats.clone(),
                init: Some(vec![0.0, 27.0]),
                runs,
                seed,
            };
            TablePreset {
                id: id.to_string(),
                specs: face_rows(&builder, sigma),
                stats,
                dim: 2,
                groups: 1,
            }
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown table id '{other}'; valid ids: {}",
                TABLE_IDS.join(", ")
            )));
        }
    };
    Ok(preset)
}

fn fmt_point(coords: &[f64]) -> String {
    let parts: Vec<String> = coords.iter().map(|c| crate::experiment::fmt_num(*c)).collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        format!("({})", parts.join(","))
    }
}

/// Canonical manifest line for one row of a table.
pub fn manifest_line(id: &str, spec: &ExperimentSpec) -> String {
    let init = spec.init.clone().unwrap_or_else(|| spec.target.default_init());
    let stats: Vec<&str> = spec.stats.iter().map(|s| s.id_string()).collect();
    format!(
        "{id}|{}|target={}|iterations={}|init={}|stats={}",
        spec.manifest_fragment(),
        spec.target.id_string(),
        spec.iterations,
        fmt_point(&init),
        stats.join(",")
    )
}

fn checked_in_lines(id: &str) -> Vec<&'static str> {
    let prefix = format!("{id}|");
    MANIFEST
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .filter(|line| line.starts_with(&prefix))
        .collect()
}

impl TablePreset {
    /// Compares this preset's parameters against the checked-in manifest.
    pub fn check_manifest(&self) -> Result<()> {
        let expected: Vec<String> =
            self.specs.iter().map(|s| manifest_line(&self.id, s)).collect();
        let recorded = checked_in_lines(&self.id);
        if recorded.len() != expected.len()
            || !recorded.iter().zip(&expected).all(|(r, e)| r == e)
        {
            return Err(HarnessError::Config(format!(
                "table '{}' no longer matches its manifest; preset rows:\n{}\nmanifest rows:\n{}",
                self.id,
                expected.join("\n"),
                recorded.join("\n")
            )));
        }
        Ok(())
    }

    /// Runs every row and assembles the result table.
    pub fn run(&self) -> Result<ResultTable> {
        let mut rows: Vec<RowOutcome> = Vec::with_capacity(self.specs.len());
        for spec in &self.specs {
            let mut spec = spec.clone();
            let warnings = spec.validate()?;
            debug_assert!(warnings.is_empty(), "table presets request only valid stats");
            rows.push(run_experiment(&spec)?);
        }
        build_table(&self.stats, self.dim, self.groups, &rows)
    }
}

/// Reproduces a table id end to end: manifest check, runs, CSV assembly.
pub fn reproduce_table(id: &str, runs: usize, seed: u64) -> Result<ResultTable> {
    let preset = table_preset(id, runs, seed)?;
    preset.check_manifest()?;
    preset.run()
}
