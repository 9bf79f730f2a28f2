//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mtm::acceptance::AcceptanceRule;
use mtm::oracle::{
    check_detailed_balance, exact_kernel, random_model, stationarity_gap, OracleAcceptance,
};
use mtm::state::RngStream;
use mtm_harness::config::parse_config;
use mtm_harness::csvout::{build_table, render_csv};
use mtm_harness::dump::write_dump;
use mtm_harness::error::{HarnessError, Result};
use mtm_harness::experiment::{run_experiment, BetaSpec, GammaSpec};
use mtm_harness::tables::{reproduce_table, TABLE_IDS};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "MTM_WORKERS";

/// Tolerance on the exact-kernel reversibility and stationarity checks.
const ORACLE_TOL: f64 = 1e-10;

/// The broken control sampler must violate balance by at least this much.
const CONTROL_FLOOR: f64 = 1e-3;

#[derive(Parser)]
#[command(
    name = "mtm",
    about = "Multiple-try sampling experiments: config runs, preset tables, \
             exact finite-space checks and chain dumps"
)]
struct Cli {
    /// Worker threads for replication runs; falls back to MTM_WORKERS, then
    /// to one thread per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and emit one CSV row.
    Run {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here instead of the config's `out` (or stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's replication count.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Reproduce a built-in table by id and emit its CSV.
    Table {
        /// Table id, one of t2..t10.
        #[arg(long)]
        id: String,
        /// Replications per row.
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// Base seed; replication r uses stream (seed, r).
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check exact finite-space kernels for reversibility and stationarity.
    Oracle {
        /// Number of discrete states per random model (at most 8).
        #[arg(long, default_value_t = 4)]
        states: usize,
        /// Number of proposal tries per model (at most 3).
        #[arg(long, default_value_t = 2)]
        tries: usize,
        /// Which acceptance rules to check.
        #[arg(long, value_enum, default_value_t = OracleVariant::All)]
        variant: OracleVariant,
        /// Number of random models per rule.
        #[arg(long, default_value_t = 50)]
        battery: usize,
        /// Seed for the model generator.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write a raw single-chain trajectory to a file.
    Dump {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
        /// Number of iterations; the dump has steps + 1 lines.
        #[arg(long)]
        steps: usize,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleVariant {
    /// Reference-point acceptance only.
    Generalized,
    /// Reference-free acceptance only.
    Noref,
    /// The composed pointwise/weight rules.
    BetaGamma,
    /// Everything above.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers(cli.workers)
        .and_then(|_| dispatch(cli.command))
        .map_or_else(
            |err| {
                eprintln!("error: {err}");
                err.exit_code()
            },
            |_| ExitCode::SUCCESS,
        )
}

fn configure_workers(flag: Option<usize>) -> Result<()> {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(value) => Some(value.parse().map_err(|_| {
                HarnessError::Config(format!(
                    "{WORKERS_ENV} must be a positive integer, got '{value}'"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(count) = count else { return Ok(()) };
    if count == 0 {
        return Err(HarnessError::config("worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build_global()
        .map_err(|e| HarnessError::Config(format!("cannot configure {count} workers: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, seed, runs } => run_config(&config, out, seed, runs),
        Command::Table { id, runs, seed, out } => run_table(&id, runs, seed, out),
        Command::Oracle { states, tries, variant, battery, seed } => {
            run_oracle(states, tries, variant, battery, seed)
        }
        Command::Dump { config, steps, out } => {
            let spec = load_config(&config)?;
            write_dump(&spec, steps, &out)
        }
    }
}

fn load_config(path: &PathBuf) -> Result<mtm_harness::experiment::ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        HarnessError::Config(format!("cannot read config '{}': {e}", path.display()))
    })?;
    let mut spec = parse_config(&text)?;
    let warnings = spec.validate()?;
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
    Ok(spec)
}

fn run_config(
    path: &PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<()> {
    let mut spec = load_config(path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(runs) = runs {
        if runs == 0 {
            return Err(HarnessError::config("runs must be at least 1"));
        }
        spec.replications = runs;
    }
    let outcome = run_experiment(&spec)?;
    let table = build_table(&spec.stats, spec.target.dim(), outcome.groups, &[outcome.clone()])?;
    let dest = out.or_else(|| spec.out.clone());
    emit(dest.as_deref(), &render_csv(&table))
}

fn run_table(id: &str, runs: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    if runs == 0 {
        return Err(HarnessError::config("runs must be at least 1"));
    }
    if !TABLE_IDS.contains(&id) {
        return Err(HarnessError::Config(format!(
            "unknown table id '{id}'; valid ids: {}",
            TABLE_IDS.join(", ")
        )));
    }
    let table = reproduce_table(id, runs, seed)?;
    emit(out.as_deref(), &render_csv(&table))
}

fn emit(dest: Option<&std::path::Path>, csv: &str) -> Result<()> {
    match dest {
        Some(path) => std::fs::write(path, csv).map_err(HarnessError::from),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn oracle_rules(variant: OracleVariant) -> Vec<(String, AcceptanceRule)> {
    let composed: Vec<(BetaSpec, GammaSpec)> = vec![
        (BetaSpec::Beta1, GammaSpec::Gamma1),
        (BetaSpec::Beta1, GammaSpec::Gamma2),
        (BetaSpec::Beta1, GammaSpec::Gamma3),
        (BetaSpec::Beta2, GammaSpec::Gamma3),
    ];
    let mut rules = Vec::new();
    if matches!(variant, OracleVariant::Generalized | OracleVariant::All) {
        rules.push(("generalized".to_string(), AcceptanceRule::Generalized));
    }
    if matches!(variant, OracleVariant::Noref | OracleVariant::All) {
        rules.push(("noref".to_string(), AcceptanceRule::NoReference));
    }
    if matches!(variant, OracleVariant::BetaGamma | OracleVariant::All) {
        for (beta, gamma) in composed {
            rules.push((
                format!("composed({},{})", beta.id_string(), gamma.id_string()),
                AcceptanceRule::Composed { beta: beta.build(), gamma: gamma.build() },
            ));
        }
    }
    rules
}

fn run_oracle(
    states: usize,
    tries: usize,
    variant: OracleVariant,
    battery: usize,
    seed: u64,
) -> Result<()> {
    if battery == 0 {
        return Err(HarnessError::config("battery must be at least 1"));
    }
    let mut rng = RngStream::new(seed, 0);
    for (name, rule) in oracle_rules(variant) {
        let mut worst_balance = 0.0f64;
        let mut worst_gap = 0.0f64;
        for index in 0..battery {
            let model =
                random_model(states, tries, OracleAcceptance::Rule(rule.clone()), &mut rng);
            let kernel = exact_kernel(&model).map_err(budget_to_config)?;
            let balance = check_detailed_balance(&model, &kernel);
            let gap = stationarity_gap(&model, &kernel);
            worst_balance = worst_balance.max(balance);
            worst_gap = worst_gap.max(gap);
            if balance > ORACLE_TOL || gap > ORACLE_TOL {
                return Err(HarnessError::Oracle(format!(
                    "{name}: model {index} violates balance by {balance:.3e} \
                     (stationarity gap {gap:.3e}, tolerance {ORACLE_TOL:.0e})"
                )));
            }
        }
        println!(
            "oracle {name}: {battery} models, max balance violation {worst_balance:.3e}, \
             max stationarity gap {worst_gap:.3e}"
        );
    }

    // Negative control: accepting every selected candidate on an asymmetric
    // model must break balance, or the checker itself is too lax.
    let control = random_model(states, tries, OracleAcceptance::AlwaysAccept, &mut rng);
    let kernel = exact_kernel(&control).map_err(budget_to_config)?;
    let violation = check_detailed_balance(&control, &kernel);
    if violation <= CONTROL_FLOOR {
        return Err(HarnessError::Oracle(format!(
            "negative control only violates balance by {violation:.3e}; \
             expected more than {CONTROL_FLOOR:.0e}"
        )));
    }
    println!("oracle negative control: violation {violation:.3e} (expected > {CONTROL_FLOOR:.0e})");
    println!("oracle: all checks passed");
    Ok(())
}

fn budget_to_config(err: mtm::Error) -> HarnessError {
    match err {
        mtm::Error::EnumerationBudget { states, tries } => HarnessError::Config(format!(
            "exact enumeration supports at most 8 states and 3 tries, got {states} and {tries}"
        )),
        other => HarnessError::from(other),
    }
}
