//! The `advrisk` command-line tool.
//!
//! Every subcommand prints a JSON report (or CSV where offered) on stdout.
//! Exit status is 0 on success, 2 for invalid input and 3 when an
//! enumeration would exceed its budget.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use advrisk::instance::Budgets;
use advrisk::{Error, Instance, LossFunction, TransportInstance};

mod commands;

/// Environment variable holding the default enumeration budget.
pub const BUDGET_ENV: &str = "ADVRISK_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "advrisk", version, about = "Adversarial consistency of surrogate losses on discrete distributions")]
pub struct Cli {
    /// Override the instance radius.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Cap on classifiers (primal) and assignments (dual) enumerated.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Seed of the random-classifier generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    ZeroOne,
    Surrogate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Consistency certificate and margin constants of a loss.
    CheckLoss {
        /// `hinge`, `rho_margin:1`, `shifted_sigmoid:1`, ... or a JSON spec.
        loss: String,
    },
    /// Standard and adversarial risks of the instance classifiers.
    Risks { instance: PathBuf },
    /// ∞-Wasserstein distance between the two measures of a transport instance.
    Winf {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Best dual pair supported on the scene.
    Dual { instance: PathBuf },
    /// Brute-force primal minimum against the dual search.
    Gap {
        instance: PathBuf,
        /// Defaults to `surrogate` when the instance has a loss.
        #[arg(long, value_enum)]
        objective: Option<Objective>,
    },
    /// Risks of `f_n = ±1/n` on the two-class uniform segment with `eps = 2R`.
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        n_list: Vec<u32>,
        #[arg(long, default_value = "hinge")]
        loss: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// `R^ε(f) ≤ R_ρ^ε(f)` on random classifiers, after certifying `inf R^ε = inf R_ρ^ε`.
    MarginBound {
        instance: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Defaults to the instance loss if it is a ρ-margin loss, else `rho_margin:1`.
        #[arg(long)]
        loss: Option<String>,
    },
    /// Complementary slackness residuals of a classifier sequence against a dual pair.
    Slackness {
        instance: PathBuf,
        /// Use the sequence `f_n = ±1/n` for these `n` instead of the instance classifiers.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
        /// Overrides the instance loss.
        #[arg(long)]
        loss: Option<String>,
    },
}

/// Enumeration budgets after applying `--budget`, the instance, the
/// environment and the library defaults, in that order of precedence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolvedBudgets {
    pub primal: u64,
    pub dual: u64,
}

pub fn resolve_budgets(flag: Option<u64>, instance: Option<Budgets>, env: Option<&str>) -> Result<ResolvedBudgets, CliError> {
    let env = match env {
        Some(v) => Some(v.trim().parse::<u64>().map_err(|_| CliError::Input(format!("{BUDGET_ENV} must be an integer, got {v:?}")))?),
        None => None,
    };
    let instance = instance.unwrap_or_default();
    let pick = |from_instance: Option<u64>, default: u64| flag.or(from_instance).or(env).unwrap_or(default);
    Ok(ResolvedBudgets {
        primal: pick(instance.primal, advrisk::risks::DEFAULT_PRIMAL_BUDGET),
        dual: pick(instance.dual, advrisk::duality::DEFAULT_DUAL_BUDGET),
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    Ok(Instance::from_json(&read(path)?)?)
}

fn parse_loss(spec: &str) -> Result<LossFunction, CliError> {
    Ok(spec.parse::<LossFunction>()?)
}

fn check_eps(eps: Option<f64>) -> Result<(), CliError> {
    match eps {
        Some(e) if !(e >= 0.0 && e.is_finite()) => Err(CliError::Input(format!("--eps must be a non-negative number, got {e}"))),
        _ => Ok(()),
    }
}

/// Parses `args` (including the program name) and returns the report text.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => return Ok(e.to_string()),
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let env = std::env::var(BUDGET_ENV).ok();
    execute(&cli, env.as_deref())
}

pub fn execute(cli: &Cli, budget_env: Option<&str>) -> Result<String, CliError> {
    check_eps(cli.eps)?;
    let budgets = |inst: &Instance| resolve_budgets(cli.budget, inst.budgets, budget_env);
    match &cli.command {
        Command::CheckLoss { loss } => commands::check_loss(&parse_loss(loss)?),
        Command::Risks { instance } => commands::risks(&load_instance(instance)?, cli.eps),
        Command::Winf { instance, format } => {
            let inst = TransportInstance::from_json(&read(instance)?)?;
            commands::winf(&inst, cli.eps, *format)
        }
        Command::Dual { instance } => {
            let inst = load_instance(instance)?;
            commands::dual(&inst, cli.eps, budgets(&inst)?)
        }
        Command::Gap { instance, objective } => {
            let inst = load_instance(instance)?;
            commands::gap(&inst, cli.eps, budgets(&inst)?, *objective)
        }
        Command::Counterexample { radius, points, n_list, loss, format } => {
            let budgets = resolve_budgets(cli.budget, None, budget_env)?;
            commands::counterexample(*radius, *points, n_list, &parse_loss(loss)?, budgets, *format)
        }
        Command::MarginBound { instance, trials, loss } => {
            let inst = load_instance(instance)?;
            let loss = loss.as_deref().map(parse_loss).transpose()?;
            commands::margin_bound(&inst, cli.eps, budgets(&inst)?, *trials, cli.seed, loss)
        }
        Command::Slackness { instance, n_list, loss } => {
            let inst = load_instance(instance)?;
            let loss = loss.as_deref().map(parse_loss).transpose()?;
            commands::slackness(&inst, cli.eps, budgets(&inst)?, n_list.as_deref(), loss)
        }
    }
}
