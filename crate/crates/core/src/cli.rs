//! Command-line front end. Exit codes: 0 success, 2 validation error, 3 runtime failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::archive::SampleArchive;
use crate::config::ExperimentConfig;
use crate::diagnostics::{efficiency_report, ParameterSelection};
use crate::error::{Error, Result};
use crate::identify::postprocess_archive;
use crate::inference::density::{default_grid, density_from_archive, linspace, posterior_mean_abilities};
use crate::inference::percentiles::percentiles_from_archive;
use crate::inference::waic::waic_from_archive;
use crate::model::ModelKind;
use crate::pipeline::{collect_reports, read_responses, run_pipeline, write_density, write_percentiles};
use crate::priors::{marginal_cluster_moments, simulate_prior_predictive, summarize_predictive, AbilityPriorKind, ConcentrationPrior};
use crate::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization};
use crate::samplers::run_chain;
use crate::sim::{simulate_responses, GroundTruth, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bnpirt", version, about = "Parametric and DP-mixture IRT models fitted by MCMC")]
pub struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML experiment configuration (priors, budget, strategies).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic scenario: writes truth.csv and data.csv.
    Simulate {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long = "n-individuals", short = 'n')]
        n_individuals: usize,
        #[arg(long = "n-items", short = 'i')]
        n_items: usize,
        #[arg(long, value_parser = parse_model, default_value = "2PL")]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one strategy to a response CSV and write the sample archive.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Map an archive to the identified base parameterization.
    Postprocess {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior density of the ability distribution on a grid (CSV).
    Density {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        grid_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        grid_max: Option<f64>,
        #[arg(long, default_value_t = crate::inference::density::DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-individual percentiles within the estimated ability distribution (CSV).
    Percentiles {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value_t = crate::inference::measure::DEFAULT_TRUNCATION)]
        truncation: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// WAIC of a fitted archive on its data (JSON).
    Waic {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Effective sample sizes and efficiency per second for one or more archives.
    Diagnose {
        #[arg(long = "archive", required = true, num_args = 1..)]
        archives: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Selection::Common)]
        selection: Selection,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Prior-predictive summary of success probabilities, or prior cluster-count moments.
    PriorCheck {
        #[arg(long, value_parser = parse_model, default_value = "2PL")]
        model: ModelKind,
        #[arg(long, value_parser = parse_parameterization, default_value = "IRT")]
        parameterization: Parameterization,
        #[arg(long, value_enum, default_value_t = AbilityArg::Normal)]
        ability: AbilityArg,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        /// Report cluster-count moments for this many individuals instead.
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long, requires = "alpha_rate")]
        alpha_shape: Option<f64>,
        #[arg(long, requires = "alpha_shape")]
        alpha_rate: Option<f64>,
    },
    /// Tabulate the strategy reports of an existing bundle.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a full experiment bundle from the configuration file.
    Pipeline {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Selection {
    Common,
    Items,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AbilityArg {
    StandardNormal,
    Normal,
    DirichletProcess,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    #[arg(long, value_parser = parse_parameterization)]
    pub parameterization: Option<Parameterization>,
    #[arg(long, value_parser = parse_constraint)]
    pub constraint: Option<ConstraintMode>,
    #[arg(long, value_parser = parse_algorithm)]
    pub algorithm: Option<Algorithm>,
    #[arg(long, value_parser = parse_ability_model)]
    pub ability_model: Option<AbilityModel>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// 10,000 iterations with 1,000 burn-in instead of 50,000 / 5,000.
    #[arg(long)]
    pub desk_scale: bool,
    #[arg(long)]
    pub max_sampling_seconds: Option<f64>,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_parameterization(s: &str) -> std::result::Result<Parameterization, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_constraint(s: &str) -> std::result::Result<ConstraintMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_ability_model(s: &str) -> std::result::Result<AbilityModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn print_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io("<stdout>", e))?;
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?))
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Simulate {
            scenario,
            n_individuals,
            n_items,
            model,
            out,
        } => {
            let truth = GroundTruth::simulate(*scenario, *model, *n_individuals, *n_items, cfg.seed)?;
            let data = simulate_responses(&truth, *model, cfg.seed)?;
            mkdir(out)?;
            truth.write_csv(create(&out.join(crate::pipeline::TRUTH_FILE))?)?;
            data.write_csv(create(&out.join(crate::pipeline::DATA_FILE))?)?;
        }
        Command::Fit {
            data,
            out,
            strategy,
            budget,
        } => {
            let mut cfg = cfg;
            if let Some(m) = strategy.model {
                cfg.model = m;
            }
            let entry = crate::config::StrategyEntry {
                parameterization: strategy.parameterization.or(cfg.parameterization),
                constraint: strategy.constraint.or(cfg.constraint),
                algorithm: strategy.algorithm.or(cfg.algorithm),
                ability_model: strategy.ability_model.or(cfg.ability_model),
            };
            let st = entry.resolve(cfg.model)?;
            cfg.desk_scale |= budget.desk_scale;
            cfg.iterations = budget.iterations.or(cfg.iterations);
            cfg.burnin = budget.burnin.or(cfg.burnin);
            cfg.thin = budget.thin.unwrap_or(cfg.thin);
            cfg.max_sampling_seconds = budget.max_sampling_seconds.or(cfg.max_sampling_seconds);
            let y = read_responses(data)?;
            let archive = run_chain(&y, &st, &cfg.priors, &cfg.chain_settings())?;
            archive.write_dir(out)?;
        }
        Command::Postprocess { archive, out } => {
            let a = SampleArchive::read_dir(archive)?;
            postprocess_archive(&a)?.write_dir(out)?;
        }
        Command::Density {
            archive,
            grid_min,
            grid_max,
            grid_points,
            out,
        } => {
            let a = SampleArchive::read_dir(archive)?;
            let grid = match (grid_min, grid_max) {
                (Some(lo), Some(hi)) if lo < hi => linspace(*lo, *hi, *grid_points),
                (Some(_), Some(_)) => return Err(Error::InvalidParameter("grid-min must be below grid-max".into())),
                _ => default_grid(&posterior_mean_abilities(&a)?, *grid_points)?,
            };
            let est = density_from_archive(&a, Some(&grid))?;
            match out {
                Some(p) => write_density(p, &est, None)?,
                None => est.write_csv(io::stdout())?,
            }
        }
        Command::Percentiles {
            archive,
            truncation,
            out,
        } => {
            let a = SampleArchive::read_dir(archive)?;
            let rows = percentiles_from_archive(&a, *truncation, cfg.seed)?;
            match out {
                Some(p) => write_percentiles(p, &rows, None)?,
                None => crate::inference::percentiles::write_csv(&rows, io::stdout())?,
            }
        }
        Command::Waic { archive, data } => {
            let a = SampleArchive::read_dir(archive)?;
            let y = read_responses(data)?;
            print_json(&waic_from_archive(&a, &y)?, None)?;
        }
        Command::Diagnose {
            archives,
            selection,
            json,
            csv,
        } => {
            let sel = match selection {
                Selection::Common => ParameterSelection::Common,
                Selection::Items => ParameterSelection::Items,
            };
            let reports = archives
                .iter()
                .map(|p| efficiency_report(&SampleArchive::read_dir(p)?, &sel))
                .collect::<Result<Vec<_>>>()?;
            print_json(&reports, json.as_deref())?;
            if let Some(p) = csv {
                crate::diagnostics::write_csv(&reports, create(p)?)?;
            }
        }
        Command::PriorCheck {
            model,
            parameterization,
            ability,
            draws,
            clusters,
            alpha_shape,
            alpha_rate,
        } => {
            if let Some(n) = clusters {
                let prior = match (alpha_shape, alpha_rate) {
                    (Some(shape), Some(rate)) => ConcentrationPrior::Gamma {
                        shape: *shape,
                        rate: *rate,
                    },
                    _ => cfg.priors.abilities.concentration,
                };
                print_json(&marginal_cluster_moments(&prior, *n, *draws, cfg.seed)?, None)?;
            } else {
                let kind = match ability {
                    AbilityArg::StandardNormal => AbilityPriorKind::StandardNormal,
                    AbilityArg::Normal => AbilityPriorKind::Normal,
                    AbilityArg::DirichletProcess => AbilityPriorKind::DirichletProcess,
                };
                let pi = simulate_prior_predictive(*model, *parameterization, kind, &cfg.priors, *draws, cfg.seed)?;
                print_json(&summarize_predictive(&pi), None)?;
            }
        }
        Command::Report { bundle, csv } => {
            let reports = collect_reports(bundle)?;
            if reports.is_empty() {
                return Err(Error::InvalidParameter(format!("no strategy reports under {}", bundle.display())));
            }
            let mut w = csv::Writer::from_writer(output(csv.as_deref())?);
            w.write_record([
                "strategy",
                "n_individuals",
                "n_items",
                "n_draws",
                "waic",
                "p_waic",
                "mess",
                "mess_per_total_second",
                "difficulty_mae",
                "discrimination_mae",
                "ability_mae",
                "density_modes",
            ])?;
            for r in &reports {
                let mae = |f: fn(&crate::inference::metrics::RecoveryTable) -> f64| {
                    r.recovery.as_ref().map(|t| format!("{}", f(t))).unwrap_or_default()
                };
                w.write_record(&[
                    r.strategy.clone(),
                    r.n_individuals.to_string(),
                    r.n_items.to_string(),
                    r.n_draws.to_string(),
                    format!("{}", r.waic.waic),
                    format!("{}", r.waic.p_waic),
                    format!("{}", r.efficiency.mess),
                    format!("{}", r.efficiency.mess_per_total_second),
                    mae(|t| t.difficulty.mae),
                    mae(|t| t.discrimination.mae),
                    mae(|t| t.ability.mae),
                    r.density_modes.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<report>", e))?;
        }
        Command::Pipeline { out } => {
            if cli.config.is_none() {
                return Err(Error::Config("pipeline needs --config".into()));
            }
            let dir = out
                .clone()
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))?;
            let summary = run_pipeline(&cfg, &dir)?;
            let n: usize = summary.cells.iter().map(|c| c.strategies.len()).sum();
            eprintln!("wrote {} strategy fits to {}", n, dir.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
