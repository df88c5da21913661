//! Experiment configuration read from TOML.
//!
//! ```toml
//! seed = 7
//! model = "2PL"
//! desk_scale = true
//!
//! [data]
//! scenario = "bimodal"
//! n_individuals = 500
//! n_items = 10
//!
//! [[strategy]]
//! parameterization = "IRT"
//! constraint = "unconstrained"
//! algorithm = "mh-conjugate"
//! ability_model = "semiparametric"
//! ```
//!
//! A single strategy may also be given with the same keys at the top level.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::measure::DEFAULT_TRUNCATION;
use crate::model::ModelKind;
use crate::priors::Priors;
use crate::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization, StrategyConfig};
use crate::samplers::ChainSettings;
use crate::sim::Scenario;

pub const FULL_BUDGET: (usize, usize) = (50_000, 5_000);
pub const DESK_BUDGET: (usize, usize) = (10_000, 1_000);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub parameterization: Option<Parameterization>,
    pub constraint: Option<ConstraintMode>,
    pub algorithm: Option<Algorithm>,
    pub ability_model: Option<AbilityModel>,
}

impl StrategyEntry {
    fn is_empty(&self) -> bool {
        self.parameterization.is_none()
            && self.constraint.is_none()
            && self.algorithm.is_none()
            && self.ability_model.is_none()
    }

    pub fn resolve(&self, kind: ModelKind) -> Result<StrategyConfig> {
        StrategyConfig::new(
            kind,
            self.parameterization.unwrap_or(Parameterization::Irt),
            self.constraint.unwrap_or(ConstraintMode::Unconstrained),
            self.algorithm.unwrap_or(Algorithm::MhConjugate),
            self.ability_model.unwrap_or(AbilityModel::Parametric),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Response CSV (header of item names, 0/1/NA cells).
    pub path: Option<PathBuf>,
    pub scenario: Option<Scenario>,
    pub n_individuals: Option<usize>,
    pub n_items: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factorial {
    pub n_individuals: Vec<usize>,
    pub n_items: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub grid_points: usize,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub truncation: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid_points: crate::inference::density::DEFAULT_GRID_POINTS,
            grid_min: None,
            grid_max: None,
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default)]
    pub desk_scale: bool,
    pub max_sampling_seconds: Option<f64>,
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default)]
    pub data: DataConfig,
    pub factorial: Option<Factorial>,
    #[serde(default)]
    pub strategy: Vec<StrategyEntry>,
    pub parameterization: Option<Parameterization>,
    pub constraint: Option<ConstraintMode>,
    pub algorithm: Option<Algorithm>,
    pub ability_model: Option<AbilityModel>,
    #[serde(default)]
    pub priors: Priors,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_model() -> ModelKind {
    ModelKind::TwoPL
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: default_model(),
            iterations: None,
            burnin: None,
            thin: 1,
            desk_scale: false,
            max_sampling_seconds: None,
            output: None,
            parallel: true,
            data: DataConfig::default(),
            factorial: None,
            strategy: Vec::new(),
            parameterization: None,
            constraint: None,
            algorithm: None,
            ability_model: None,
            priors: Priors::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

/// Where the responses come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic {
        scenario: Scenario,
        n_individuals: usize,
        n_items: usize,
    },
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(p) = cfg.data.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Strategies in the order given; flat keys count as one more strategy.
    pub fn strategies(&self) -> Result<Vec<StrategyConfig>> {
        let mut entries = self.strategy.clone();
        let flat = StrategyEntry {
            parameterization: self.parameterization,
            constraint: self.constraint,
            algorithm: self.algorithm,
            ability_model: self.ability_model,
        };
        if !flat.is_empty() {
            entries.insert(0, flat);
        }
        let out = entries
            .iter()
            .map(|e| e.resolve(self.model))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::new();
        for s in &out {
            if !seen.insert(s.label()) {
                return Err(Error::Config(format!("strategy `{}` listed twice", s.label())));
            }
        }
        Ok(out)
    }

    pub fn budget(&self) -> (usize, usize) {
        let (it, burn) = if self.desk_scale { DESK_BUDGET } else { FULL_BUDGET };
        (self.iterations.unwrap_or(it), self.burnin.unwrap_or(burn))
    }

    pub fn chain_settings(&self) -> ChainSettings {
        let (iterations, burnin) = self.budget();
        ChainSettings {
            iterations,
            burnin,
            thin: self.thin,
            seed: self.seed,
            max_sampling_seconds: self.max_sampling_seconds,
        }
    }

    pub fn data_source(&self) -> Result<DataSource> {
        let d = &self.data;
        match (&d.path, d.scenario) {
            (Some(_), Some(_)) => Err(Error::Config("give either data.path or data.scenario, not both".into())),
            (Some(p), None) => {
                if d.n_individuals.is_some() || d.n_items.is_some() {
                    return Err(Error::Config("data sizes only apply to synthetic scenarios".into()));
                }
                Ok(DataSource::File(p.clone()))
            }
            (None, Some(scenario)) => {
                let (n, m) = match (&self.factorial, d.n_individuals, d.n_items) {
                    (Some(_), _, _) => (0, 0),
                    (None, Some(n), Some(m)) => (n, m),
                    _ => {
                        return Err(Error::Config(
                            "synthetic data need data.n_individuals and data.n_items".into(),
                        ))
                    }
                };
                Ok(DataSource::Synthetic {
                    scenario,
                    n_individuals: n,
                    n_items: m,
                })
            }
            (None, None) => Err(Error::Config("no data: set data.path or data.scenario".into())),
        }
    }

    /// `(N, I)` cells to run: the factorial grid, or the single configured size.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        match (&self.factorial, self.data_source()?) {
            (Some(_), DataSource::File(_)) => {
                Err(Error::Config("a factorial design needs a synthetic scenario".into()))
            }
            (Some(f), DataSource::Synthetic { .. }) => {
                if f.n_individuals.is_empty() || f.n_items.is_empty() {
                    return Err(Error::Config("factorial levels must be non-empty".into()));
                }
                Ok(f.n_individuals
                    .iter()
                    .flat_map(|&n| f.n_items.iter().map(move |&m| (n, m)))
                    .collect())
            }
            (None, DataSource::Synthetic { n_individuals, n_items, .. }) => Ok(vec![(n_individuals, n_items)]),
            (None, DataSource::File(_)) => Ok(vec![(0, 0)]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies()?.is_empty() {
            return Err(Error::Config("strategy list is empty".into()));
        }
        self.chain_settings().validate()?;
        self.priors.validate()?;
        for (n, m) in self.cells()? {
            if matches!(self.data_source()?, DataSource::Synthetic { .. }) && (n < 2 || m < 2) {
                return Err(Error::Config(format!("synthetic data need N >= 2 and I >= 2, got ({n}, {m})")));
            }
        }
        if self.analysis.grid_points < 2 {
            return Err(Error::Config("analysis.grid_points must be at least 2".into()));
        }
        if !(self.analysis.truncation > 0.0 && self.analysis.truncation < 1.0) {
            return Err(Error::Config("analysis.truncation must lie in (0, 1)".into()));
        }
        if let (Some(lo), Some(hi)) = (self.analysis.grid_min, self.analysis.grid_max) {
            if !(lo < hi) {
                return Err(Error::Config("analysis.grid_min must be below grid_max".into()));
            }
        }
        Ok(())
    }
}
