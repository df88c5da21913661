use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameterization {
    #[serde(rename = "IRT", alias = "irt")]
    Irt,
    #[serde(rename = "SI", alias = "si", alias = "slope-intercept")]
    SlopeIntercept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    #[serde(alias = "constrained_abilities")]
    ConstrainedAbilities,
    #[serde(alias = "constrained_items")]
    ConstrainedItems,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(alias = "mh_conjugate", alias = "mh/conjugate")]
    MhConjugate,
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbilityModel {
    Parametric,
    Semiparametric,
}

macro_rules! parse_via_serde {
    ($ty:ty, $what:literal) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
                    .map_err(|_| Error::Config(format!("unknown {} `{}`", $what, s)))
            }
        }
    };
}

parse_via_serde!(Parameterization, "parameterization");
parse_via_serde!(ConstraintMode, "constraint mode");
parse_via_serde!(Algorithm, "algorithm");
parse_via_serde!(AbilityModel, "ability model");

/// One non-HMC cell of the strategy matrix, plus the model kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(rename = "model")]
    pub kind: ModelKind,
    pub parameterization: Parameterization,
    #[serde(rename = "constraint")]
    pub constraint_mode: ConstraintMode,
    pub algorithm: Algorithm,
    pub ability_model: AbilityModel,
}

impl StrategyConfig {
    pub fn new(
        kind: ModelKind,
        parameterization: Parameterization,
        constraint_mode: ConstraintMode,
        algorithm: Algorithm,
        ability_model: AbilityModel,
    ) -> Result<Self> {
        let s = Self {
            kind,
            parameterization,
            constraint_mode,
            algorithm,
            ability_model,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        use AbilityModel::*;
        use Algorithm::*;
        use ConstraintMode::*;
        if self.algorithm == Centered && self.parameterization != Parameterization::SlopeIntercept {
            return Err(Error::Config("the centered sampler requires the SI parameterization".into()));
        }
        if self.algorithm == Centered && self.constraint_mode == ConstrainedItems {
            return Err(Error::Config(
                "the centered sampler is not defined for constrained item parameters".into(),
            ));
        }
        if self.algorithm == Centered && !self.kind.has_discrimination() {
            return Err(Error::Config("the centered sampler needs discrimination parameters".into()));
        }
        if self.constraint_mode == ConstrainedAbilities && self.ability_model == Semiparametric {
            return Err(Error::Config(
                "constrained abilities are only available for the parametric model".into(),
            ));
        }
        Ok(())
    }

    /// Every valid cell for a model kind (13 for 2PL).
    pub fn all(kind: ModelKind) -> Vec<StrategyConfig> {
        let mut out = Vec::new();
        for am in [AbilityModel::Parametric, AbilityModel::Semiparametric] {
            for cm in [
                ConstraintMode::ConstrainedAbilities,
                ConstraintMode::ConstrainedItems,
                ConstraintMode::Unconstrained,
            ] {
                for p in [Parameterization::SlopeIntercept, Parameterization::Irt] {
                    for a in [Algorithm::MhConjugate, Algorithm::Centered] {
                        if let Ok(s) = StrategyConfig::new(kind, p, cm, a, am) {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out
    }

    /// Short filesystem-safe label, e.g. `2pl-semi-si-unconstrained-centered`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-{}-{}",
            self.kind.to_string().to_ascii_lowercase(),
            match self.ability_model {
                AbilityModel::Parametric => "param",
                AbilityModel::Semiparametric => "semi",
            },
            match self.parameterization {
                Parameterization::Irt => "irt",
                Parameterization::SlopeIntercept => "si",
            },
            match self.constraint_mode {
                ConstraintMode::ConstrainedAbilities => "constrained-abilities",
                ConstraintMode::ConstrainedItems => "constrained-items",
                ConstraintMode::Unconstrained => "unconstrained",
            },
            match self.algorithm {
                Algorithm::MhConjugate => "mh",
                Algorithm::Centered => "centered",
            }
        )
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
