#![allow(dead_code)]

use bnpirt::archive::SampleArchive;
use bnpirt::diagnostics::univariate_ess;
use bnpirt::model::{ModelKind, ResponseMatrix};
use bnpirt::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization, StrategyConfig};
use bnpirt::sim::{simulate_responses, GroundTruth, Scenario};

pub fn dataset(scenario: Scenario, n: usize, i: usize, seed: u64) -> (GroundTruth, ResponseMatrix) {
    let truth = GroundTruth::simulate(scenario, ModelKind::TwoPL, n, i, seed).unwrap();
    let y = simulate_responses(&truth, ModelKind::TwoPL, seed).unwrap();
    (truth, y)
}

pub fn strategy(
    parameterization: Parameterization,
    constraint: ConstraintMode,
    algorithm: Algorithm,
    ability_model: AbilityModel,
) -> StrategyConfig {
    StrategyConfig::new(ModelKind::TwoPL, parameterization, constraint, algorithm, ability_model).unwrap()
}

pub fn irt_mh(constraint: ConstraintMode, ability_model: AbilityModel) -> StrategyConfig {
    strategy(Parameterization::Irt, constraint, Algorithm::MhConjugate, ability_model)
}

/// Largest |logit difference| over all cells and draws between two archives
/// describing the same fit.
pub fn max_logit_gap(a: &SampleArchive, b: &SampleArchive) -> f64 {
    assert_eq!(a.n_draws(), b.n_draws());
    let mut worst: f64 = 0.0;
    for t in 0..a.n_draws() {
        let (ia, ib) = (a.items_irt(t).unwrap(), b.items_irt(t).unwrap());
        let (ea, eb) = (a.abilities(t).unwrap(), b.abilities(t).unwrap());
        for i in 0..ia.len() {
            for (x, y) in ea.iter().zip(eb) {
                let la = ia.discrimination[i] * (x - ia.difficulty[i]);
                let lb = ib.discrimination[i] * (y - ib.difficulty[i]);
                worst = worst.max((la - lb).abs() / la.abs().max(1.0));
            }
        }
    }
    worst
}

/// Posterior mean and its Monte Carlo standard error from batch-means ESS.
pub fn mean_and_se(chain: &[f64]) -> (f64, f64) {
    let n = chain.len() as f64;
    let m = chain.iter().sum::<f64>() / n;
    let var = chain.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    let ess = univariate_ess(chain).unwrap().ess;
    (m, (var / ess).sqrt())
}

pub fn base_column_names(n: usize, i: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=i).map(|k| format!("lambda[{k}]")).collect();
    names.extend((1..=i).map(|k| format!("beta[{k}]")));
    names.extend((1..=n).map(|k| format!("eta[{k}]")));
    names
}
