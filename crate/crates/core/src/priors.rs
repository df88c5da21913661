//! Prior configuration, prior-predictive simulation and cluster-count elicitation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{sample_beta, sample_gamma, sample_inv_gamma, sample_normal};
use crate::error::{invalid, Result};
use crate::model::{expit, ModelKind};
use crate::rng::{substream, Stream};
use crate::samplers::strategy::Parameterization;

/// Normal prior on a mean and independent inverse-gamma prior on a variance.
///
/// Used both for the parametric ability hyperparameters and as the DP base
/// measure G0 = N(mean, mean_variance) x InvGamma(shape, scale), where the
/// inverse gamma has mean `scale / (shape - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalInvGamma {
    pub mean: f64,
    pub mean_variance: f64,
    pub shape: f64,
    pub scale: f64,
}

impl Default for NormalInvGamma {
    fn default() -> Self {
        Self {
            mean: 0.0,
            mean_variance: 3.0,
            shape: 2.01,
            scale: 1.01,
        }
    }
}

impl NormalInvGamma {
    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(invalid("normal prior mean must be finite"));
        }
        for (name, v) in [
            ("mean_variance", self.mean_variance),
            ("shape", self.shape),
            ("scale", self.scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// One `(mean, variance)` draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        (
            sample_normal(rng, self.mean, self.mean_variance),
            sample_inv_gamma(rng, self.shape, self.scale),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConcentrationPrior {
    Fixed { value: f64 },
    /// Gamma with shape `shape` and rate `rate` (mean shape / rate).
    Gamma { shape: f64, rate: f64 },
}

impl Default for ConcentrationPrior {
    fn default() -> Self {
        ConcentrationPrior::Gamma {
            shape: 2.0,
            rate: 4.0,
        }
    }
}

impl ConcentrationPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConcentrationPrior::Fixed { value } if !(value > 0.0) => {
                Err(invalid(format!("concentration {value} must be positive")))
            }
            ConcentrationPrior::Gamma { shape, rate } if !(shape > 0.0 && rate > 0.0) => Err(invalid(
                format!("gamma prior needs positive shape and rate, got ({shape}, {rate})"),
            )),
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ConcentrationPrior::Fixed { value } => value,
            ConcentrationPrior::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ConcentrationPrior::Fixed { value } => value,
            ConcentrationPrior::Gamma { shape, rate } => sample_gamma(rng, shape, rate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ItemPrior {
    pub log_slope_mean: f64,
    pub log_slope_variance: f64,
    pub difficulty_variance: f64,
    pub intercept_variance: f64,
    /// Beta(a, b) prior on 3PL guessing parameters.
    pub guessing_a: f64,
    pub guessing_b: f64,
}

impl Default for ItemPrior {
    fn default() -> Self {
        Self {
            log_slope_mean: 0.5,
            log_slope_variance: 0.5,
            difficulty_variance: 3.0,
            intercept_variance: 3.0,
            guessing_a: 2.0,
            guessing_b: 8.0,
        }
    }
}

impl ItemPrior {
    pub fn validate(&self) -> Result<()> {
        if !self.log_slope_mean.is_finite() {
            return Err(invalid("log_slope_mean must be finite"));
        }
        for (name, v) in [
            ("log_slope_variance", self.log_slope_variance),
            ("difficulty_variance", self.difficulty_variance),
            ("intercept_variance", self.intercept_variance),
            ("guessing_a", self.guessing_a),
            ("guessing_b", self.guessing_b),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn location_variance(&self, parameterization: Parameterization) -> f64 {
        match parameterization {
            Parameterization::Irt => self.difficulty_variance,
            Parameterization::SlopeIntercept => self.intercept_variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AbilityPrior {
    /// Hyperprior on (mu_eta, sigma2_eta) in the parametric model.
    pub hyper: NormalInvGamma,
    /// DP base measure G0.
    pub base_measure: NormalInvGamma,
    pub concentration: ConcentrationPrior,
}

impl AbilityPrior {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.base_measure.validate()?;
        self.concentration.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Priors {
    pub items: ItemPrior,
    pub abilities: AbilityPrior,
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        self.items.validate()?;
        self.abilities.validate()
    }
}

/// Which ability distribution a prior-predictive run simulates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbilityPriorKind {
    /// eta ~ N(0, 1), the constrained-abilities model.
    StandardNormal,
    /// eta ~ N(mu, sigma2) with the normal / inverse-gamma hyperprior.
    Normal,
    /// eta from the DP mixture, simulated forward through the CRP.
    DirichletProcess,
}

/// Layout of a prior-predictive run: each block simulates one small dataset
/// (shared hyperparameters and DP partition) and contributes all of its pi_ij.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveLayout {
    pub items_per_block: usize,
    pub individuals_per_block: usize,
}

impl Default for PredictiveLayout {
    fn default() -> Self {
        Self {
            items_per_block: 5,
            individuals_per_block: 10,
        }
    }
}

/// CRP seating weights for the next customer: existing tables then a new one, normalized.
pub fn crp_seating_probabilities(counts: &[usize], alpha: f64) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    let denom = alpha + total as f64;
    counts
        .iter()
        .map(|&n| n as f64 / denom)
        .chain(std::iter::once(alpha / denom))
        .collect()
}

/// Forward CRP simulation of `n` labels.
pub fn crp_forward<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut labels = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::new();
    for j in 0..n {
        let u = rng.gen::<f64>() * (alpha + j as f64);
        let mut acc = 0.0;
        let mut chosen = counts.len();
        for (k, &c) in counts.iter().enumerate() {
            acc += c as f64;
            if u < acc {
                chosen = k;
                break;
            }
        }
        if chosen == counts.len() {
            counts.push(0);
        }
        counts[chosen] += 1;
        labels.push(chosen);
    }
    (labels, counts)
}

pub fn simulate_prior_predictive(
    kind: ModelKind,
    parameterization: Parameterization,
    ability: AbilityPriorKind,
    priors: &Priors,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    simulate_prior_predictive_with_layout(
        kind,
        parameterization,
        ability,
        priors,
        n_draws,
        PredictiveLayout::default(),
        seed,
    )
}

pub fn simulate_prior_predictive_with_layout(
    kind: ModelKind,
    parameterization: Parameterization,
    ability: AbilityPriorKind,
    priors: &Priors,
    n_draws: usize,
    layout: PredictiveLayout,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_draws == 0 {
        return Err(invalid("n_draws must be at least 1"));
    }
    if layout.items_per_block == 0 || layout.individuals_per_block == 0 {
        return Err(invalid("prior-predictive blocks must be non-empty"));
    }
    priors.validate()?;
    let mut rng = substream(seed, Stream::Prior);
    let ip = &priors.items;
    let loc_var = ip.location_variance(parameterization);
    let mut out = Vec::with_capacity(n_draws);
    let mut etas = vec![0.0; layout.individuals_per_block];
    while out.len() < n_draws {
        match ability {
            AbilityPriorKind::StandardNormal => {
                for e in etas.iter_mut() {
                    *e = sample_normal(&mut rng, 0.0, 1.0);
                }
            }
            AbilityPriorKind::Normal => {
                let (mu, s2) = priors.abilities.hyper.sample(&mut rng);
                for e in etas.iter_mut() {
                    *e = sample_normal(&mut rng, mu, s2);
                }
            }
            AbilityPriorKind::DirichletProcess => {
                let alpha = priors.abilities.concentration.sample(&mut rng);
                let (labels, counts) = crp_forward(etas.len(), alpha, &mut rng);
                let atoms: Vec<(f64, f64)> = (0..counts.len())
                    .map(|_| priors.abilities.base_measure.sample(&mut rng))
                    .collect();
                for (e, &z) in etas.iter_mut().zip(&labels) {
                    *e = sample_normal(&mut rng, atoms[z].0, atoms[z].1);
                }
            }
        }
        for _ in 0..layout.items_per_block {
            let slope = if kind.has_discrimination() {
                sample_normal(&mut rng, ip.log_slope_mean, ip.log_slope_variance).exp()
            } else {
                1.0
            };
            let location = sample_normal(&mut rng, 0.0, loc_var);
            let guess = kind
                .has_guessing()
                .then(|| sample_beta(&mut rng, ip.guessing_a, ip.guessing_b));
            for &eta in &etas {
                if out.len() == n_draws {
                    break;
                }
                let logit = match parameterization {
                    Parameterization::Irt => slope * (eta - location),
                    Parameterization::SlopeIntercept => slope * eta + location,
                };
                let p = expit(logit);
                out.push(match guess {
                    Some(u) => u + (1.0 - u) * p,
                    None => p,
                });
            }
        }
    }
    Ok(out)
}

/// Summary written by `prior-check`: moments and deciles of a pi sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub deciles: Vec<f64>,
    pub reference_mean: f64,
    pub reference_variance: f64,
}

pub fn summarize_predictive(sample: &[f64]) -> PredictiveSummary {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    PredictiveSummary {
        n: sample.len(),
        mean: crate::dist::mean(sample),
        variance: if sample.len() > 1 { crate::dist::variance(sample) } else { 0.0 },
        deciles: (1..10)
            .map(|d| crate::dist::quantile_sorted(&sorted, d as f64 / 10.0))
            .collect(),
        reference_mean: 0.5,
        reference_variance: 0.125,
    }
}

/// Prior mean and variance of the number of occupied clusters among `n` draws
/// from a CRP with concentration `alpha`.
pub fn crp_cluster_moments(alpha: f64, n: usize) -> Result<(f64, f64)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("concentration {alpha} must be positive")));
    }
    if n == 0 {
        return Err(invalid("need at least one observation"));
    }
    let mut expected = 0.0;
    let mut var = 0.0;
    for i in 1..=n {
        let d = alpha + (i - 1) as f64;
        expected += alpha / d;
        var += alpha * (i - 1) as f64 / (d * d);
    }
    Ok((expected, var))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterMoments {
    pub expected: f64,
    pub variance: f64,
    /// Average of the conditional variances (the first term of the decomposition).
    pub mean_conditional_variance: f64,
}

/// Monte Carlo marginal moments of the cluster count when alpha has a prior.
pub fn marginal_cluster_moments(
    prior: &ConcentrationPrior,
    n: usize,
    n_mc: usize,
    seed: u64,
) -> Result<ClusterMoments> {
    prior.validate()?;
    if n_mc == 0 {
        return Err(invalid("n_mc must be at least 1"));
    }
    if let ConcentrationPrior::Fixed { value } = *prior {
        let (e, v) = crp_cluster_moments(value, n)?;
        return Ok(ClusterMoments {
            expected: e,
            variance: v,
            mean_conditional_variance: v,
        });
    }
    let mut rng = substream(seed, Stream::Elicitation);
    let mut means = Vec::with_capacity(n_mc);
    let mut var_sum = 0.0;
    for _ in 0..n_mc {
        let alpha = prior.sample(&mut rng);
        let (e, v) = crp_cluster_moments(alpha, n)?;
        means.push(e);
        var_sum += v;
    }
    let e_hat = crate::dist::mean(&means);
    let var_of_means = means.iter().map(|m| (m - e_hat).powi(2)).sum::<f64>() / n_mc as f64;
    let mean_cond = var_sum / n_mc as f64;
    Ok(ClusterMoments {
        expected: e_hat,
        variance: mean_cond + var_of_means,
        mean_conditional_variance: mean_cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean, variance};
    use crate::rng::substream;

    #[test]
    fn single_observation_is_one_cluster() {
        for alpha in [0.01, 1.0, 50.0] {
            assert_eq!(crp_cluster_moments(alpha, 1).unwrap(), (1.0, 0.0));
        }
    }

    #[test]
    fn two_observations_hand_values() {
        // E = 1 + 1/2, Var = 1 * 1 / (1 + 1)^2
        let (e, v) = crp_cluster_moments(1.0, 2).unwrap();
        assert!((e - 1.5).abs() < 1e-15);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_concentration_rejected() {
        assert!(crp_cluster_moments(0.0, 3).is_err());
        assert!(crp_cluster_moments(-1.0, 3).is_err());
        assert!(marginal_cluster_moments(&ConcentrationPrior::Gamma { shape: 0.0, rate: 1.0 }, 10, 10, 1).is_err());
    }

    #[test]
    fn moments_increase_in_alpha_and_n() {
        let mut prev = 0.0;
        for alpha in [0.05, 0.3, 1.0, 4.0, 20.0] {
            let (e, v) = crp_cluster_moments(alpha, 100).unwrap();
            assert!(e > prev && v >= 0.0 && (1.0..=100.0).contains(&e));
            prev = e;
        }
        let mut prev = 0.0;
        for n in [1, 2, 10, 100, 1000] {
            let (e, _) = crp_cluster_moments(0.7, n).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn forward_crp_matches_cluster_moments() {
        // Oracle: empirical cluster counts of independent forward CRP runs.
        let (alpha, n, reps) = (0.5, 100, 100_000);
        let mut rng = substream(11, Stream::Prior);
        let ks: Vec<f64> = (0..reps)
            .map(|_| crp_forward(n, alpha, &mut rng).1.len() as f64)
            .collect();
        let (e, v) = crp_cluster_moments(alpha, n).unwrap();
        let m = mean(&ks);
        let s2 = variance(&ks);
        let se_mean = (s2 / reps as f64).sqrt();
        assert!((m - e).abs() < 3.0 * se_mean, "mean {m} vs {e}");
        // SE of a sample variance ~ sqrt((m4 - s^4) / n)
        let m4 = ks.iter().map(|k| (k - m).powi(4)).sum::<f64>() / reps as f64;
        let se_var = ((m4 - s2 * s2) / reps as f64).sqrt();
        assert!((s2 - v).abs() < 3.0 * se_var, "var {s2} vs {v}");
    }

    #[test]
    fn seating_weights_for_second_customer() {
        let p = crp_seating_probabilities(&[1], 0.7);
        assert!((p[1] - 0.7 / 1.7).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_alpha_marginal_equals_conditional() {
        let m = marginal_cluster_moments(&ConcentrationPrior::Fixed { value: 0.8 }, 500, 10, 3).unwrap();
        let (e, v) = crp_cluster_moments(0.8, 500).unwrap();
        assert_eq!((m.expected, m.variance), (e, v));
    }

    #[test]
    fn total_variance_dominates_conditional_average() {
        let m = marginal_cluster_moments(&ConcentrationPrior::Gamma { shape: 2.0, rate: 4.0 }, 200, 2000, 9).unwrap();
        assert!(m.variance >= m.mean_conditional_variance);
    }

    #[test]
    fn degenerate_priors_give_half() {
        let priors = Priors {
            items: ItemPrior {
                log_slope_mean: 0.0,
                log_slope_variance: 1e-14,
                difficulty_variance: 1e-14,
                intercept_variance: 1e-14,
                ..ItemPrior::default()
            },
            abilities: AbilityPrior {
                hyper: NormalInvGamma {
                    mean: 0.0,
                    mean_variance: 1e-14,
                    shape: 50.0,
                    scale: 1e-12,
                },
                ..AbilityPrior::default()
            },
        };
        let s = simulate_prior_predictive(
            ModelKind::TwoPL,
            Parameterization::Irt,
            AbilityPriorKind::Normal,
            &priors,
            1000,
            5,
        )
        .unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.iter().all(|p| (p - 0.5).abs() < 1e-5));
        assert!(simulate_prior_predictive(
            ModelKind::TwoPL,
            Parameterization::Irt,
            AbilityPriorKind::Normal,
            &priors,
            0,
            5
        )
        .is_err());
    }

    #[test]
    fn default_prior_predictive_moments() {
        // Oracle (independent numpy simulation, 4e5 iid draws): default 2PL IRT
        // priors with the N(mu, sigma2) hyperprior give mean 0.500, var 0.157;
        // eta ~ N(0,1) gives var 0.138.
        let priors = Priors::default();
        for (ability, target_var) in [
            (AbilityPriorKind::Normal, 0.157),
            (AbilityPriorKind::StandardNormal, 0.138),
        ] {
            let s = simulate_prior_predictive(ModelKind::TwoPL, Parameterization::Irt, ability, &priors, 100_000, 21)
                .unwrap();
            assert!((mean(&s) - 0.5).abs() < 0.02);
            assert!((variance(&s) - target_var).abs() < 0.006, "{ability:?} {}", variance(&s));
        }
    }

    #[test]
    fn concentration_has_little_effect_on_dp_predictive() {
        let mut moments = Vec::new();
        for alpha in [0.01, 0.5, 2.0] {
            let mut priors = Priors::default();
            priors.abilities.concentration = ConcentrationPrior::Fixed { value: alpha };
            let s = simulate_prior_predictive(
                ModelKind::TwoPL,
                Parameterization::Irt,
                AbilityPriorKind::DirichletProcess,
                &priors,
                100_000,
                4,
            )
            .unwrap();
            moments.push((mean(&s), variance(&s)));
        }
        for a in 0..3 {
            for b in a + 1..3 {
                assert!((moments[a].0 - moments[b].0).abs() < 0.03, "{moments:?}");
                assert!((moments[a].1 - moments[b].1).abs() < 0.03, "{moments:?}");
            }
        }
    }
}
