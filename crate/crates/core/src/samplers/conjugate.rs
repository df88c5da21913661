//! Gibbs updates for a normal mean with a normal prior and a variance with an
//! inverse-gamma prior (the two priors independent).

use rand::Rng;

use crate::dist::{sample_inv_gamma, sample_normal};
use crate::error::Result;
use crate::priors::NormalInvGamma;

/// Full conditional of the mean given the variance: `(mean, variance)` of a normal.
pub fn mean_full_conditional(observations: &[f64], prior: &NormalInvGamma, variance: f64) -> (f64, f64) {
    let n = observations.len() as f64;
    let sum: f64 = observations.iter().sum();
    let precision = 1.0 / prior.mean_variance + n / variance;
    let m = (prior.mean / prior.mean_variance + sum / variance) / precision;
    (m, 1.0 / precision)
}

/// Full conditional of the variance given the mean: inverse-gamma `(shape, scale)`.
pub fn variance_full_conditional(observations: &[f64], prior: &NormalInvGamma, mean: f64) -> (f64, f64) {
    let ss: f64 = observations.iter().map(|x| (x - mean) * (x - mean)).sum();
    (
        prior.shape + 0.5 * observations.len() as f64,
        prior.scale + 0.5 * ss,
    )
}

pub fn draw_mean<R: Rng + ?Sized>(observations: &[f64], prior: &NormalInvGamma, variance: f64, rng: &mut R) -> f64 {
    let (m, v) = mean_full_conditional(observations, prior, variance);
    sample_normal(rng, m, v)
}

pub fn draw_variance<R: Rng + ?Sized>(observations: &[f64], prior: &NormalInvGamma, mean: f64, rng: &mut R) -> f64 {
    let (shape, scale) = variance_full_conditional(observations, prior, mean);
    sample_inv_gamma(rng, shape, scale)
}

/// One Gibbs pass: mean | variance, data then variance | new mean, data.
///
/// With no observations both draws come from the prior.
pub fn conjugate_normal_invgamma_update<R: Rng + ?Sized>(
    observations: &[f64],
    prior: &NormalInvGamma,
    current_variance: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    prior.validate()?;
    let mu = draw_mean(observations, prior, current_variance, rng);
    let s2 = draw_variance(observations, prior, mu, rng);
    Ok((mu, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean, variance};
    use crate::rng::{substream, Stream};

    fn prior() -> NormalInvGamma {
        NormalInvGamma::default()
    }

    #[test]
    fn empty_observations_draw_from_prior() {
        let mut rng = substream(5, Stream::Chain);
        let p = NormalInvGamma {
            mean: 1.0,
            mean_variance: 2.0,
            shape: 5.0,
            scale: 8.0,
        };
        let draws: Vec<(f64, f64)> = (0..100_000)
            .map(|_| conjugate_normal_invgamma_update(&[], &p, 1.0, &mut rng).unwrap())
            .collect();
        let mus: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let s2: Vec<f64> = draws.iter().map(|d| d.1).collect();
        assert!((mean(&mus) - 1.0).abs() < 3.0 * (2.0f64 / 1e5).sqrt());
        assert!((variance(&mus) - 2.0).abs() < 0.03);
        // IG(5, 8): mean 2, var 4 / 3
        let se = (4.0f64 / 3.0 / 1e5).sqrt();
        assert!((mean(&s2) - 2.0).abs() < 3.0 * se);
    }

    #[test]
    fn mean_draws_match_closed_form() {
        let data = [0.4, -1.2, 2.2, 0.9, 0.1];
        let sigma2 = 0.8;
        let p = prior();
        // closed form: precision = 1/3 + 5/0.8, mean = (sum/0.8) / precision
        let precision: f64 = 1.0 / 3.0 + 5.0 / 0.8;
        let m = (2.4 / 0.8) / precision;
        let v = 1.0 / precision;
        let mut rng = substream(6, Stream::Chain);
        let draws: Vec<f64> = (0..100_000).map(|_| draw_mean(&data, &p, sigma2, &mut rng)).collect();
        let se = (v / 1e5).sqrt();
        assert!((mean(&draws) - m).abs() < 3.0 * se);
        let se_var = v * (2.0f64 / 1e5).sqrt();
        assert!((variance(&draws) - v).abs() < 3.0 * se_var);
    }

    #[test]
    fn variance_draws_match_closed_form() {
        let data = [0.4, -1.2, 2.2, 0.9, 0.1];
        let mu = 0.3;
        let p = prior();
        let ss: f64 = data.iter().map(|x: &f64| (x - mu).powi(2)).sum();
        let shape = 2.01 + 2.5;
        let scale = 1.01 + 0.5 * ss;
        let m = scale / (shape - 1.0);
        let v = scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0));
        let mut rng = substream(7, Stream::Chain);
        let draws: Vec<f64> = (0..100_000).map(|_| draw_variance(&data, &p, mu, &mut rng)).collect();
        assert!((mean(&draws) - m).abs() < 3.0 * (v / 1e5).sqrt());
    }

    #[test]
    fn many_constant_observations_concentrate_mean() {
        let data = vec![1.7; 100_000];
        let mut rng = substream(8, Stream::Chain);
        let mut s2 = 1.0;
        let mut mu = 0.0;
        for _ in 0..20 {
            (mu, s2) = conjugate_normal_invgamma_update(&data, &prior(), s2, &mut rng).unwrap();
        }
        assert!((mu - 1.7).abs() < 1e-3);
        assert!(s2 < 1e-3);
    }
}
