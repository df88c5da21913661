//! WAIC from pointwise log-likelihood draws, accumulated one draw at a time so
//! the full draws x observations matrix never has to be held in memory.

use serde::{Deserialize, Serialize};

use crate::archive::SampleArchive;
use crate::error::{invalid, Error, Result};
use crate::inference::density::as_base;
use crate::model::{pointwise_log_likelihood, ResponseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
    pub n_draws: usize,
    pub n_observations: usize,
}

/// Streaming lppd (max-shifted log-mean-exp) and Welford variances per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaicAccumulator {
    draws: usize,
    max: Vec<f64>,
    scaled_sum: Vec<f64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl WaicAccumulator {
    pub fn new(n_observations: usize) -> Self {
        Self {
            draws: 0,
            max: vec![f64::NEG_INFINITY; n_observations],
            scaled_sum: vec![0.0; n_observations],
            mean: vec![0.0; n_observations],
            m2: vec![0.0; n_observations],
        }
    }

    pub fn push(&mut self, loglik: &[f64]) -> Result<()> {
        if loglik.len() != self.max.len() {
            return Err(Error::Dimension(format!(
                "draw has {} observations, expected {}",
                loglik.len(),
                self.max.len()
            )));
        }
        if let Some(x) = loglik.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("pointwise log-likelihood {x}")));
        }
        self.draws += 1;
        let t = self.draws as f64;
        for (k, &x) in loglik.iter().enumerate() {
            if x > self.max[k] {
                self.scaled_sum[k] = self.scaled_sum[k] * (self.max[k] - x).exp() + 1.0;
                self.max[k] = x;
            } else {
                self.scaled_sum[k] += (x - self.max[k]).exp();
            }
            let d = x - self.mean[k];
            self.mean[k] += d / t;
            self.m2[k] += d * (x - self.mean[k]);
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<Waic> {
        if self.draws < 2 {
            return Err(invalid("WAIC needs at least two draws"));
        }
        let t = self.draws as f64;
        let lppd: f64 = self
            .max
            .iter()
            .zip(&self.scaled_sum)
            .map(|(m, s)| m + (s / t).ln())
            .sum();
        let p_waic: f64 = self.m2.iter().map(|v| v / (t - 1.0)).sum();
        Ok(Waic {
            waic: -2.0 * (lppd - p_waic),
            lppd,
            p_waic,
            n_draws: self.draws,
            n_observations: self.max.len(),
        })
    }
}

/// WAIC of a draws x observations collection.
pub fn waic(draws: &[Vec<f64>]) -> Result<Waic> {
    let first = draws.first().ok_or_else(|| invalid("no draws"))?;
    let mut acc = WaicAccumulator::new(first.len());
    for d in draws {
        acc.push(d)?;
    }
    acc.finish()
}

/// WAIC of a fitted archive on its data (observed cells only).
pub fn waic_from_archive(archive: &SampleArchive, data: &ResponseMatrix) -> Result<Waic> {
    let base = as_base(archive)?;
    if data.n_individuals() != base.meta.n_individuals || data.n_items() != base.meta.n_items {
        return Err(Error::Dimension("archive and data dimensions differ".into()));
    }
    let mut acc = WaicAccumulator::new(data.n_observed());
    let mut buf = Vec::with_capacity(data.n_observed());
    for t in 0..base.n_draws() {
        let items = base.items_irt(t)?;
        let pw = pointwise_log_likelihood(data, base.kind(), &items, base.abilities(t)?)?;
        buf.clear();
        buf.extend(pw.observed());
        acc.push(&buf)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_draws_have_no_penalty() {
        let d = vec![vec![-0.3, -1.2, -0.05]; 4];
        let w = waic(&d).unwrap();
        assert!(w.p_waic.abs() < 1e-15);
        assert!((w.waic - 2.0 * 1.55).abs() < 1e-12);
    }

    #[test]
    fn two_draw_hand_values() {
        // obs 1: (-1, -2); obs 2: (-0.5, -0.5)
        let d = vec![vec![-1.0, -0.5], vec![-2.0, -0.5]];
        let w = waic(&d).unwrap();
        let lppd = ((-1.0f64).exp() * 0.5 + (-2.0f64).exp() * 0.5).ln() - 0.5;
        assert!((w.lppd - lppd).abs() < 1e-14);
        assert!((w.p_waic - 0.5).abs() < 1e-14);
        assert!((w.waic + 2.0 * (lppd - 0.5)).abs() < 1e-13);
    }

    #[test]
    fn very_negative_values_do_not_underflow() {
        let d = vec![vec![-800.0], vec![-801.0], vec![-799.0]];
        let w = waic(&d).unwrap();
        let want = -800.0 + ((1.0 + (-1.0f64).exp() + 1.0f64.exp()) / 3.0).ln();
        assert!((w.lppd - want).abs() < 1e-10);
    }

    #[test]
    fn single_draw_is_an_error() {
        assert!(waic(&[vec![-1.0]]).is_err());
        assert!(waic(&[vec![-1.0], vec![-1.0, -2.0]]).is_err());
    }
}
