//! Latent ability density estimates with pointwise 95% bands.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::archive::{ParameterizationState, SampleArchive};
use crate::dist::{normal_pdf, quantile_sorted};
use crate::error::{invalid, Error, Result};
use crate::identify::postprocess_archive;
use crate::samplers::crp::Atom;

pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DensityEstimate {
    /// Trapezoid integral of the mean curve.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.mean)
    }

    /// Grid indices of strict local maxima of the mean curve.
    pub fn local_maxima(&self) -> Vec<usize> {
        local_maxima(&self.mean)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["grid", "mean", "lower", "upper"])?;
        for k in 0..self.grid.len() {
            w.write_record(&[
                format!("{}", self.grid[k]),
                format!("{}", self.mean[k]),
                format!("{}", self.lower[k]),
                format!("{}", self.upper[k]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<density>", e))?;
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points over `[min - 2, max + 2]` of the given point estimates.
pub fn default_grid(point_estimates: &[f64], n: usize) -> Result<Vec<f64>> {
    if point_estimates.is_empty() || n < 2 {
        return Err(invalid("grid needs at least one estimate and two points"));
    }
    let lo = point_estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = point_estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(linspace(lo - 2.0, hi + 2.0, n))
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid must be strictly increasing"));
    }
    Ok(())
}

/// Mean and pointwise 2.5% / 97.5% quantiles of per-draw curves.
fn summarize(grid: &[f64], curves: Vec<Vec<f64>>) -> Result<DensityEstimate> {
    if curves.is_empty() {
        return Err(invalid("no draws to summarize"));
    }
    let g = grid.len();
    let t = curves.len() as f64;
    let mut mean = vec![0.0; g];
    let mut lower = vec![0.0; g];
    let mut upper = vec![0.0; g];
    let mut column = Vec::with_capacity(curves.len());
    for k in 0..g {
        column.clear();
        column.extend(curves.iter().map(|c| c[k]));
        mean[k] = column.iter().sum::<f64>() / t;
        column.sort_by(f64::total_cmp);
        lower[k] = quantile_sorted(&column, 0.025);
        upper[k] = quantile_sorted(&column, 0.975);
    }
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        mean,
        lower,
        upper,
    })
}

/// Average of normal densities over hyperparameter draws.
pub fn parametric_density_estimate(means: &[f64], variances: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    check_grid(grid)?;
    if means.len() != variances.len() {
        return Err(Error::Dimension("mean and variance draws differ in number".into()));
    }
    if means.is_empty() {
        return Err(invalid("empty archive"));
    }
    if let Some(v) = variances.iter().find(|&&v| !(v > 0.0)) {
        return Err(invalid(format!("variance draw {v} must be positive")));
    }
    let curves = means
        .iter()
        .zip(variances)
        .map(|(&m, &v)| grid.iter().map(|&x| normal_pdf(x, m, v)).collect())
        .collect();
    summarize(grid, curves)
}

/// One posterior draw of the CRP state plus an extra atom from G0.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpDraw {
    pub counts: Vec<usize>,
    pub atoms: Vec<Atom>,
    pub alpha: f64,
    pub fresh: Atom,
}

impl CrpDraw {
    pub fn validate(&self) -> Result<()> {
        if self.counts.len() != self.atoms.len() || self.counts.is_empty() {
            return Err(Error::State("occupancy counts and atoms disagree".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::State("empty cluster in a draw".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::State("concentration must be positive".into()));
        }
        Ok(())
    }

    /// Predictive density of a new individual given this draw.
    pub fn density(&self, x: f64) -> f64 {
        let n: usize = self.counts.iter().sum();
        let denom = self.alpha + n as f64;
        let occupied: f64 = self
            .counts
            .iter()
            .zip(&self.atoms)
            .map(|(&c, a)| c as f64 * normal_pdf(x, a.mean, a.variance))
            .sum();
        (occupied + self.alpha * normal_pdf(x, self.fresh.mean, self.fresh.variance)) / denom
    }
}

pub fn crp_predictive_density_estimate(draws: &[CrpDraw], grid: &[f64]) -> Result<DensityEstimate> {
    check_grid(grid)?;
    if draws.is_empty() {
        return Err(invalid("empty archive"));
    }
    for d in draws {
        d.validate()?;
    }
    let curves = draws
        .iter()
        .map(|d| grid.iter().map(|&x| d.density(x)).collect())
        .collect();
    summarize(grid, curves)
}

/// CRP draws of a (base) archive.
pub fn crp_draws(archive: &SampleArchive) -> Result<Vec<CrpDraw>> {
    let c = archive
        .clustering()
        .ok_or_else(|| invalid("archive has no cluster labels"))?;
    let alpha = archive.column("alpha")?;
    let mu = archive.column("new_mu")?;
    let s2 = archive.column("new_sigma2")?;
    Ok((0..archive.n_draws())
        .map(|t| CrpDraw {
            counts: c.counts(t),
            atoms: c.atoms(t).to_vec(),
            alpha: alpha[t],
            fresh: Atom::new(mu[t], s2[t]),
        })
        .collect())
}

pub(crate) fn as_base(archive: &SampleArchive) -> Result<Cow<'_, SampleArchive>> {
    Ok(match archive.meta.parameterization {
        ParameterizationState::Base => Cow::Borrowed(archive),
        ParameterizationState::Sampled => Cow::Owned(postprocess_archive(archive)?),
    })
}

/// Posterior-mean abilities on the base scale.
pub fn posterior_mean_abilities(archive: &SampleArchive) -> Result<Vec<f64>> {
    let base = as_base(archive)?;
    let n = base.meta.n_individuals;
    let s = base.block("eta", n)?;
    Ok(base.column_means()[s..s + n].to_vec())
}

/// Density estimate on the base scale: the CRP predictive form for DP fits,
/// the averaged normal otherwise. Uses the default grid when `grid` is `None`.
pub fn density_from_archive(archive: &SampleArchive, grid: Option<&[f64]>) -> Result<DensityEstimate> {
    let base = as_base(archive)?;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = default_grid(&posterior_mean_abilities(&base)?, DEFAULT_GRID_POINTS)?;
            &owned
        }
    };
    if base.clustering().is_some() {
        crp_predictive_density_estimate(&crp_draws(&base)?, grid)
    } else {
        parametric_density_estimate(&base.column("mu_eta")?, &base.column("sigma2_eta")?, grid)
    }
}

/// Gaussian kernel density estimate with Silverman's bandwidth, for
/// comparison plots against posterior-mean abilities.
pub fn kde(points: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(invalid("kernel density estimate needs at least two points"));
    }
    let n = points.len() as f64;
    let m = points.iter().sum::<f64>() / n;
    let sd = (points.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if !(h > 0.0) {
        return Err(invalid("points have no spread"));
    }
    Ok(grid
        .iter()
        .map(|&x| points.iter().map(|&p| normal_pdf(x, p, h * h)).sum::<f64>() / n)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        linspace(-10.0, 10.0, 2001)
    }

    #[test]
    fn identical_draws_give_the_normal_pdf_with_no_band() {
        let g = grid();
        let d = parametric_density_estimate(&[0.0; 5], &[1.0; 5], &g).unwrap();
        for k in 0..g.len() {
            let p = normal_pdf(g[k], 0.0, 1.0);
            assert!((d.mean[k] - p).abs() < 1e-15);
            assert_eq!(d.lower[k], d.upper[k]);
        }
        assert!((d.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn two_draws_give_the_equal_mixture() {
        let g = grid();
        let d = parametric_density_estimate(&[-1.0, 1.0], &[1.0, 1.0], &g).unwrap();
        for (x, y) in g.iter().zip(&d.mean) {
            let want = 0.5 * (-(x + 1.0).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
                + 0.5 * (-(x - 1.0).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((y - want).abs() < 1e-14);
        }
        assert!(parametric_density_estimate(&[], &[], &g).is_err());
        assert!(parametric_density_estimate(&[0.0], &[0.0], &g).is_err());
    }

    #[test]
    fn crp_draw_hand_built() {
        let d = CrpDraw {
            counts: vec![3, 1],
            atoms: vec![Atom::new(-1.0, 0.5), Atom::new(2.0, 1.5)],
            alpha: 1.0,
            fresh: Atom::new(0.0, 3.0),
        };
        let pdf = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        for x in [-3.0, -1.0, 0.0, 0.7, 2.5] {
            let want = 0.6 * pdf(x, -1.0, 0.5) + 0.2 * pdf(x, 2.0, 1.5) + 0.2 * pdf(x, 0.0, 3.0);
            assert!((d.density(x) - want).abs() < 1e-15);
        }
        let est = crp_predictive_density_estimate(&[d], &grid()).unwrap();
        assert!((est.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tiny_alpha_single_cluster_is_its_normal() {
        let d = CrpDraw {
            counts: vec![40],
            atoms: vec![Atom::new(0.5, 2.0)],
            alpha: 1e-12,
            fresh: Atom::new(5.0, 1.0),
        };
        for x in [-2.0, 0.5, 3.0] {
            assert!((d.density(x) - normal_pdf(x, 0.5, 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_draws_are_rejected() {
        let d = CrpDraw {
            counts: vec![1, 0],
            atoms: vec![Atom::new(0.0, 1.0), Atom::new(1.0, 1.0)],
            alpha: 1.0,
            fresh: Atom::new(0.0, 1.0),
        };
        assert!(crp_predictive_density_estimate(&[d], &grid()).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn default_grid_and_maxima() {
        let g = default_grid(&[-1.0, 3.0], 5).unwrap();
        assert_eq!(g, vec![-3.0, -1.0, 1.0, 3.0, 5.0]);
        assert_eq!(local_maxima(&[0.0, 1.0, 0.5, 2.0, 0.0]), vec![1, 3]);
    }

    #[test]
    fn kde_integrates_to_one() {
        let pts: Vec<f64> = (0..50).map(|k| (k as f64 / 7.0).sin() * 2.0).collect();
        let g = grid();
        let d = kde(&pts, &g).unwrap();
        assert!((trapezoid(&g, &d) - 1.0).abs() < 1e-3);
    }
}
