//! Batch-means effective sample sizes and efficiency-per-second reports.
//!
//! Univariate: `ESS = n s^2 / sigma^2_bm`. Multivariate:
//! `mESS = n (det Lambda / det Sigma)^(1/p)` with `Lambda` the sample covariance
//! and `Sigma` the batch-means long-run covariance, both taken on a common
//! diagonal scaling so the log-determinants are well conditioned.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::archive::{indexed, SampleArchive};
use crate::error::{invalid, Error, Result};
use crate::identify::{SCALE_COLUMN, SHIFT_COLUMN};
use crate::inference::density::as_base;
use crate::samplers::strategy::StrategyConfig;

pub const MIN_DRAWS: usize = 100;

/// Residual variance (on the correlation scale) below which a column counts as
/// a linear combination of the ones already kept.
const COLLINEAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateEss {
    pub ess: f64,
    /// Zero-variance chain; `ess` is then reported as `n`.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateEss {
    pub mess: f64,
    pub batch_size: usize,
    /// Indices of the columns that entered the determinant.
    pub kept: Vec<usize>,
    pub constant: Vec<usize>,
    pub collinear: Vec<usize>,
}

fn batch_size_for(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("chain contains non-finite values".into()));
    }
    Ok(())
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// Batch means of the first `a * b` values.
fn batch_means(x: &[f64], b: usize) -> Vec<f64> {
    let a = x.len() / b;
    (0..a).map(|k| x[k * b..(k + 1) * b].iter().sum::<f64>() / b as f64).collect()
}

fn bm_variance(x: &[f64], b: usize) -> f64 {
    let means = batch_means(x, b);
    b as f64 * sample_variance(&means)
}

pub fn univariate_ess(chain: &[f64]) -> Result<UnivariateEss> {
    let n = chain.len();
    if n < MIN_DRAWS {
        return Err(invalid(format!("need at least {MIN_DRAWS} draws, got {n}")));
    }
    check_finite(chain)?;
    let var = sample_variance(chain);
    let scale = chain.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if var <= (scale * 1e-14).powi(2) {
        return Ok(UnivariateEss { ess: n as f64, constant: true });
    }
    let sigma2 = bm_variance(chain, batch_size_for(n));
    if !(sigma2 > 0.0) {
        return Ok(UnivariateEss { ess: n as f64, constant: true });
    }
    Ok(UnivariateEss {
        ess: n as f64 * var / sigma2,
        constant: false,
    })
}

/// Greedy pivot-free Cholesky on a correlation matrix: columns whose residual
/// after projecting on the kept ones is below the tolerance are dropped.
fn independent_columns(corr: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let p = corr.nrows();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    // Rows of L for the kept columns, stored densely.
    let mut l: Vec<Vec<f64>> = Vec::new();
    for j in 0..p {
        let mut z = Vec::with_capacity(kept.len());
        for (r, &k) in kept.iter().enumerate() {
            let dot: f64 = (0..r).map(|c| l[r][c] * z[c]).sum();
            z.push((corr[(k, j)] - dot) / l[r][r]);
        }
        let d = corr[(j, j)] - z.iter().map(|v| v * v).sum::<f64>();
        if d < COLLINEAR_TOL {
            dropped.push(j);
        } else {
            z.push(d.sqrt());
            l.push(z);
            kept.push(j);
        }
    }
    (kept, dropped)
}

fn log_det_spd(m: DMatrix<f64>) -> Option<f64> {
    let ch = m.cholesky()?;
    let l = ch.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// `draws[t][k]`: draw `t` of column `k`.
pub fn multivariate_ess(draws: &[Vec<f64>]) -> Result<MultivariateEss> {
    let n = draws.len();
    if n < MIN_DRAWS {
        return Err(invalid(format!("need at least {MIN_DRAWS} draws, got {n}")));
    }
    let p_all = draws[0].len();
    if p_all == 0 {
        return Err(invalid("no columns selected"));
    }
    if draws.iter().any(|d| d.len() != p_all) {
        return Err(Error::Dimension("draws differ in length".into()));
    }
    for d in draws {
        check_finite(d)?;
    }
    let cols: Vec<Vec<f64>> = (0..p_all).map(|k| draws.iter().map(|d| d[k]).collect()).collect();

    let mut constant = Vec::new();
    let mut live = Vec::new();
    let mut sds = Vec::new();
    for (k, c) in cols.iter().enumerate() {
        let v = sample_variance(c);
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        if v <= (scale * 1e-14).powi(2) {
            constant.push(k);
        } else {
            live.push(k);
            sds.push(v.sqrt());
        }
    }
    if live.is_empty() {
        return Err(Error::Numerical("every selected column is constant".into()));
    }

    let z: Vec<Vec<f64>> = live
        .iter()
        .zip(&sds)
        .map(|(&k, sd)| {
            let m = cols[k].iter().sum::<f64>() / n as f64;
            cols[k].iter().map(|x| (x - m) / sd).collect()
        })
        .collect();
    let corr = cross(&z, n, 1.0 / (n as f64 - 1.0));
    let (kept_local, dropped_local) = independent_columns(&corr);
    let p = kept_local.len();

    let mut b = batch_size_for(n);
    if n / b <= p {
        b = n / (2 * p);
        if b == 0 {
            return Err(invalid(format!(
                "{n} draws cannot support a batch-means covariance for {p} columns"
            )));
        }
    }
    let zk: Vec<&Vec<f64>> = kept_local.iter().map(|&k| &z[k]).collect();
    let means: Vec<Vec<f64>> = zk
        .iter()
        .map(|c| {
            let m = batch_means(c, b);
            let mu = m.iter().sum::<f64>() / m.len() as f64;
            m.into_iter().map(|v| v - mu).collect()
        })
        .collect();
    let a = means[0].len();
    let sigma = cross(&means, a, b as f64 / (a as f64 - 1.0));
    let lambda = DMatrix::from_fn(p, p, |r, c| corr[(kept_local[r], kept_local[c])]);

    let ld_lambda = log_det_spd(lambda)
        .ok_or_else(|| Error::Numerical("sample covariance is not positive definite".into()))?;
    let ld_sigma = log_det_spd(sigma)
        .ok_or_else(|| Error::Numerical("batch-means covariance is not positive definite".into()))?;
    let mess = n as f64 * ((ld_lambda - ld_sigma) / p as f64).exp();

    Ok(MultivariateEss {
        mess,
        batch_size: b,
        kept: kept_local.iter().map(|&k| live[k]).collect(),
        constant,
        collinear: dropped_local.iter().map(|&k| live[k]).collect(),
    })
}

/// `factor * X^T X` for columns `x[k]` of length `n`.
fn cross<C: AsRef<[f64]>>(x: &[C], n: usize, factor: f64) -> DMatrix<f64> {
    let p = x.len();
    let mut m = DMatrix::zeros(p, p);
    for r in 0..p {
        let xr = x[r].as_ref();
        for c in 0..=r {
            let xc = x[c].as_ref();
            let s: f64 = (0..n).map(|t| xr[t] * xc[t]).sum();
            m[(r, c)] = s * factor;
            m[(c, r)] = s * factor;
        }
    }
    m
}

/// Which archive columns enter the efficiency computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterSelection {
    /// Item parameters and abilities on the base scale.
    Common,
    Items,
    Columns(Vec<String>),
}

impl ParameterSelection {
    fn names(&self, archive: &SampleArchive) -> Vec<String> {
        let m = archive.meta.n_items;
        let n = archive.meta.n_individuals;
        let mut items = Vec::new();
        for group in ["lambda", "beta", "upsilon"] {
            if group == "upsilon" && !archive.kind().has_guessing() {
                continue;
            }
            items.extend((0..m).map(|i| indexed(group, i)));
        }
        match self {
            ParameterSelection::Items => items,
            ParameterSelection::Common => {
                items.extend((0..n).map(|j| indexed("eta", j)));
                items
            }
            ParameterSelection::Columns(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEss {
    pub name: String,
    pub ess: f64,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub strategy: String,
    pub config: StrategyConfig,
    pub n_draws: usize,
    pub n_parameters: usize,
    pub batch_size: usize,
    pub mess: f64,
    pub ess: Vec<ParameterEss>,
    pub dropped_constant: Vec<String>,
    pub dropped_collinear: Vec<String>,
    pub sampling_seconds: f64,
    pub total_seconds: f64,
    pub mess_per_sampling_second: f64,
    pub mess_per_total_second: f64,
}

pub fn efficiency_report(archive: &SampleArchive, selection: &ParameterSelection) -> Result<EfficiencyReport> {
    let timing = archive.meta.timing;
    if !(timing.sampling_seconds > 0.0 && timing.total_seconds > 0.0) {
        return Err(invalid("archive carries no sampling/total timings"));
    }
    let base = as_base(archive)?;
    let names = selection.names(&base);
    if names.iter().any(|c| c == SCALE_COLUMN || c == SHIFT_COLUMN) {
        return Err(invalid("transform records are not parameters"));
    }
    let idx = names
        .iter()
        .map(|c| {
            base.column_index(c)
                .ok_or_else(|| Error::Dimension(format!("archive has no column `{c}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let draws: Vec<Vec<f64>> = (0..base.n_draws())
        .map(|t| {
            let row = base.draw(t);
            idx.iter().map(|&k| row[k]).collect()
        })
        .collect();
    let m = multivariate_ess(&draws)?;
    let ess = idx
        .iter()
        .zip(&names)
        .map(|(&k, name)| {
            let u = univariate_ess(&base.column_at(k))?;
            Ok(ParameterEss {
                name: name.clone(),
                ess: u.ess,
                constant: u.constant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyReport {
        strategy: archive.meta.strategy.label(),
        config: archive.meta.strategy,
        n_draws: base.n_draws(),
        n_parameters: m.kept.len(),
        batch_size: m.batch_size,
        mess: m.mess,
        ess,
        dropped_constant: m.constant.iter().map(|&k| names[k].clone()).collect(),
        dropped_collinear: m.collinear.iter().map(|&k| names[k].clone()).collect(),
        sampling_seconds: timing.sampling_seconds,
        total_seconds: timing.total_seconds,
        mess_per_sampling_second: m.mess / timing.sampling_seconds,
        mess_per_total_second: m.mess / timing.total_seconds,
    })
}

/// One row per report, for bar charts of efficiency by strategy.
pub fn write_csv<W: Write>(reports: &[EfficiencyReport], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "strategy",
        "n_draws",
        "n_parameters",
        "mess",
        "sampling_seconds",
        "total_seconds",
        "mess_per_sampling_second",
        "mess_per_total_second",
    ])?;
    for r in reports {
        w.write_record(&[
            r.strategy.clone(),
            r.n_draws.to_string(),
            r.n_parameters.to_string(),
            format!("{}", r.mess),
            format!("{}", r.sampling_seconds),
            format!("{}", r.total_seconds),
            format!("{}", r.mess_per_sampling_second),
            format!("{}", r.mess_per_total_second),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<efficiency>", e))?;
    Ok(())
}
