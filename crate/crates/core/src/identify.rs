//! Identifiability: sum-to-zero centring of auxiliary item parameters and the
//! per-draw map from unconstrained draws to the base parameterization
//! (`sum log lambda = 0`, `sum beta = 0`).
//!
//! Every map has the form `eta* = (eta - shift) / scale` on the ability axis,
//! recorded as a [`TransformRecord`] so densities and DP atoms can be carried
//! along later.

use serde::{Deserialize, Serialize};

use crate::archive::{indexed, ParameterizationState, SampleArchive};
use crate::error::{invalid, Error, Result};
use crate::samplers::crp::Atom;
use crate::samplers::strategy::Parameterization;

pub const SCALE_COLUMN: &str = "transform_scale";
pub const SHIFT_COLUMN: &str = "transform_shift";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub scale: f64,
    pub shift: f64,
}

impl Default for TransformRecord {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl TransformRecord {
    pub const IDENTITY: TransformRecord = TransformRecord { scale: 1.0, shift: 0.0 };

    #[inline]
    pub fn ability(&self, eta: f64) -> f64 {
        (eta - self.shift) / self.scale
    }

    /// Maps a normal component on the sampled axis to the base axis.
    #[inline]
    pub fn atom(&self, a: Atom) -> Atom {
        Atom::new(self.ability(a.mean), a.variance / (self.scale * self.scale))
    }

    /// `self` applied first, then `next`.
    pub fn then(&self, next: &TransformRecord) -> TransformRecord {
        TransformRecord {
            scale: self.scale * next.scale,
            shift: self.shift + self.scale * next.shift,
        }
    }
}

/// A draw in the base IRT parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDraw {
    pub discrimination: Vec<f64>,
    pub difficulty: Vec<f64>,
    pub abilities: Vec<f64>,
}

fn check_slopes(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(invalid("need at least one item"));
    }
    if let Some(i) = lambda.iter().position(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(invalid(format!("discrimination[{}] = {} must be positive", i + 1, lambda[i])));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Centres auxiliary parameters: log-slopes and locations minus their means.
pub fn apply_item_constraints(aux_discrimination: &[f64], aux_location: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_slopes(aux_discrimination)?;
    if aux_discrimination.len() != aux_location.len() {
        return Err(Error::Dimension("slope and location lengths differ".into()));
    }
    let logs: Vec<f64> = aux_discrimination.iter().map(|l| l.ln()).collect();
    let ml = mean(&logs);
    let mb = mean(aux_location);
    Ok((
        logs.iter().map(|l| (l - ml).exp()).collect(),
        aux_location.iter().map(|b| b - mb).collect(),
    ))
}

/// IRT draw to base: `lambda* = s lambda`, `beta* = (beta - b) / s`,
/// `eta* = (eta - b) / s` with `s = exp(-mean log lambda)` so that the
/// product of the new slopes is one, and `b = mean beta`.
pub fn postprocess_irt(lambda: &[f64], beta: &[f64], eta: &[f64]) -> Result<(BaseDraw, TransformRecord)> {
    check_slopes(lambda)?;
    if lambda.len() != beta.len() {
        return Err(Error::Dimension("discrimination and difficulty lengths differ".into()));
    }
    let s = (-mean(&lambda.iter().map(|l| l.ln()).collect::<Vec<_>>())).exp();
    let b = mean(beta);
    let rec = TransformRecord { scale: s, shift: b };
    Ok((
        BaseDraw {
            discrimination: lambda.iter().map(|l| s * l).collect(),
            difficulty: beta.iter().map(|x| (x - b) / s).collect(),
            abilities: eta.iter().map(|&e| rec.ability(e)).collect(),
        },
        rec,
    ))
}

/// Slope-intercept draw to base IRT form.
///
/// `s = exp(-mean log lambda)` and `c = sum gamma / sum lambda` give
/// `lambda~ = s lambda`, `gamma~ = gamma - lambda c`, `eta~ = (eta + c) / s`;
/// then `beta~ = -gamma~ / lambda~` is centred by its mean `m`, and the
/// abilities move with it.
pub fn postprocess_si(lambda: &[f64], gamma: &[f64], eta: &[f64]) -> Result<(BaseDraw, TransformRecord)> {
    check_slopes(lambda)?;
    if lambda.len() != gamma.len() {
        return Err(Error::Dimension("slope and intercept lengths differ".into()));
    }
    let s = (-mean(&lambda.iter().map(|l| l.ln()).collect::<Vec<_>>())).exp();
    let c = gamma.iter().sum::<f64>() / lambda.iter().sum::<f64>();
    let lt: Vec<f64> = lambda.iter().map(|l| s * l).collect();
    let bt: Vec<f64> = lambda
        .iter()
        .zip(gamma)
        .zip(&lt)
        .map(|((l, g), ltil)| -(g - l * c) / ltil)
        .collect();
    let m = mean(&bt);
    let rec = TransformRecord {
        scale: s,
        shift: s * m - c,
    };
    Ok((
        BaseDraw {
            discrimination: lt,
            difficulty: bt.iter().map(|b| b - m).collect(),
            abilities: eta.iter().map(|&e| rec.ability(e)).collect(),
        },
        rec,
    ))
}

/// Carries a density tabulated on the sampled axis over to the base axis:
/// `p*(eta*) = p(scale eta* + shift) scale`. Returns the mapped grid and values.
pub fn rescale_density(grid: &[f64], density: &[f64], record: &TransformRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(record.scale > 0.0) {
        return Err(invalid(format!("scale {} must be positive", record.scale)));
    }
    if grid.len() != density.len() {
        return Err(Error::Dimension("grid and density lengths differ".into()));
    }
    if density.iter().any(|&d| d < 0.0) {
        return Err(invalid("density values must be nonnegative"));
    }
    Ok((
        grid.iter().map(|&x| record.ability(x)).collect(),
        density.iter().map(|d| d * record.scale).collect(),
    ))
}

/// Maps every draw of an archive to the base parameterization.
///
/// Item columns become `lambda[i]`, `beta[i]`; abilities, ability-model
/// parameters and DP atoms are transformed with each draw's record, which is
/// appended as `transform_scale` / `transform_shift`. Re-processing a base
/// archive composes the records.
pub fn postprocess_archive(archive: &SampleArchive) -> Result<SampleArchive> {
    let m = archive.meta.n_items;
    let n = archive.meta.n_individuals;
    let si = archive.meta.parameterization == ParameterizationState::Sampled
        && archive.meta.strategy.parameterization == Parameterization::SlopeIntercept;
    let loc_name = archive.location_name();
    let lam0 = archive.block("lambda", m)?;
    let loc0 = archive.block(loc_name, m)?;
    let eta0 = archive.block("eta", n)?;
    let prev_scale = archive.column_index(SCALE_COLUMN);
    let prev_shift = archive.column_index(SHIFT_COLUMN);

    let mut columns: Vec<String> = archive
        .columns()
        .iter()
        .map(|c| {
            if si && c.starts_with("gamma[") {
                c.replacen("gamma", "beta", 1)
            } else {
                c.clone()
            }
        })
        .collect();
    if prev_scale.is_none() {
        columns.push(SCALE_COLUMN.into());
        columns.push(SHIFT_COLUMN.into());
    }
    let scale_idx = prev_scale.unwrap_or(columns.len() - 2);
    let shift_idx = prev_shift.unwrap_or(columns.len() - 1);

    let mut meta = archive.meta.clone();
    meta.parameterization = ParameterizationState::Base;
    let mut out = SampleArchive::new(meta, columns)?;
    let idx = |name: &str| archive.column_index(name);
    let (mu_i, s2_i, nmu_i, ns2_i) = (idx("mu_eta"), idx("sigma2_eta"), idx("new_mu"), idx("new_sigma2"));

    let mut records = Vec::with_capacity(archive.n_draws());
    let mut row = Vec::new();
    for t in 0..archive.n_draws() {
        let src = archive.draw(t);
        let lam = &src[lam0..lam0 + m];
        let loc = &src[loc0..loc0 + m];
        let eta = &src[eta0..eta0 + n];
        let (base, rec) = if si {
            postprocess_si(lam, loc, eta)?
        } else {
            postprocess_irt(lam, loc, eta)?
        };
        row.clear();
        row.extend_from_slice(src);
        if prev_scale.is_none() {
            row.extend([1.0, 0.0]);
        }
        row[lam0..lam0 + m].copy_from_slice(&base.discrimination);
        row[loc0..loc0 + m].copy_from_slice(&base.difficulty);
        row[eta0..eta0 + n].copy_from_slice(&base.abilities);
        for (mi, vi) in [(mu_i, s2_i), (nmu_i, ns2_i)] {
            if let (Some(mi), Some(vi)) = (mi, vi) {
                let a = rec.atom(Atom::new(src[mi], src[vi]));
                row[mi] = a.mean;
                row[vi] = a.variance;
            }
        }
        let before = TransformRecord {
            scale: row[scale_idx],
            shift: row[shift_idx],
        };
        let total = before.then(&rec);
        row[scale_idx] = total.scale;
        row[shift_idx] = total.shift;
        out.push_draw(&row)?;
        records.push(rec);
    }
    if let Some(c) = archive.clustering() {
        let mut c = c.clone();
        for (t, rec) in records.iter().enumerate() {
            for a in c.atoms_mut(t) {
                *a = rec.atom(*a);
            }
        }
        out = out.with_clustering(c);
    }
    Ok(out)
}

/// Per-draw records stored in a base archive.
pub fn transform_records(archive: &SampleArchive) -> Result<Vec<TransformRecord>> {
    let s = archive.column(SCALE_COLUMN)?;
    let b = archive.column(SHIFT_COLUMN)?;
    Ok(s.into_iter().zip(b).map(|(scale, shift)| TransformRecord { scale, shift }).collect())
}

/// Names of the base-parameterization item columns.
pub fn item_columns(n_items: usize, with_guessing: bool) -> Vec<String> {
    let mut v: Vec<String> = (0..n_items).map(|i| indexed("lambda", i)).collect();
    v.extend((0..n_items).map(|i| indexed("beta", i)));
    if with_guessing {
        v.extend((0..n_items).map(|i| indexed("upsilon", i)));
    }
    v
}
