//! Truncated draws of the DP random measure given a clustering.
//!
//! Given labels with occupancy `n_k`, atoms and concentration `alpha`, the
//! posterior measure is DP(alpha + N, (alpha G0 + sum n_k delta_k) / (alpha + N)).
//! Sticks are Beta(1, alpha + N); each stick lands on an occupied atom with
//! probability `n_k / (alpha + N)` or on a fresh G0 atom otherwise. Breaking stops
//! once the unassigned mass drops below `eps`. Sticks that land on the same
//! occupied atom are merged.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::archive::SampleArchive;
use crate::dist::{normal_cdf, normal_pdf};
use crate::error::{invalid, Error, Result};
use crate::identify::{transform_records, TransformRecord};
use crate::priors::NormalInvGamma;
use crate::rng::{substream, Stream};
use crate::samplers::crp::Atom;

pub const DEFAULT_TRUNCATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSample {
    pub weights: Vec<f64>,
    pub atoms: Vec<Atom>,
    /// Number of sticks broken.
    pub truncation_level: usize,
}

impl MeasureSample {
    pub fn single(atom: Atom) -> Self {
        Self {
            weights: vec![1.0],
            atoms: vec![atom],
            truncation_level: 1,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.atoms)
            .map(|(w, a)| w * normal_pdf(x, a.mean, a.variance))
            .sum()
    }

    /// Mixture cdf at `x` (not renormalized by the truncated mass).
    pub fn cdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.atoms)
            .map(|(w, a)| w * normal_cdf(x, a.mean, a.variance))
            .sum()
    }
}

/// One truncated measure draw. `fresh_map` is applied to atoms drawn from G0
/// (identity on the sampled scale, the draw's record on the base scale).
pub fn sample_dp_measure_mapped<R: Rng + ?Sized>(
    counts: &[usize],
    atoms: &[Atom],
    alpha: f64,
    base_measure: &NormalInvGamma,
    eps: f64,
    fresh_map: &TransformRecord,
    rng: &mut R,
) -> Result<MeasureSample> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("truncation tolerance {eps} must lie in (0, 1)")));
    }
    if counts.len() != atoms.len() {
        return Err(Error::State("occupancy counts and atoms disagree".into()));
    }
    if !(alpha > 0.0) {
        return Err(invalid("concentration must be positive"));
    }
    let n: usize = counts.iter().sum();
    let mass = alpha + n as f64;
    let mut weights = vec![0.0; atoms.len()];
    let mut out_atoms = atoms.to_vec();
    let mut remaining = 1.0;
    let mut level = 0;
    while remaining >= eps {
        let u: f64 = rng.gen();
        let v = 1.0 - u.powf(1.0 / mass);
        let w = v * remaining;
        remaining -= w;
        level += 1;
        let pick = rng.gen::<f64>() * mass;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &c) in counts.iter().enumerate() {
            acc += c as f64;
            if pick < acc {
                chosen = Some(k);
                break;
            }
        }
        match chosen {
            Some(k) => weights[k] += w,
            None => {
                out_atoms.push(fresh_map.atom(Atom::from_base(base_measure, rng)));
                weights.push(w);
            }
        }
    }
    let (weights, atoms): (Vec<f64>, Vec<Atom>) = weights
        .into_iter()
        .zip(out_atoms)
        .filter(|(w, _)| *w > 0.0)
        .unzip();
    Ok(MeasureSample {
        weights,
        atoms,
        truncation_level: level,
    })
}

pub fn sample_dp_measure<R: Rng + ?Sized>(
    counts: &[usize],
    atoms: &[Atom],
    alpha: f64,
    base_measure: &NormalInvGamma,
    eps: f64,
    rng: &mut R,
) -> Result<MeasureSample> {
    sample_dp_measure_mapped(counts, atoms, alpha, base_measure, eps, &TransformRecord::IDENTITY, rng)
}

/// One measure per archived draw: DP measures for DP fits (seeded from the
/// `Measure` sub-stream), single normal components for parametric fits.
pub fn measures_from_archive(archive: &SampleArchive, eps: f64, seed: u64) -> Result<Vec<MeasureSample>> {
    match archive.clustering() {
        None => {
            let mu = archive.column("mu_eta")?;
            let s2 = archive.column("sigma2_eta")?;
            Ok(mu.into_iter().zip(s2).map(|(m, v)| MeasureSample::single(Atom::new(m, v))).collect())
        }
        Some(c) => {
            let alpha = archive.column("alpha")?;
            let records = if archive.has_column(crate::identify::SCALE_COLUMN) {
                transform_records(archive)?
            } else {
                vec![TransformRecord::IDENTITY; archive.n_draws()]
            };
            let base = archive.meta.priors.abilities.base_measure;
            let mut rng = substream(seed, Stream::Measure);
            (0..archive.n_draws())
                .map(|t| sample_dp_measure_mapped(&c.counts(t), c.atoms(t), alpha[t], &base, eps, &records[t], &mut rng))
                .collect()
        }
    }
}
