//! Per-individual percentiles of abilities within the estimated population
//! distribution, p_j = G(eta_j), summarized across draws.

use serde::{Deserialize, Serialize};

use crate::archive::SampleArchive;
use crate::dist::quantile_sorted;
use crate::error::{invalid, Error, Result};
use crate::inference::density::as_base;
use crate::inference::measure::{measures_from_archive, MeasureSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub individual: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `abilities[t]` holds all abilities of draw `t`; `measures[t]` the matching measure.
pub fn percentile_estimates(abilities: &[&[f64]], measures: &[MeasureSample]) -> Result<Vec<PercentileSummary>> {
    if abilities.len() != measures.len() {
        return Err(Error::Dimension(format!(
            "{} ability draws but {} measure draws",
            abilities.len(),
            measures.len()
        )));
    }
    let t = abilities.len();
    if t == 0 {
        return Err(invalid("no draws"));
    }
    let n = abilities[0].len();
    if abilities.iter().any(|a| a.len() != n) {
        return Err(Error::Dimension("ability draws differ in length".into()));
    }
    let mut per_person = vec![Vec::with_capacity(t); n];
    for (eta, m) in abilities.iter().zip(measures) {
        for (j, &x) in eta.iter().enumerate() {
            per_person[j].push(m.cdf(x));
        }
    }
    Ok(per_person
        .into_iter()
        .enumerate()
        .map(|(j, mut p)| {
            let mean = p.iter().sum::<f64>() / t as f64;
            p.sort_by(f64::total_cmp);
            PercentileSummary {
                individual: j + 1,
                mean,
                lower: quantile_sorted(&p, 0.025),
                upper: quantile_sorted(&p, 0.975),
            }
        })
        .collect())
}

/// Percentiles on the base scale for any fitted archive.
pub fn percentiles_from_archive(archive: &SampleArchive, eps: f64, seed: u64) -> Result<Vec<PercentileSummary>> {
    let base = as_base(archive)?;
    let measures = measures_from_archive(&base, eps, seed)?;
    let etas = (0..base.n_draws())
        .map(|t| base.abilities(t))
        .collect::<Result<Vec<_>>>()?;
    percentile_estimates(&etas, &measures)
}

pub fn write_csv<W: std::io::Write>(rows: &[PercentileSummary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["individual", "mean", "lower", "upper"])?;
    for r in rows {
        w.write_record(&[
            r.individual.to_string(),
            format!("{}", r.mean),
            format!("{}", r.lower),
            format!("{}", r.upper),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<percentiles>", e))?;
    Ok(())
}
