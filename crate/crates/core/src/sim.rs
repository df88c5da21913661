//! Synthetic scenarios: item truths, ability distributions and responses.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dist::{normal_pdf, sample_beta, std_normal_cdf};
use crate::error::{invalid, Error, Result};
use crate::model::{expit, ItemParameters, ModelKind, ResponseMatrix};
use crate::rng::{indexed_substream, substream, Stream};

/// Guessing values for synthetic 3PL data are drawn from Beta(2, 8).
pub const GUESSING_TRUTH: (f64, f64) = (2.0, 8.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Unimodal,
    Bimodal,
    Multimodal,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Unimodal => "unimodal",
            Scenario::Bimodal => "bimodal",
            Scenario::Multimodal => "multimodal",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unimodal" => Ok(Scenario::Unimodal),
            "bimodal" => Ok(Scenario::Bimodal),
            "multimodal" => Ok(Scenario::Multimodal),
            other => Err(invalid(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Normal { mean: f64, sd: f64 },
    /// Azzalini skew-normal with location `xi`, scale `omega`, shape `zeta`.
    SkewNormal { xi: f64, omega: f64, zeta: f64 },
}

impl Component {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Component::Normal { mean, sd } => normal_pdf(x, mean, sd * sd),
            Component::SkewNormal { xi, omega, zeta } => skew_normal_pdf(x, xi, omega, zeta),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Component::Normal { mean, .. } => mean,
            Component::SkewNormal { xi, omega, zeta } => {
                let delta = zeta / (1.0 + zeta * zeta).sqrt();
                xi + omega * delta * (2.0 / std::f64::consts::PI).sqrt()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Component::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Component::SkewNormal { xi, omega, zeta } => sample_skew_normal(rng, xi, omega, zeta),
        }
    }
}

pub fn skew_normal_pdf(x: f64, xi: f64, omega: f64, zeta: f64) -> f64 {
    let z = (x - xi) / omega;
    2.0 / omega * normal_pdf(z, 0.0, 1.0) * std_normal_cdf(zeta * z)
}

/// `z = delta |u0| + sqrt(1 - delta^2) u1` with `delta = zeta / sqrt(1 + zeta^2)`.
pub fn sample_skew_normal<R: Rng + ?Sized>(rng: &mut R, xi: f64, omega: f64, zeta: f64) -> f64 {
    let delta = zeta / (1.0 + zeta * zeta).sqrt();
    let u0: f64 = StandardNormal.sample(rng);
    let u1: f64 = StandardNormal.sample(rng);
    let z = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
    xi + omega * z
}

impl Scenario {
    pub fn components(&self) -> Vec<(f64, Component)> {
        use Component::*;
        match self {
            Scenario::Unimodal => vec![(1.0, Normal { mean: 0.0, sd: 1.25 })],
            Scenario::Bimodal => vec![
                (0.5, Normal { mean: -2.0, sd: 1.25 }),
                (0.5, Normal { mean: 2.0, sd: 1.25 }),
            ],
            Scenario::Multimodal => vec![
                (0.2, Normal { mean: -2.0, sd: 1.0 }),
                (0.4, Normal { mean: 0.0, sd: 0.5 }),
                (0.4, SkewNormal { xi: 3.0, omega: 1.0, zeta: -3.0 }),
            ],
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components().iter().map(|(w, c)| w * c.pdf(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components().iter().map(|(w, c)| w * c.mean()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let comps = self.components();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (w, c) in &comps {
            acc += w;
            if u < acc {
                return c.sample(rng);
            }
        }
        comps[comps.len() - 1].1.sample(rng)
    }
}

/// Discriminations from U(0.5, 1.5) with their logs centred; difficulties
/// `-3 + 6 i / (I + 1)`.
pub fn simulate_items(n_items: usize, seed: u64) -> Result<ItemParameters> {
    if n_items < 2 {
        return Err(invalid("need at least two items"));
    }
    let mut rng = substream(seed, Stream::Items);
    let raw: Vec<f64> = Uniform::new(0.5, 1.5).sample_iter(&mut rng).take(n_items).collect();
    let ml = raw.iter().map(|l| l.ln()).sum::<f64>() / n_items as f64;
    let discrimination = raw.iter().map(|l| (l.ln() - ml).exp()).collect();
    let difficulty = (1..=n_items)
        .map(|i| -3.0 + 6.0 * i as f64 / (n_items as f64 + 1.0))
        .collect();
    ItemParameters::new(discrimination, difficulty)
}

/// Uncentred draws behind [`simulate_items`], for checking the generating range.
pub fn raw_discriminations(n_items: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, Stream::Items);
    Uniform::new(0.5, 1.5).sample_iter(&mut rng).take(n_items).collect()
}

pub fn simulate_guessing(n_items: usize, seed: u64) -> Vec<f64> {
    let mut rng = indexed_substream(seed, Stream::Items, 1);
    (0..n_items)
        .map(|_| sample_beta(&mut rng, GUESSING_TRUTH.0, GUESSING_TRUTH.1))
        .collect()
}

pub fn simulate_abilities(scenario: Scenario, n_individuals: usize, seed: u64) -> Result<Vec<f64>> {
    if n_individuals < 2 {
        return Err(invalid("need at least two individuals"));
    }
    let mut rng = substream(seed, Stream::Abilities);
    Ok((0..n_individuals).map(|_| scenario.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    pub kind: ModelKind,
    pub items: ItemParameters,
    pub abilities: Vec<f64>,
}

impl GroundTruth {
    /// Items and abilities for one synthetic dataset. 1PL truths carry unit
    /// discriminations, 3PL truths add guessing values.
    pub fn simulate(scenario: Scenario, kind: ModelKind, n_individuals: usize, n_items: usize, seed: u64) -> Result<Self> {
        let mut items = simulate_items(n_items, seed)?;
        if !kind.has_discrimination() {
            items.discrimination = vec![1.0; n_items];
        }
        if kind.has_guessing() {
            items = items.with_guessing(simulate_guessing(n_items, seed))?;
        }
        Ok(Self {
            scenario,
            kind,
            items,
            abilities: simulate_abilities(scenario, n_individuals, seed)?,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        self.scenario.pdf(x)
    }

    /// True percentile of each individual under the scenario distribution.
    pub fn percentiles(&self) -> Vec<f64> {
        self.abilities.iter().map(|&e| scenario_cdf(self.scenario, e)).collect()
    }

    /// Long form `group,index,value` with 1-based indices.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["group", "index", "value"])?;
        let mut groups: Vec<(&str, &[f64])> = vec![
            ("lambda", &self.items.discrimination),
            ("beta", &self.items.difficulty),
        ];
        if let Some(g) = &self.items.guessing {
            groups.push(("upsilon", g));
        }
        groups.push(("eta", &self.abilities));
        for (name, values) in groups {
            for (i, v) in values.iter().enumerate() {
                w.write_record(&[name.to_string(), (i + 1).to_string(), format!("{v}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("<truth>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, scenario: Scenario, kind: ModelKind) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let (mut l, mut b, mut u, mut e) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |m: &str| Error::Parse {
                line: line + 2,
                column: 1,
                message: m.to_string(),
            };
            if rec.len() != 3 {
                return Err(bad("expected group,index,value"));
            }
            let idx: usize = rec[1].parse().map_err(|_| bad("bad index"))?;
            let v: f64 = rec[2].parse().map_err(|_| bad("bad value"))?;
            let target = match &rec[0] {
                "lambda" => &mut l,
                "beta" => &mut b,
                "upsilon" => &mut u,
                "eta" => &mut e,
                _ => return Err(bad("unknown group")),
            };
            if idx != target.len() + 1 {
                return Err(bad("indices must run 1, 2, ... within a group"));
            }
            target.push(v);
        }
        let mut items = ItemParameters::new(l, b)?;
        if !u.is_empty() {
            items = items.with_guessing(u)?;
        }
        Ok(Self {
            scenario,
            kind,
            items,
            abilities: e,
        })
    }
}

pub fn scenario_cdf(scenario: Scenario, x: f64) -> f64 {
    scenario
        .components()
        .iter()
        .map(|(w, c)| {
            w * match *c {
                Component::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
                Component::SkewNormal { xi, omega, zeta } => skew_normal_cdf(x, xi, omega, zeta),
            }
        })
        .sum()
}

/// Simpson's rule from far in the left tail; the skew-normal cdf (Owen's T)
/// has no elementary form.
fn skew_normal_cdf(x: f64, xi: f64, omega: f64, zeta: f64) -> f64 {
    let lo = xi - 12.0 * omega;
    if x <= lo {
        return 0.0;
    }
    let k = 2000;
    let h = (x - lo) / k as f64;
    let f = |t: f64| skew_normal_pdf(t, xi, omega, zeta);
    let mut s = f(lo) + f(x);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    (s * h / 3.0).min(1.0)
}

/// Independent Bernoulli responses, no missing cells.
pub fn simulate_responses(truth: &GroundTruth, kind: ModelKind, seed: u64) -> Result<ResponseMatrix> {
    truth.items.validate()?;
    if kind.has_guessing() && truth.items.guessing.is_none() {
        return Err(invalid("3PL responses need guessing values"));
    }
    let mut rng = substream(seed, Stream::Responses);
    let m = truth.items.len();
    let mut cells = Vec::with_capacity(truth.abilities.len() * m);
    for &eta in &truth.abilities {
        for i in 0..m {
            let l = if kind.has_discrimination() { truth.items.discrimination[i] } else { 1.0 };
            let mut p = expit(l * (eta - truth.items.difficulty[i]));
            if let (true, Some(g)) = (kind.has_guessing(), &truth.items.guessing) {
                p = g[i] + (1.0 - g[i]) * p;
            }
            let u: f64 = rng.gen();
            cells.push(Some(u8::from(u < p)));
        }
    }
    ResponseMatrix::new(truth.abilities.len(), m, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean, variance};
    use proptest::prelude::*;

    #[test]
    fn three_items_are_symmetric() {
        let it = simulate_items(3, 1).unwrap();
        assert_eq!(it.difficulty, vec![-1.5, 0.0, 1.5]);
        let it = simulate_items(15, 1).unwrap();
        assert!(it.difficulty.iter().sum::<f64>().abs() < 1e-12);
        assert!(it.difficulty.iter().all(|b| b.abs() < 3.0));
        assert!(simulate_items(1, 1).is_err());
    }

    proptest! {
        #[test]
        fn log_discriminations_are_centred(seed in any::<u64>(), n in 2usize..40) {
            let it = simulate_items(n, seed).unwrap();
            prop_assert!(it.discrimination.iter().map(|l| l.ln()).sum::<f64>().abs() < 1e-12);
            prop_assert!(raw_discriminations(n, seed).iter().all(|&l| l > 0.5 && l < 1.5));
        }
    }

    #[test]
    fn unimodal_moments() {
        let x = simulate_abilities(Scenario::Unimodal, 100_000, 3).unwrap();
        assert!(mean(&x).abs() < 0.02);
        assert!((variance(&x).sqrt() - 1.25).abs() < 0.02);
    }

    #[test]
    fn bimodal_mean_is_zero() {
        let x = simulate_abilities(Scenario::Bimodal, 100_000, 4).unwrap();
        assert!(mean(&x).abs() < 0.03);
    }

    #[test]
    fn multimodal_mean_matches_the_skew_normal_formula() {
        // 0.2 (-2) + 0.4 (3 - 3 / sqrt(10) sqrt(2 / pi)), 30-digit evaluation.
        let want = 0.497_224_097_357_580_8;
        assert!((Scenario::Multimodal.mean() - want).abs() < 1e-14);
        let x = simulate_abilities(Scenario::Multimodal, 100_000, 5).unwrap();
        let se = (variance(&x) / x.len() as f64).sqrt();
        assert!((mean(&x) - want).abs() < 3.0 * se);
    }

    #[test]
    fn skew_normal_sampler_matches_its_pdf() {
        let mut rng = substream(6, Stream::Abilities);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_skew_normal(&mut rng, 3.0, 1.0, -3.0)).collect();
        for (lo, hi) in [(0.0, 1.5), (1.5, 2.5), (2.5, 3.2)] {
            let freq = xs.iter().filter(|&&x| x >= lo && x < hi).count() as f64 / n as f64;
            let want = skew_normal_cdf(hi, 3.0, 1.0, -3.0) - skew_normal_cdf(lo, 3.0, 1.0, -3.0);
            let se = (want * (1.0 - want) / n as f64).sqrt();
            assert!((freq - want).abs() < 3.0 * se, "[{lo},{hi}) {freq} vs {want}");
        }
    }

    #[test]
    fn scenario_pdfs_integrate_to_one() {
        for s in [Scenario::Unimodal, Scenario::Bimodal, Scenario::Multimodal] {
            let grid = crate::inference::density::linspace(-12.0, 12.0, 4001);
            let v: Vec<f64> = grid.iter().map(|&x| s.pdf(x)).collect();
            assert!((crate::inference::density::trapezoid(&grid, &v) - 1.0).abs() < 1e-6);
            assert!((scenario_cdf(s, 12.0) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_probabilities_give_all_ones() {
        let truth = GroundTruth {
            scenario: Scenario::Unimodal,
            kind: ModelKind::TwoPL,
            items: ItemParameters::new(vec![1.0; 3], vec![-1e3; 3]).unwrap(),
            abilities: vec![0.0; 4],
        };
        let y = simulate_responses(&truth, ModelKind::TwoPL, 7).unwrap();
        assert!(y.cells().iter().all(|c| *c == Some(1)));
    }

    #[test]
    fn cell_frequencies_match_probabilities() {
        let truth = GroundTruth::simulate(Scenario::Unimodal, ModelKind::ThreePL, 3, 2, 8).unwrap();
        let reps = 10_000;
        let mut ones = [0usize; 6];
        for r in 0..reps {
            let y = simulate_responses(&truth, ModelKind::ThreePL, r).unwrap();
            for (k, c) in y.cells().iter().enumerate() {
                ones[k] += usize::from(*c == Some(1));
            }
        }
        for j in 0..3 {
            for i in 0..2 {
                let row = truth.items.row(i);
                let p = crate::model::success_probability(ModelKind::ThreePL, &row, truth.abilities[j]).unwrap();
                let f = ones[j * 2 + i] as f64 / reps as f64;
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                assert!((f - p).abs() < 3.0 * se, "cell ({j},{i}) {f} vs {p}");
            }
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        let t = GroundTruth::simulate(Scenario::Bimodal, ModelKind::TwoPL, 50, 6, 9).unwrap();
        assert_eq!(
            simulate_responses(&t, ModelKind::TwoPL, 9).unwrap(),
            simulate_responses(&t, ModelKind::TwoPL, 9).unwrap()
        );
    }

    #[test]
    fn truth_round_trips_through_csv() {
        let t = GroundTruth::simulate(Scenario::Multimodal, ModelKind::ThreePL, 7, 4, 10).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = GroundTruth::read_csv(&buf[..], t.scenario, t.kind).unwrap();
        assert_eq!(back, t);
    }
}
