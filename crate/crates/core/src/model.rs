//! Binary logistic IRT models: response data, item parameters in IRT and
//! slope-intercept form, and the 1PL/2PL/3PL likelihood.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Lower clamp on the success probability inside log terms.
pub const PROB_FLOOR: f64 = 1e-300;
/// Upper clamp on the success probability inside log terms.
pub const PROB_CEIL: f64 = 1.0 - 1e-16;

const LOG_PROB_FLOOR: f64 = -690.775_527_898_213_7; // ln(1e-300)
const LOG_COMPLEMENT_FLOOR: f64 = -36.841_361_487_904_734; // ln(1e-16)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "1PL", alias = "1pl", alias = "OnePL")]
    OnePL,
    #[serde(rename = "2PL", alias = "2pl", alias = "TwoPL")]
    TwoPL,
    #[serde(rename = "3PL", alias = "3pl", alias = "ThreePL")]
    ThreePL,
}

impl ModelKind {
    pub fn has_discrimination(self) -> bool {
        !matches!(self, ModelKind::OnePL)
    }

    pub fn has_guessing(self) -> bool {
        matches!(self, ModelKind::ThreePL)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::OnePL => "1PL",
            ModelKind::TwoPL => "2PL",
            ModelKind::ThreePL => "3PL",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1PL" | "ONEPL" | "RASCH" => Ok(ModelKind::OnePL),
            "2PL" | "TWOPL" => Ok(ModelKind::TwoPL),
            "3PL" | "THREEPL" => Ok(ModelKind::ThreePL),
            other => Err(invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

/// N x I binary responses with missing cells.
///
/// Cells are stored row-major (individual, item). Per-individual and per-item
/// lists of observed cells are built once at construction; the samplers only
/// ever walk those.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    n_individuals: usize,
    n_items: usize,
    item_names: Vec<String>,
    cells: Vec<Option<u8>>,
    by_individual: Vec<Vec<(u32, bool)>>,
    by_item: Vec<Vec<(u32, bool)>>,
    n_observed: usize,
}

impl ResponseMatrix {
    pub fn new(n_individuals: usize, n_items: usize, cells: Vec<Option<u8>>) -> Result<Self> {
        let names = (1..=n_items).map(|i| format!("item{i}")).collect();
        Self::with_item_names(n_individuals, n_items, cells, names)
    }

    pub fn with_item_names(
        n_individuals: usize,
        n_items: usize,
        cells: Vec<Option<u8>>,
        item_names: Vec<String>,
    ) -> Result<Self> {
        if n_individuals == 0 || n_items == 0 {
            return Err(Error::Dimension(
                "response matrix needs at least one individual and one item".into(),
            ));
        }
        if cells.len() != n_individuals * n_items {
            return Err(Error::Dimension(format!(
                "expected {} cells for {n_individuals} x {n_items}, got {}",
                n_individuals * n_items,
                cells.len()
            )));
        }
        if item_names.len() != n_items {
            return Err(Error::Dimension(format!(
                "expected {n_items} item names, got {}",
                item_names.len()
            )));
        }
        let mut by_individual = vec![Vec::new(); n_individuals];
        let mut by_item = vec![Vec::new(); n_items];
        let mut n_observed = 0;
        for j in 0..n_individuals {
            for i in 0..n_items {
                match cells[j * n_items + i] {
                    None => {}
                    Some(y @ (0 | 1)) => {
                        by_individual[j].push((i as u32, y == 1));
                        by_item[i].push((j as u32, y == 1));
                        n_observed += 1;
                    }
                    Some(other) => {
                        return Err(invalid(format!(
                            "response ({}, {}) is {other}; only 0, 1 or missing allowed",
                            j + 1,
                            i + 1
                        )))
                    }
                }
            }
        }
        if let Some(j) = by_individual.iter().position(Vec::is_empty) {
            return Err(invalid(format!("individual {} has no observed responses", j + 1)));
        }
        if let Some(i) = by_item.iter().position(Vec::is_empty) {
            return Err(invalid(format!("item {} has no observed responses", i + 1)));
        }
        Ok(Self {
            n_individuals,
            n_items,
            item_names,
            cells,
            by_individual,
            by_item,
            n_observed,
        })
    }

    /// Builds a fully observed matrix from rows of 0/1 values.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_items = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_items) {
            return Err(Error::Dimension("ragged response rows".into()));
        }
        let cells = rows.iter().flatten().map(|&y| Some(y)).collect();
        Self::new(rows.len(), n_items, cells)
    }

    pub fn n_individuals(&self) -> usize {
        self.n_individuals
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn get(&self, individual: usize, item: usize) -> Option<u8> {
        self.cells[individual * self.n_items + item]
    }

    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    /// Observed `(item, response)` pairs of one individual.
    pub fn individual_responses(&self, individual: usize) -> &[(u32, bool)] {
        &self.by_individual[individual]
    }

    /// Observed `(individual, response)` pairs of one item.
    pub fn item_responses(&self, item: usize) -> &[(u32, bool)] {
        &self.by_item[item]
    }

    /// Reads the `0/1/NA` CSV format: a header of item names, then one row per individual.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let item_names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let n_items = item_names.len();
        let mut cells = Vec::new();
        let mut n_individuals = 0;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != n_items {
                return Err(Error::Dimension(format!(
                    "row {} has {} fields, header has {n_items}",
                    row + 2,
                    record.len()
                )));
            }
            for (col, field) in record.iter().enumerate() {
                let cell = match field {
                    "0" => Some(0),
                    "1" => Some(1),
                    "NA" => None,
                    other => {
                        return Err(Error::Parse {
                            line: row + 2,
                            column: col + 1,
                            message: format!("unexpected token `{other}` (expected 0, 1 or NA)"),
                        })
                    }
                };
                cells.push(cell);
            }
            n_individuals += 1;
        }
        Self::with_item_names(n_individuals, n_items, cells, item_names)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.item_names)?;
        for row in self.cells.chunks(self.n_items) {
            wtr.write_record(row.iter().map(|c| match c {
                Some(0) => "0",
                Some(_) => "1",
                None => "NA",
            }))?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Copy with every row repeated twice (row j and row N + j agree).
    pub fn duplicated_rows(&self) -> Self {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&self.cells);
        Self::with_item_names(
            2 * self.n_individuals,
            self.n_items,
            cells,
            self.item_names.clone(),
        )
        .expect("duplicating a valid matrix stays valid")
    }
}

/// One item in IRT form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemRow {
    pub discrimination: f64,
    pub difficulty: f64,
    pub guessing: Option<f64>,
}

/// Item parameters in IRT form: logit = lambda (eta - beta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemParameters {
    pub discrimination: Vec<f64>,
    pub difficulty: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guessing: Option<Vec<f64>>,
}

/// Item parameters in slope-intercept form: logit = lambda eta + gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeInterceptParameters {
    pub slope: Vec<f64>,
    pub intercept: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guessing: Option<Vec<f64>>,
}

impl ItemParameters {
    pub fn new(discrimination: Vec<f64>, difficulty: Vec<f64>) -> Result<Self> {
        let items = Self {
            discrimination,
            difficulty,
            guessing: None,
        };
        items.validate()?;
        Ok(items)
    }

    pub fn with_guessing(mut self, guessing: Vec<f64>) -> Result<Self> {
        self.guessing = Some(guessing);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.difficulty.len()
    }

    pub fn is_empty(&self) -> bool {
        self.difficulty.is_empty()
    }

    pub fn row(&self, i: usize) -> ItemRow {
        ItemRow {
            discrimination: self.discrimination[i],
            difficulty: self.difficulty[i],
            guessing: self.guessing.as_ref().map(|g| g[i]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.discrimination.len() != self.difficulty.len() {
            return Err(Error::Dimension(format!(
                "{} discriminations vs {} difficulties",
                self.discrimination.len(),
                self.difficulty.len()
            )));
        }
        if let Some(g) = &self.guessing {
            if g.len() != self.difficulty.len() {
                return Err(Error::Dimension("guessing length differs from item count".into()));
            }
            if let Some(i) = g.iter().position(|&u| !(u > 0.0 && u < 1.0)) {
                return Err(invalid(format!("guessing[{}] = {} outside (0, 1)", i + 1, g[i])));
            }
        }
        if let Some(i) = self.discrimination.iter().position(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(invalid(format!(
                "discrimination[{}] = {} must be positive",
                i + 1,
                self.discrimination[i]
            )));
        }
        if let Some(i) = self.difficulty.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite(format!("difficulty[{}]", i + 1)));
        }
        Ok(())
    }

    pub fn to_slope_intercept(&self) -> Result<SlopeInterceptParameters> {
        self.validate()?;
        Ok(SlopeInterceptParameters {
            slope: self.discrimination.clone(),
            intercept: self
                .discrimination
                .iter()
                .zip(&self.difficulty)
                .map(|(l, b)| -l * b)
                .collect(),
            guessing: self.guessing.clone(),
        })
    }
}

impl SlopeInterceptParameters {
    pub fn len(&self) -> usize {
        self.intercept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intercept.is_empty()
    }
}

/// Maps slope-intercept items to IRT form via beta = -gamma / lambda.
pub fn si_to_irt(items: &SlopeInterceptParameters) -> Result<ItemParameters> {
    if items.slope.len() != items.intercept.len() {
        return Err(Error::Dimension("slope and intercept lengths differ".into()));
    }
    if let Some(i) = items.slope.iter().position(|&l| !(l > 0.0)) {
        return Err(invalid(format!("slope[{}] = {} must be positive", i + 1, items.slope[i])));
    }
    let out = ItemParameters {
        discrimination: items.slope.clone(),
        difficulty: items
            .slope
            .iter()
            .zip(&items.intercept)
            .map(|(l, g)| -g / l)
            .collect(),
        guessing: items.guessing.clone(),
    };
    out.validate()?;
    Ok(out)
}

pub fn irt_to_si(items: &ItemParameters) -> Result<SlopeInterceptParameters> {
    items.to_slope_intercept()
}

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(log pi, log(1 - pi))` for a logit `x` and optional lower asymptote, with the
/// probability clamped to `[PROB_FLOOR, PROB_CEIL]`.
#[inline]
pub fn log_prob_pair(x: f64, guessing: Option<f64>) -> (f64, f64) {
    let (lp, lq) = match guessing {
        None => (-softplus(-x), -softplus(x)),
        Some(u) => {
            let a = u.ln();
            let b = (-u).ln_1p() - softplus(-x);
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            (hi + (lo - hi).exp().ln_1p(), (-u).ln_1p() - softplus(x))
        }
    };
    (lp.max(LOG_PROB_FLOOR), lq.max(LOG_COMPLEMENT_FLOOR))
}

/// Bernoulli log-mass of one response given its logit.
#[inline]
pub fn log_bernoulli(y: bool, x: f64, guessing: Option<f64>) -> f64 {
    let (lp, lq) = log_prob_pair(x, guessing);
    if y {
        lp
    } else {
        lq
    }
}

/// Probability of a correct response, clamped away from 0 and 1.
pub fn success_probability(kind: ModelKind, item: &ItemRow, eta: f64) -> Result<f64> {
    let lambda = match kind {
        ModelKind::OnePL => 1.0,
        _ => item.discrimination,
    };
    if !(lambda > 0.0) {
        return Err(invalid(format!("discrimination {lambda} must be positive")));
    }
    let base = expit(lambda * (eta - item.difficulty));
    let p = match kind {
        ModelKind::ThreePL => {
            let u = item
                .guessing
                .ok_or_else(|| invalid("3PL item requires a guessing parameter"))?;
            if !(u > 0.0 && u < 1.0) {
                return Err(invalid(format!("guessing {u} outside (0, 1)")));
            }
            u + (1.0 - u) * base
        }
        _ => base,
    };
    Ok(p.clamp(PROB_FLOOR, PROB_CEIL))
}

fn check_dims(data: &ResponseMatrix, kind: ModelKind, items: &ItemParameters, abilities: &[f64]) -> Result<()> {
    items.validate()?;
    if items.len() != data.n_items() {
        return Err(Error::Dimension(format!(
            "{} items in parameters, {} in data",
            items.len(),
            data.n_items()
        )));
    }
    if abilities.len() != data.n_individuals() {
        return Err(Error::Dimension(format!(
            "{} abilities for {} individuals",
            abilities.len(),
            data.n_individuals()
        )));
    }
    if kind.has_guessing() && items.guessing.is_none() {
        return Err(invalid("3PL requires guessing parameters"));
    }
    Ok(())
}

/// Per-item `(slope, offset, guessing)` so that logit = slope * eta + offset.
fn linear_terms(kind: ModelKind, items: &ItemParameters) -> Vec<(f64, f64, Option<f64>)> {
    (0..items.len())
        .map(|i| {
            let row = items.row(i);
            let l = if kind.has_discrimination() { row.discrimination } else { 1.0 };
            let g = if kind.has_guessing() { row.guessing } else { None };
            (l, -l * row.difficulty, g)
        })
        .collect()
}

pub fn log_likelihood(
    data: &ResponseMatrix,
    kind: ModelKind,
    items: &ItemParameters,
    abilities: &[f64],
) -> Result<f64> {
    check_dims(data, kind, items, abilities)?;
    let terms = linear_terms(kind, items);
    let total = (0..data.n_individuals())
        .map(|j| {
            let eta = abilities[j];
            data.individual_responses(j)
                .iter()
                .map(|&(i, y)| {
                    let (l, off, g) = terms[i as usize];
                    log_bernoulli(y, l * eta + off, g)
                })
                .sum::<f64>()
        })
        .sum::<f64>();
    Ok(total)
}

/// Per-cell log-densities; `None` marks missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLogLik {
    pub n_individuals: usize,
    pub n_items: usize,
    pub cells: Vec<Option<f64>>,
}

impl PointwiseLogLik {
    pub fn get(&self, individual: usize, item: usize) -> Option<f64> {
        self.cells[individual * self.n_items + item]
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().flatten().copied()
    }

    pub fn sum(&self) -> f64 {
        self.observed().sum()
    }
}

pub fn pointwise_log_likelihood(
    data: &ResponseMatrix,
    kind: ModelKind,
    items: &ItemParameters,
    abilities: &[f64],
) -> Result<PointwiseLogLik> {
    check_dims(data, kind, items, abilities)?;
    let terms = linear_terms(kind, items);
    let cells = data
        .cells()
        .iter()
        .enumerate()
        .map(|(idx, cell)| {
            cell.map(|y| {
                let (j, i) = (idx / data.n_items(), idx % data.n_items());
                let (l, off, g) = terms[i];
                log_bernoulli(y == 1, l * abilities[j] + off, g)
            })
        })
        .collect();
    Ok(PointwiseLogLik {
        n_individuals: data.n_individuals(),
        n_items: data.n_items(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(l: f64, b: f64) -> ItemRow {
        ItemRow {
            discrimination: l,
            difficulty: b,
            guessing: None,
        }
    }

    // Independent scalar oracle: direct Bernoulli log-pmf from the textbook formula.
    fn bernoulli_logpmf(y: u8, l: f64, b: f64, eta: f64) -> f64 {
        let p = 1.0 / (1.0 + (-(l * (eta - b))).exp());
        if y == 1 {
            p.ln()
        } else {
            (1.0 - p).ln()
        }
    }

    #[test]
    fn probability_at_difficulty_is_half() {
        let p = success_probability(ModelKind::TwoPL, &row(1.0, 0.7), 0.7).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn expit_two_matches_high_precision_value() {
        // expit(2) = 0.88079707797788244... (mpmath, 30 digits)
        let p = success_probability(ModelKind::TwoPL, &row(2.0, 0.0), 1.0).unwrap();
        assert!((p - 0.880_797_077_977_882_4).abs() < 1e-15);
        assert!((p - 0.8807971).abs() < 5e-8);
    }

    #[test]
    fn zero_guessing_collapses_to_two_pl() {
        for &eta in &[-3.0, -0.2, 0.0, 1.4, 4.0] {
            let two = success_probability(ModelKind::TwoPL, &row(1.3, 0.4), eta).unwrap();
            let mut r = row(1.3, 0.4);
            r.guessing = Some(f64::MIN_POSITIVE);
            let three = success_probability(ModelKind::ThreePL, &r, eta).unwrap();
            assert!((two - three).abs() < 1e-15);
        }
        let (lp2, lq2) = log_prob_pair(0.8, None);
        let (lp3, lq3) = log_prob_pair(0.8, Some(1e-300));
        assert!((lp2 - lp3).abs() < 1e-14 && (lq2 - lq3).abs() < 1e-14);
    }

    #[test]
    fn invalid_item_parameters_are_rejected() {
        assert!(success_probability(ModelKind::TwoPL, &row(0.0, 0.0), 0.0).is_err());
        assert!(success_probability(ModelKind::TwoPL, &row(-1.0, 0.0), 0.0).is_err());
        let mut r = row(1.0, 0.0);
        r.guessing = Some(1.0);
        assert!(success_probability(ModelKind::ThreePL, &r, 0.0).is_err());
        r.guessing = None;
        assert!(success_probability(ModelKind::ThreePL, &r, 0.0).is_err());
    }

    #[test]
    fn one_pl_ignores_discrimination() {
        let a = success_probability(ModelKind::OnePL, &row(3.0, 0.2), 1.1).unwrap();
        let b = success_probability(ModelKind::TwoPL, &row(1.0, 0.2), 1.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn saturation_never_reaches_zero_or_one() {
        let hi = success_probability(ModelKind::TwoPL, &row(2.5, -5.0), 800.0).unwrap();
        let lo = success_probability(ModelKind::TwoPL, &row(2.5, 5.0), -800.0).unwrap();
        assert!(hi < 1.0 && lo > 0.0);
        let (lp, lq) = log_prob_pair(1e4, None);
        assert!(lp.is_finite() && lq.is_finite());
        let (lp, lq) = log_prob_pair(-1e4, Some(0.2));
        assert!(lp.is_finite() && lq.is_finite());
    }

    #[test]
    fn single_observed_cell_gives_log_half() {
        let data = ResponseMatrix::new(1, 1, vec![Some(1)]).unwrap();
        let items = ItemParameters::new(vec![1.0], vec![0.3]).unwrap();
        let ll = log_likelihood(&data, ModelKind::TwoPL, &items, &[0.3]).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);

        let data = ResponseMatrix::new(2, 2, vec![Some(1), None, None, Some(0)]).unwrap();
        let items = ItemParameters::new(vec![1.0, 1.0], vec![0.0, 50.0]).unwrap();
        // second observed cell: individual 2 on item 2 has pi ~ e^-50, y = 0 -> ~0
        let ll = log_likelihood(&data, ModelKind::TwoPL, &items, &[0.0, 0.0]).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_matches_bernoulli_oracle() {
        let data = ResponseMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        let l = [0.8, 1.7];
        let b = [-0.4, 0.9];
        let eta = [0.25, -1.3];
        let items = ItemParameters::new(l.to_vec(), b.to_vec()).unwrap();
        let ll = log_likelihood(&data, ModelKind::TwoPL, &items, &eta).unwrap();
        let oracle = bernoulli_logpmf(1, l[0], b[0], eta[0])
            + bernoulli_logpmf(0, l[1], b[1], eta[0])
            + bernoulli_logpmf(0, l[0], b[0], eta[1])
            + bernoulli_logpmf(1, l[1], b[1], eta[1]);
        assert!((ll - oracle).abs() < 1e-13);
    }

    #[test]
    fn duplicated_rows_double_the_likelihood() {
        let data = ResponseMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 1]]).unwrap();
        let items = ItemParameters::new(vec![0.7, 1.2, 2.0], vec![0.1, -0.5, 1.0]).unwrap();
        let eta = [0.4, -0.9];
        let ll = log_likelihood(&data, ModelKind::TwoPL, &items, &eta).unwrap();
        let doubled = data.duplicated_rows();
        let ll2 = log_likelihood(&doubled, ModelKind::TwoPL, &items, &[0.4, -0.9, 0.4, -0.9]).unwrap();
        assert!((ll2 - 2.0 * ll).abs() < 1e-12);
    }

    #[test]
    fn pointwise_matches_cell_oracle_and_sum() {
        let data = ResponseMatrix::new(
            3,
            2,
            vec![Some(1), Some(0), None, Some(1), Some(0), Some(0)],
        )
        .unwrap();
        let l = [1.3, 0.6];
        let b = [0.2, -1.0];
        let eta = [1.0, -0.3, 0.05];
        let items = ItemParameters::new(l.to_vec(), b.to_vec()).unwrap();
        let pw = pointwise_log_likelihood(&data, ModelKind::TwoPL, &items, &eta).unwrap();
        for j in 0..3 {
            for i in 0..2 {
                match data.get(j, i) {
                    None => assert!(pw.get(j, i).is_none()),
                    Some(y) => {
                        let oracle = bernoulli_logpmf(y, l[i], b[i], eta[j]);
                        assert!((pw.get(j, i).unwrap() - oracle).abs() < 1e-13);
                    }
                }
            }
        }
        let ll = log_likelihood(&data, ModelKind::TwoPL, &items, &eta).unwrap();
        assert!((pw.sum() - ll).abs() < 1e-13);

        let one = ResponseMatrix::new(1, 1, vec![Some(1)]).unwrap();
        let it = ItemParameters::new(vec![1.0], vec![0.0]).unwrap();
        let pw = pointwise_log_likelihood(&one, ModelKind::TwoPL, &it, &[0.0]).unwrap();
        assert!((pw.get(0, 0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let data = ResponseMatrix::from_rows(&[vec![1, 0]]).unwrap();
        let items = ItemParameters::new(vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(
            log_likelihood(&data, ModelKind::TwoPL, &items, &[0.0]),
            Err(Error::Dimension(_))
        ));
        let items = ItemParameters::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(pointwise_log_likelihood(&data, ModelKind::TwoPL, &items, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn si_conversion_examples() {
        let si = SlopeInterceptParameters {
            slope: vec![1.0, 2.0],
            intercept: vec![0.0, -3.0],
            guessing: None,
        };
        let irt = si_to_irt(&si).unwrap();
        assert_eq!(irt.discrimination, vec![1.0, 2.0]);
        assert_eq!(irt.difficulty, vec![0.0, 1.5]);
        let bad = SlopeInterceptParameters {
            slope: vec![0.0],
            intercept: vec![1.0],
            guessing: None,
        };
        assert!(si_to_irt(&bad).is_err());
    }

    #[test]
    fn csv_round_trip_and_rejection() {
        let text = "q1,q2,q3\n1,0,NA\n0,1,1\n";
        let data = ResponseMatrix::read_csv(text.as_bytes()).unwrap();
        assert_eq!(data.n_individuals(), 2);
        assert_eq!(data.get(0, 2), None);
        assert_eq!(data.item_names(), &["q1", "q2", "q3"]);
        let mut out = Vec::new();
        data.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);

        for bad in ["a,b\n1,2\n", "a,b\n1,\n", "a,b\n1,na\n", "a,b\n1,0.0\n"] {
            assert!(
                matches!(ResponseMatrix::read_csv(bad.as_bytes()), Err(Error::Parse { .. })),
                "{bad:?}"
            );
        }
        // item with no observations
        assert!(ResponseMatrix::read_csv("a,b\n1,NA\n0,NA\n".as_bytes()).is_err());
        // individual with no observations
        assert!(ResponseMatrix::read_csv("a,b\n1,0\nNA,NA\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn logit_agrees_across_parameterizations(
            l in 0.05f64..4.0, b in -6.0f64..6.0, eta in -8.0f64..8.0
        ) {
            let irt = ItemParameters::new(vec![l], vec![b]).unwrap();
            let si = irt.to_slope_intercept().unwrap();
            let via_irt = l * (eta - b);
            let via_si = si.slope[0] * eta + si.intercept[0];
            let scale = via_irt.abs().max(1.0);
            prop_assert!((via_irt - via_si).abs() <= 1e-12 * scale);
            let back = si_to_irt(&si).unwrap();
            prop_assert!((back.difficulty[0] - b).abs() <= 1e-12 * b.abs().max(1.0));
            let p1 = success_probability(ModelKind::TwoPL, &irt.row(0), eta).unwrap();
            let p2 = success_probability(ModelKind::TwoPL, &back.row(0), eta).unwrap();
            prop_assert!((p1 - p2).abs() < 1e-12);
        }

        #[test]
        fn likelihood_invariant_under_shift_and_scale(
            c in -2.0f64..2.0, s in 0.3f64..3.0, seed in 0u64..1000
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<u8>> = (0..6).map(|_| (0..4).map(|_| rng.gen_range(0..2)).collect()).collect();
            let rows: Vec<Vec<u8>> = rows.into_iter().map(|mut r| { r[0] = 1; r[1] = 0; r }).collect();
            let data = ResponseMatrix::from_rows(&rows).unwrap();
            let l: Vec<f64> = (0..4).map(|_| rng.gen_range(0.4..2.5)).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let eta: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let base = log_likelihood(&data, ModelKind::TwoPL, &ItemParameters::new(l.clone(), b.clone()).unwrap(), &eta).unwrap();
            let shifted = log_likelihood(
                &data, ModelKind::TwoPL,
                &ItemParameters::new(l.clone(), b.iter().map(|x| x + c).collect()).unwrap(),
                &eta.iter().map(|x| x + c).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert!((base - shifted).abs() < 1e-10);
            let scaled = log_likelihood(
                &data, ModelKind::TwoPL,
                &ItemParameters::new(l.iter().map(|x| x * s).collect(), b.iter().map(|x| x / s).collect()).unwrap(),
                &eta.iter().map(|x| x / s).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert!((base - scaled).abs() < 1e-10);
        }

        #[test]
        fn three_pl_monotone_in_guessing(
            l in 0.2f64..3.0, b in -3.0f64..3.0, eta in -4.0f64..4.0,
            u1 in 0.001f64..0.998, du in 0.0005f64..0.2
        ) {
            let u2 = (u1 + du).min(0.999);
            let mk = |u| ItemRow { discrimination: l, difficulty: b, guessing: Some(u) };
            let p1 = success_probability(ModelKind::ThreePL, &mk(u1), eta).unwrap();
            let p2 = success_probability(ModelKind::ThreePL, &mk(u2), eta).unwrap();
            prop_assert!(p2 >= p1);
        }

        #[test]
        fn one_pl_equals_two_pl_with_unit_slopes(
            b in proptest::collection::vec(-3.0f64..3.0, 3),
            eta in proptest::collection::vec(-3.0f64..3.0, 4)
        ) {
            let data = ResponseMatrix::from_rows(&[vec![1,0,1], vec![0,1,1], vec![1,1,0], vec![0,0,1]]).unwrap();
            let ones = ItemParameters::new(vec![1.0; 3], b.clone()).unwrap();
            let other = ItemParameters::new(vec![2.5; 3], b).unwrap();
            let a = log_likelihood(&data, ModelKind::OnePL, &other, &eta).unwrap();
            let c = log_likelihood(&data, ModelKind::TwoPL, &ones, &eta).unwrap();
            prop_assert_eq!(a, c);
        }
    }
}
