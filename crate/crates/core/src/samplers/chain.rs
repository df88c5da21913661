//! One MCMC chain: state, per-iteration sweep and the archive it produces.
//!
//! Sweep order within an iteration: abilities, item parameters (slopes then
//! locations, or centered pairs then intercepts), guessing parameters, then the
//! ability model (hyperparameters, or CRP labels, atoms and concentration).

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;

use crate::archive::{indexed, ArchiveMeta, Clustering, ParameterizationState, SampleArchive, Timing};
use crate::dist::normal_logpdf;
use crate::error::{invalid, Error, Result};
use crate::model::{expit, log_bernoulli, ModelKind, ResponseMatrix};
use crate::priors::{ConcentrationPrior, Priors};
use crate::rng::{substream, ChainRng, Stream};
use crate::samplers::adaptive::AdaptiveMhState;
use crate::samplers::centered::centered_pair_update;
use crate::samplers::conjugate::conjugate_normal_invgamma_update;
use crate::samplers::crp::{crp_assignment_update, escobar_west_alpha_update, update_atoms, Atom, CrpState};
use crate::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization, StrategyConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stop the sampling phase once this much wall-clock time has elapsed.
    pub max_sampling_seconds: Option<f64>,
}

impl ChainSettings {
    pub fn new(iterations: usize, burnin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burnin,
            thin: 1,
            seed,
            max_sampling_seconds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iterations {
            return Err(invalid(format!(
                "burn-in {} must be smaller than the iteration count {}",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(invalid("thinning interval must be at least 1"));
        }
        if let Some(s) = self.max_sampling_seconds {
            if !(s > 0.0) {
                return Err(invalid("time budget must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbilityState {
    /// eta ~ N(0, 1).
    Standard,
    /// eta ~ N(mean, variance) with a hyperprior on both.
    Normal { mean: f64, variance: f64 },
    Crp(CrpState),
}

/// All latent quantities of one chain.
///
/// `log_slope` and `location` hold the sampled coordinates: under constrained
/// items these are the auxiliary parameters, centred inside the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub log_slope: Vec<f64>,
    pub location: Vec<f64>,
    pub guessing: Option<Vec<f64>>,
    pub abilities: Vec<f64>,
    pub ability: AbilityState,
    pub iteration: usize,
}

/// Item terms such that logit = slope * eta + offset.
#[derive(Debug, Clone, PartialEq)]
struct Terms {
    slope: Vec<f64>,
    offset: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn fill_terms(strategy: &StrategyConfig, log_slope: &[f64], location: &[f64], terms: &mut Terms) {
    let (ls_shift, loc_shift) = if strategy.constraint_mode == ConstraintMode::ConstrainedItems {
        (
            if strategy.kind.has_discrimination() { mean(log_slope) } else { 0.0 },
            mean(location),
        )
    } else {
        (0.0, 0.0)
    };
    for i in 0..location.len() {
        let slope = if strategy.kind.has_discrimination() {
            (log_slope[i] - ls_shift).exp()
        } else {
            1.0
        };
        let loc = location[i] - loc_shift;
        terms.slope[i] = slope;
        terms.offset[i] = match strategy.parameterization {
            Parameterization::Irt => -slope * loc,
            Parameterization::SlopeIntercept => loc,
        };
    }
}

#[inline]
fn person_loglik(data: &ResponseMatrix, j: usize, eta: f64, terms: &Terms, guessing: Option<&[f64]>) -> f64 {
    data.individual_responses(j)
        .iter()
        .map(|&(i, y)| {
            let i = i as usize;
            log_bernoulli(y, terms.slope[i] * eta + terms.offset[i], guessing.map(|g| g[i]))
        })
        .sum()
}

#[inline]
fn item_loglik(data: &ResponseMatrix, i: usize, slope: f64, offset: f64, guess: Option<f64>, abilities: &[f64]) -> f64 {
    data.item_responses(i)
        .iter()
        .map(|&(j, y)| log_bernoulli(y, slope * abilities[j as usize] + offset, guess))
        .sum()
}

fn full_loglik(data: &ResponseMatrix, terms: &Terms, guessing: Option<&[f64]>, abilities: &[f64]) -> f64 {
    (0..terms.slope.len())
        .map(|i| item_loglik(data, i, terms.slope[i], terms.offset[i], guessing.map(|g| g[i]), abilities))
        .sum()
}

/// Standardized logits of smoothed raw scores.
fn initial_abilities(data: &ResponseMatrix) -> Vec<f64> {
    let raw: Vec<f64> = (0..data.n_individuals())
        .map(|j| {
            let r = data.individual_responses(j);
            let correct = r.iter().filter(|(_, y)| *y).count() as f64;
            let p = (correct + 0.5) / (r.len() as f64 + 1.0);
            (p / (1.0 - p)).ln()
        })
        .collect();
    let m = mean(&raw);
    let sd = (raw.iter().map(|x| (x - m).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
    raw.iter()
        .map(|x| if sd > 1e-12 { (x - m) / sd } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct ItemLogPriors {
    log_slope_mean: f64,
    log_slope_variance: f64,
    location_variance: f64,
    parameterization: Parameterization,
}

impl ItemLogPriors {
    fn slope(&self, ls: f64) -> f64 {
        normal_logpdf(ls, self.log_slope_mean, self.log_slope_variance)
    }

    fn location(&self, loc: f64) -> f64 {
        normal_logpdf(loc, 0.0, self.location_variance)
    }

    fn offset(&self, slope: f64, loc: f64) -> f64 {
        match self.parameterization {
            Parameterization::Irt => -slope * loc,
            Parameterization::SlopeIntercept => loc,
        }
    }
}

pub struct Chain<'a> {
    data: &'a ResponseMatrix,
    strategy: StrategyConfig,
    priors: Priors,
    state: ChainState,
    terms: Terms,
    ability_mh: Vec<AdaptiveMhState>,
    slope_mh: Vec<AdaptiveMhState>,
    location_mh: Vec<AdaptiveMhState>,
    pair_mh: Vec<AdaptiveMhState>,
    guess_mh: Vec<AdaptiveMhState>,
    rng: ChainRng,
}

impl<'a> Chain<'a> {
    pub fn new(data: &'a ResponseMatrix, strategy: StrategyConfig, priors: Priors, seed: u64) -> Result<Self> {
        strategy.validate()?;
        priors.validate()?;
        let n = data.n_individuals();
        let m = data.n_items();
        let ability = match (strategy.constraint_mode, strategy.ability_model) {
            (ConstraintMode::ConstrainedAbilities, _) => AbilityState::Standard,
            (_, AbilityModel::Parametric) => AbilityState::Normal {
                mean: 0.0,
                variance: 1.0,
            },
            (_, AbilityModel::Semiparametric) => AbilityState::Crp(CrpState::single_cluster(
                n,
                Atom::new(0.0, 1.0),
                priors.abilities.concentration.mean(),
            )),
        };
        let state = ChainState {
            log_slope: vec![0.0; m],
            location: vec![0.0; m],
            guessing: strategy.kind.has_guessing().then(|| {
                let (a, b) = (priors.items.guessing_a, priors.items.guessing_b);
                vec![a / (a + b); m]
            }),
            abilities: initial_abilities(data),
            ability,
            iteration: 0,
        };
        Self::from_state(data, strategy, priors, state, seed)
    }

    /// Starts from a given state (used for prior-invariance checks).
    pub fn from_state(
        data: &'a ResponseMatrix,
        strategy: StrategyConfig,
        priors: Priors,
        state: ChainState,
        seed: u64,
    ) -> Result<Self> {
        strategy.validate()?;
        priors.validate()?;
        let n = data.n_individuals();
        let m = data.n_items();
        if state.abilities.len() != n || state.log_slope.len() != m || state.location.len() != m {
            return Err(Error::Dimension("chain state does not match the data".into()));
        }
        if strategy.kind.has_guessing() != state.guessing.is_some() {
            return Err(invalid("guessing parameters present exactly for 3PL"));
        }
        if let AbilityState::Crp(c) = &state.ability {
            c.check_invariants()?;
            if c.n() != n {
                return Err(Error::Dimension("cluster labels do not match N".into()));
            }
        }
        let mut chain = Self {
            data,
            strategy,
            priors,
            terms: Terms {
                slope: vec![1.0; m],
                offset: vec![0.0; m],
            },
            state,
            ability_mh: vec![AdaptiveMhState::default(); n],
            slope_mh: vec![AdaptiveMhState::default(); m],
            location_mh: vec![AdaptiveMhState::default(); m],
            pair_mh: vec![AdaptiveMhState::default(); m],
            guess_mh: vec![AdaptiveMhState::default(); m],
            rng: substream(seed, Stream::Chain),
        };
        chain.refresh_terms();
        let ll = chain.log_likelihood();
        if !ll.is_finite() {
            return Err(Error::NonFinite(format!("initial log-likelihood is {ll}")));
        }
        Ok(chain)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn strategy(&self) -> &StrategyConfig {
        &self.strategy
    }

    fn refresh_terms(&mut self) {
        fill_terms(&self.strategy, &self.state.log_slope, &self.state.location, &mut self.terms);
    }

    pub fn log_likelihood(&self) -> f64 {
        full_loglik(self.data, &self.terms, self.state.guessing.as_deref(), &self.state.abilities)
    }

    /// Identified item values: (lambda, location) with the constraints applied.
    pub fn effective_items(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.state.location.len();
        let constrained = self.strategy.constraint_mode == ConstraintMode::ConstrainedItems;
        let ls_shift = if constrained && self.strategy.kind.has_discrimination() {
            mean(&self.state.log_slope)
        } else {
            0.0
        };
        let loc_shift = if constrained { mean(&self.state.location) } else { 0.0 };
        let lambda = (0..m)
            .map(|i| {
                if self.strategy.kind.has_discrimination() {
                    (self.state.log_slope[i] - ls_shift).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let loc = self.state.location.iter().map(|x| x - loc_shift).collect();
        (lambda, loc)
    }

    pub fn freeze_adaptation(&mut self) {
        for s in self
            .ability_mh
            .iter_mut()
            .chain(&mut self.slope_mh)
            .chain(&mut self.location_mh)
            .chain(&mut self.pair_mh)
            .chain(&mut self.guess_mh)
        {
            s.freeze();
            s.reset_counts();
        }
    }

    pub fn acceptance_rates(&self) -> BTreeMap<String, f64> {
        let avg = |v: &[AdaptiveMhState]| v.iter().map(|s| s.acceptance_rate()).sum::<f64>() / v.len() as f64;
        let mut out = BTreeMap::new();
        out.insert("abilities".to_string(), avg(&self.ability_mh));
        if self.strategy.algorithm == Algorithm::Centered {
            out.insert("centered_pairs".to_string(), avg(&self.pair_mh));
        } else if self.strategy.kind.has_discrimination() {
            out.insert("log_slope".to_string(), avg(&self.slope_mh));
        }
        out.insert("location".to_string(), avg(&self.location_mh));
        if self.strategy.kind.has_guessing() {
            out.insert("guessing".to_string(), avg(&self.guess_mh));
        }
        out
    }

    /// One full iteration.
    pub fn sweep(&mut self) -> Result<()> {
        self.update_abilities()?;
        match self.strategy.algorithm {
            Algorithm::Centered => self.update_items_centered()?,
            Algorithm::MhConjugate if self.strategy.constraint_mode == ConstraintMode::ConstrainedItems => {
                self.update_items_constrained()?
            }
            Algorithm::MhConjugate => self.update_items()?,
        }
        if self.strategy.kind.has_guessing() {
            self.update_guessing()?;
        }
        self.update_ability_model()?;
        self.state.iteration += 1;
        Ok(())
    }

    fn update_abilities(&mut self) -> Result<()> {
        let data = self.data;
        let guessing = self.state.guessing.as_deref();
        for j in 0..self.state.abilities.len() {
            let prior: Box<dyn Fn(f64) -> f64> = match &self.state.ability {
                AbilityState::Standard => Box::new(|x: f64| -0.5 * x * x),
                AbilityState::Normal { mean, variance } => {
                    let (m, v) = (*mean, *variance);
                    Box::new(move |x| normal_logpdf(x, m, v))
                }
                AbilityState::Crp(c) => {
                    let a = c.atom_of(j);
                    Box::new(move |x| a.log_density(x))
                }
            };
            let terms = &self.terms;
            let target = |x: f64| person_loglik(data, j, x, terms, guessing) + prior(x);
            let current = self.state.abilities[j];
            let lp = target(current);
            if !lp.is_finite() {
                return Err(Error::NonFinite(format!("ability {} log target", j + 1)));
            }
            let step = self.ability_mh[j].step_from(current, lp, target, &mut self.rng);
            self.state.abilities[j] = step.value;
        }
        Ok(())
    }

    fn item_priors(&self) -> ItemLogPriors {
        ItemLogPriors {
            log_slope_mean: self.priors.items.log_slope_mean,
            log_slope_variance: self.priors.items.log_slope_variance,
            location_variance: self.priors.items.location_variance(self.strategy.parameterization),
            parameterization: self.strategy.parameterization,
        }
    }

    fn update_items(&mut self) -> Result<()> {
        let ip = self.item_priors();
        let data = self.data;
        let has_slope = self.strategy.kind.has_discrimination();
        for i in 0..self.state.location.len() {
            let guess = self.state.guessing.as_ref().map(|g| g[i]);
            let abilities = &self.state.abilities;
            if has_slope {
                let loc = self.state.location[i];
                let target = |ls: f64| {
                    let s = ls.exp();
                    item_loglik(data, i, s, ip.offset(s, loc), guess, abilities) + ip.slope(ls)
                };
                let cur = self.state.log_slope[i];
                let lp = target(cur);
                if !lp.is_finite() {
                    return Err(Error::NonFinite(format!("item {} slope log target", i + 1)));
                }
                let step = self.slope_mh[i].step_from(cur, lp, target, &mut self.rng);
                self.state.log_slope[i] = step.value;
            }
            let slope = if has_slope { self.state.log_slope[i].exp() } else { 1.0 };
            let target = |loc: f64| {
                item_loglik(data, i, slope, ip.offset(slope, loc), guess, abilities) + ip.location(loc)
            };
            let cur = self.state.location[i];
            let lp = target(cur);
            if !lp.is_finite() {
                return Err(Error::NonFinite(format!("item {} location log target", i + 1)));
            }
            let step = self.location_mh[i].step_from(cur, lp, target, &mut self.rng);
            self.state.location[i] = step.value;
            self.terms.slope[i] = slope;
            self.terms.offset[i] = ip.offset(slope, self.state.location[i]);
        }
        Ok(())
    }

    /// Auxiliary-parameter updates: every proposal moves all centred items, so
    /// the whole likelihood is re-evaluated.
    fn update_items_constrained(&mut self) -> Result<()> {
        let ip = self.item_priors();
        let data = self.data;
        let strategy = self.strategy;
        let m = self.state.location.len();
        let mut scratch = self.terms.clone();
        let mut current_ll = self.log_likelihood();
        if !current_ll.is_finite() {
            return Err(Error::NonFinite("log-likelihood".into()));
        }
        for i in 0..m {
            if strategy.kind.has_discrimination() {
                let mut ls = self.state.log_slope.clone();
                let cur = ls[i];
                let proposal = cur + self.slope_mh[i].propose_increment(&mut self.rng);
                ls[i] = proposal;
                fill_terms(&strategy, &ls, &self.state.location, &mut scratch);
                let prop_ll = full_loglik(data, &scratch, self.state.guessing.as_deref(), &self.state.abilities);
                let accepted = self.slope_mh[i].accept(
                    current_ll + ip.slope(cur),
                    prop_ll + ip.slope(proposal),
                    &mut self.rng,
                );
                self.slope_mh[i].record(accepted);
                if accepted {
                    self.state.log_slope[i] = proposal;
                    current_ll = prop_ll;
                }
            }
            let mut loc = self.state.location.clone();
            let cur = loc[i];
            let proposal = cur + self.location_mh[i].propose_increment(&mut self.rng);
            loc[i] = proposal;
            fill_terms(&strategy, &self.state.log_slope, &loc, &mut scratch);
            let prop_ll = full_loglik(data, &scratch, self.state.guessing.as_deref(), &self.state.abilities);
            let accepted = self.location_mh[i].accept(
                current_ll + ip.location(cur),
                prop_ll + ip.location(proposal),
                &mut self.rng,
            );
            self.location_mh[i].record(accepted);
            if accepted {
                self.state.location[i] = proposal;
                current_ll = prop_ll;
            }
        }
        self.refresh_terms();
        Ok(())
    }

    fn update_items_centered(&mut self) -> Result<()> {
        let ip = self.item_priors();
        let data = self.data;
        let eta_bar = mean(&self.state.abilities);
        for i in 0..self.state.location.len() {
            let guess = self.state.guessing.as_ref().map(|g| g[i]);
            let abilities = &self.state.abilities;
            let target = |ls: f64, g: f64| {
                item_loglik(data, i, ls.exp(), g, guess, abilities) + ip.slope(ls) + ip.location(g)
            };
            let (ls, g, _) = centered_pair_update(
                self.state.log_slope[i],
                self.state.location[i],
                eta_bar,
                target,
                &mut self.pair_mh[i],
                &mut self.rng,
            )?;
            let lp = target(ls, g);
            let step = self.location_mh[i].step_from(g, lp, |x| target(ls, x), &mut self.rng);
            self.state.log_slope[i] = ls;
            self.state.location[i] = step.value;
            self.terms.slope[i] = ls.exp();
            self.terms.offset[i] = step.value;
        }
        Ok(())
    }

    /// Guessing parameters on the logit scale; the Beta(a, b) prior plus the
    /// logit Jacobian gives a kernel u^a (1 - u)^b.
    fn update_guessing(&mut self) -> Result<()> {
        let data = self.data;
        let (a, b) = (self.priors.items.guessing_a, self.priors.items.guessing_b);
        let m = self.state.location.len();
        for i in 0..m {
            let (slope, offset) = (self.terms.slope[i], self.terms.offset[i]);
            let abilities = &self.state.abilities;
            let target = |w: f64| {
                let u = expit(w);
                if !(u > 0.0 && u < 1.0) {
                    return f64::NEG_INFINITY;
                }
                item_loglik(data, i, slope, offset, Some(u), abilities) + a * u.ln() + b * (-u).ln_1p()
            };
            let g = self.state.guessing.as_mut().expect("3PL chain carries guessing parameters");
            let w = (g[i] / (1.0 - g[i])).ln();
            let lp = target(w);
            if !lp.is_finite() {
                return Err(Error::NonFinite(format!("guessing {} log target", i + 1)));
            }
            let step = self.guess_mh[i].step_from(w, lp, target, &mut self.rng);
            g[i] = expit(step.value);
        }
        Ok(())
    }

    fn update_ability_model(&mut self) -> Result<()> {
        let abilities = &self.state.abilities;
        match &mut self.state.ability {
            AbilityState::Standard => {}
            AbilityState::Normal { mean, variance } => {
                (*mean, *variance) =
                    conjugate_normal_invgamma_update(abilities, &self.priors.abilities.hyper, *variance, &mut self.rng)?;
            }
            AbilityState::Crp(crp) => {
                let base = self.priors.abilities.base_measure;
                for (j, &eta) in abilities.iter().enumerate() {
                    crp_assignment_update(j, crp, eta, &base, &mut self.rng)?;
                }
                update_atoms(crp, abilities, &base, &mut self.rng)?;
                if let ConcentrationPrior::Gamma { shape, rate } = self.priors.abilities.concentration {
                    let alpha =
                        escobar_west_alpha_update(crp.alpha(), crp.n_clusters(), crp.n(), shape, rate, &mut self.rng)?;
                    crp.set_alpha(alpha);
                }
                #[cfg(debug_assertions)]
                crp.check_invariants()?;
            }
        }
        Ok(())
    }

    /// Column names of an archive produced by this chain.
    pub fn column_names(&self) -> Vec<String> {
        let m = self.state.location.len();
        let n = self.state.abilities.len();
        let loc = match self.strategy.parameterization {
            Parameterization::Irt => "beta",
            Parameterization::SlopeIntercept => "gamma",
        };
        let mut cols: Vec<String> = (0..m).map(|i| indexed("lambda", i)).collect();
        cols.extend((0..m).map(|i| indexed(loc, i)));
        if self.strategy.kind.has_guessing() {
            cols.extend((0..m).map(|i| indexed("upsilon", i)));
        }
        cols.extend((0..n).map(|j| indexed("eta", j)));
        match self.state.ability {
            AbilityState::Crp(_) => {
                cols.extend(["alpha", "n_clusters", "new_mu", "new_sigma2"].map(String::from));
            }
            _ => cols.extend(["mu_eta", "sigma2_eta"].map(String::from)),
        }
        cols.push("log_lik".into());
        cols
    }

    fn record<R: Rng + ?Sized>(&self, row: &mut Vec<f64>, fresh_rng: &mut R) {
        row.clear();
        let (lambda, loc) = self.effective_items();
        row.extend(&lambda);
        row.extend(&loc);
        if let Some(g) = &self.state.guessing {
            row.extend(g);
        }
        row.extend(&self.state.abilities);
        match &self.state.ability {
            AbilityState::Standard => row.extend([0.0, 1.0]),
            AbilityState::Normal { mean, variance } => row.extend([*mean, *variance]),
            AbilityState::Crp(c) => {
                let fresh = Atom::from_base(&self.priors.abilities.base_measure, fresh_rng);
                row.extend([c.alpha(), c.n_clusters() as f64, fresh.mean, fresh.variance]);
            }
        }
        row.push(self.log_likelihood());
    }

    /// Runs burn-in and sampling and returns the archive of post-burn-in draws.
    pub fn run(mut self, settings: &ChainSettings) -> Result<SampleArchive> {
        settings.validate()?;
        let n = self.state.abilities.len();
        let meta = ArchiveMeta {
            strategy: self.strategy,
            seed: settings.seed,
            iterations: settings.iterations,
            burnin: settings.burnin,
            thin: settings.thin,
            iterations_completed: 0,
            n_individuals: n,
            n_items: self.state.location.len(),
            parameterization: ParameterizationState::Sampled,
            timing: Timing::default(),
            acceptance: BTreeMap::new(),
            priors: self.priors,
        };
        let mut archive = SampleArchive::new(meta, self.column_names())?;
        let mut clustering = matches!(self.state.ability, AbilityState::Crp(_)).then(|| Clustering::new(n));
        let mut fresh_rng = substream(settings.seed, Stream::FreshAtoms);
        let mut row = Vec::with_capacity(archive.n_columns());

        let start = Instant::now();
        for _ in 0..settings.burnin {
            self.sweep()?;
        }
        let burnin_seconds = start.elapsed().as_secs_f64();
        self.freeze_adaptation();
        let sampling_start = Instant::now();
        let mut completed = settings.burnin;
        for t in settings.burnin..settings.iterations {
            self.sweep()?;
            completed += 1;
            if (t - settings.burnin + 1).is_multiple_of(settings.thin) {
                self.record(&mut row, &mut fresh_rng);
                archive.push_draw(&row)?;
                if let (Some(c), AbilityState::Crp(crp)) = (clustering.as_mut(), &self.state.ability) {
                    c.push(crp.labels(), crp.atoms())?;
                }
            }
            if let Some(budget) = settings.max_sampling_seconds {
                if sampling_start.elapsed().as_secs_f64() >= budget {
                    break;
                }
            }
        }
        let sampling_seconds = sampling_start.elapsed().as_secs_f64();
        archive.meta.timing = Timing {
            burnin_seconds,
            sampling_seconds,
            total_seconds: burnin_seconds + sampling_seconds,
        };
        archive.meta.iterations_completed = completed;
        archive.meta.acceptance = self.acceptance_rates();
        if let Some(c) = clustering {
            archive = archive.with_clustering(c);
        }
        Ok(archive)
    }
}

/// Fits one chain and returns its archive of post-burn-in draws.
pub fn run_chain(
    data: &ResponseMatrix,
    strategy: &StrategyConfig,
    priors: &Priors,
    settings: &ChainSettings,
) -> Result<SampleArchive> {
    settings.validate()?;
    Chain::new(data, *strategy, *priors, settings.seed)?.run(settings)
}

/// Convenience for tests and the FFI: a model kind's default strategy.
pub fn default_strategy(kind: ModelKind) -> StrategyConfig {
    StrategyConfig {
        kind,
        parameterization: Parameterization::Irt,
        constraint_mode: ConstraintMode::Unconstrained,
        algorithm: Algorithm::MhConjugate,
        ability_model: AbilityModel::Parametric,
    }
}
