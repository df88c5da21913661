//! Collapsed Chinese-restaurant-process updates for the DP mixture of normals.
//!
//! Cluster labels are resampled one individual at a time with Neal's
//! Algorithm 8 using a single auxiliary component: the departing singleton's
//! atom if the individual was alone, otherwise a fresh draw from G0. Atoms are
//! stored densely; an emptied cluster is removed by swapping the last cluster
//! into its slot and relabelling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{normal_logpdf, sample_beta, sample_gamma};
use crate::error::{invalid, Error, Result};
use crate::priors::NormalInvGamma;
use crate::samplers::conjugate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub mean: f64,
    pub variance: f64,
}

impl Atom {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    pub fn from_base<R: Rng + ?Sized>(base: &NormalInvGamma, rng: &mut R) -> Self {
        let (mean, variance) = base.sample(rng);
        Self { mean, variance }
    }

    #[inline]
    pub fn log_density(&self, x: f64) -> f64 {
        normal_logpdf(x, self.mean, self.variance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrpState {
    labels: Vec<usize>,
    atoms: Vec<Atom>,
    counts: Vec<usize>,
    alpha: f64,
}

const DETACHED: usize = usize::MAX;

impl CrpState {
    /// Everyone in one cluster.
    pub fn single_cluster(n: usize, atom: Atom, alpha: f64) -> Self {
        Self {
            labels: vec![0; n],
            atoms: vec![atom],
            counts: vec![n],
            alpha,
        }
    }

    pub fn from_parts(labels: Vec<usize>, atoms: Vec<Atom>, alpha: f64) -> Result<Self> {
        let mut counts = vec![0; atoms.len()];
        for &z in &labels {
            *counts
                .get_mut(z)
                .ok_or_else(|| Error::State(format!("label {z} has no atom")))? += 1;
        }
        let state = Self {
            labels,
            atoms,
            counts,
            alpha,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.atoms.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha;
    }

    pub fn atom_of(&self, j: usize) -> Atom {
        self.atoms[self.labels[j]]
    }

    pub fn check_invariants(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::State(format!("concentration {} is not positive", self.alpha)));
        }
        if self.atoms.len() != self.counts.len() {
            return Err(Error::State("atom and count arrays differ in length".into()));
        }
        let mut seen = vec![0usize; self.atoms.len()];
        for &z in &self.labels {
            if z >= self.atoms.len() {
                return Err(Error::State(format!("label {z} references a missing atom")));
            }
            seen[z] += 1;
        }
        if seen != self.counts {
            return Err(Error::State("occupancy counts disagree with labels".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::State("empty cluster kept in the state".into()));
        }
        if self.atoms.iter().any(|a| !(a.variance > 0.0) || !a.mean.is_finite()) {
            return Err(Error::State("atom with non-positive variance or non-finite mean".into()));
        }
        Ok(())
    }

    /// Detaches `j`; returns its atom if that emptied the cluster (which is then removed).
    fn detach(&mut self, j: usize) -> Result<Option<Atom>> {
        let k = self.labels[j];
        if k >= self.counts.len() || self.counts[k] == 0 {
            return Err(Error::State(format!("individual {j} sits in an invalid cluster {k}")));
        }
        self.labels[j] = DETACHED;
        self.counts[k] -= 1;
        if self.counts[k] > 0 {
            return Ok(None);
        }
        let last = self.atoms.len() - 1;
        let atom = self.atoms.swap_remove(k);
        self.counts.swap_remove(k);
        if k != last {
            for z in self.labels.iter_mut().filter(|z| **z == last) {
                *z = k;
            }
        }
        Ok(Some(atom))
    }

    fn attach(&mut self, j: usize, k: usize) {
        self.labels[j] = k;
        self.counts[k] += 1;
    }

    fn attach_new(&mut self, j: usize, atom: Atom) {
        self.atoms.push(atom);
        self.counts.push(1);
        self.labels[j] = self.atoms.len() - 1;
    }

    /// Member lists per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.atoms.len()];
        for (j, &z) in self.labels.iter().enumerate() {
            out[z].push(j);
        }
        out
    }
}

/// Normalized reassignment probabilities for `eta` given occupancy (without the
/// individual being moved), atoms, and the auxiliary atom. Last entry is "new".
pub fn assignment_probabilities(counts: &[usize], atoms: &[Atom], alpha: f64, eta: f64, auxiliary: Atom) -> Vec<f64> {
    let mut logw: Vec<f64> = counts
        .iter()
        .zip(atoms)
        .map(|(&n, a)| (n as f64).ln() + a.log_density(eta))
        .collect();
    logw.push(alpha.ln() + auxiliary.log_density(eta));
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Reassigns `j` given a fresh auxiliary atom; if `j` was a singleton its own
/// atom is used as the auxiliary instead. Returns the new label.
pub fn assign_with_auxiliary<R: Rng + ?Sized>(
    j: usize,
    state: &mut CrpState,
    eta_j: f64,
    fresh: Atom,
    rng: &mut R,
) -> Result<usize> {
    if !eta_j.is_finite() {
        return Err(Error::NonFinite(format!("ability of individual {j}")));
    }
    let auxiliary = state.detach(j)?.unwrap_or(fresh);
    let probs = assignment_probabilities(&state.counts, &state.atoms, state.alpha, eta_j, auxiliary);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = k;
            break;
        }
    }
    if chosen == state.atoms.len() {
        state.attach_new(j, auxiliary);
    } else {
        state.attach(j, chosen);
    }
    Ok(state.labels[j])
}

/// One label update for individual `j`.
pub fn crp_assignment_update<R: Rng + ?Sized>(
    j: usize,
    state: &mut CrpState,
    eta_j: f64,
    base_measure: &NormalInvGamma,
    rng: &mut R,
) -> Result<()> {
    let fresh = Atom::from_base(base_measure, rng);
    assign_with_auxiliary(j, state, eta_j, fresh, rng)?;
    Ok(())
}

/// Conjugate updates of every occupied atom given the abilities of its members.
pub fn update_atoms<R: Rng + ?Sized>(
    state: &mut CrpState,
    abilities: &[f64],
    base_measure: &NormalInvGamma,
    rng: &mut R,
) -> Result<()> {
    if abilities.len() != state.n() {
        return Err(Error::Dimension("abilities and labels differ in length".into()));
    }
    let mut buckets: Vec<Vec<f64>> = state.counts.iter().map(|&c| Vec::with_capacity(c)).collect();
    for (&z, &eta) in state.labels.iter().zip(abilities) {
        buckets[z].push(eta);
    }
    for (atom, obs) in state.atoms.iter_mut().zip(&buckets) {
        let mean = conjugate::draw_mean(obs, base_measure, atom.variance, rng);
        let variance = conjugate::draw_variance(obs, base_measure, mean, rng);
        *atom = Atom { mean, variance };
    }
    Ok(())
}

/// Escobar-West auxiliary-variable draw of the concentration under a Gamma(shape, rate) prior.
pub fn escobar_west_alpha_update<R: Rng + ?Sized>(
    alpha: f64,
    n_clusters: usize,
    n: usize,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> Result<f64> {
    if n_clusters == 0 || n_clusters > n {
        return Err(invalid(format!("cluster count {n_clusters} outside [1, {n}]")));
    }
    if !(shape > 0.0 && rate > 0.0) {
        return Err(invalid("gamma prior needs positive shape and rate"));
    }
    if !(alpha > 0.0) {
        return Err(invalid(format!("concentration {alpha} must be positive")));
    }
    let k = n_clusters as f64;
    let x = sample_beta(rng, alpha + 1.0, n as f64);
    let post_rate = rate - x.ln();
    let odds = (shape + k - 1.0) / (n as f64 * post_rate);
    let weight = odds / (1.0 + odds);
    let new_shape = if rng.gen::<f64>() < weight { shape + k } else { shape + k - 1.0 };
    Ok(sample_gamma(rng, new_shape, post_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean, variance};
    use crate::priors::crp_forward;
    use crate::rng::{substream, Stream};

    #[test]
    fn single_individual_always_in_cluster_one() {
        let mut rng = substream(1, Stream::Chain);
        let base = NormalInvGamma::default();
        let mut st = CrpState::single_cluster(1, Atom::new(0.0, 1.0), 0.5);
        for _ in 0..1000 {
            crp_assignment_update(0, &mut st, 0.3, &base, &mut rng).unwrap();
            assert_eq!(st.labels(), &[0]);
            assert_eq!(st.counts(), &[1]);
            st.check_invariants().unwrap();
        }
    }

    #[test]
    fn second_customer_prior_weights() {
        // With identical atoms the likelihood factors cancel and only the CRP weights remain.
        let atom = Atom::new(0.0, 1.0);
        let p = assignment_probabilities(&[1], &[atom], 0.8, 0.4, atom);
        assert!((p[1] - 0.8 / 1.8).abs() < 1e-14);
    }

    #[test]
    fn reassignment_frequencies_match_enumeration() {
        let atoms = vec![Atom::new(-1.0, 0.5), Atom::new(1.5, 1.0)];
        let start = CrpState::from_parts(vec![0, 1, 1], atoms.clone(), 0.7).unwrap();
        let fresh = Atom::new(0.3, 2.0);
        let eta = 0.2;
        // Brute-force enumeration of the full conditional for individual 2 (index 1):
        // remaining counts (1, 1) with atoms above, new cluster weight alpha * N(eta; fresh).
        let npdf = |x: f64, a: Atom| (-(x - a.mean).powi(2) / (2.0 * a.variance)).exp() / (2.0 * std::f64::consts::PI * a.variance).sqrt();
        let w = [npdf(eta, atoms[0]), npdf(eta, atoms[1]), 0.7 * npdf(eta, fresh)];
        let tot: f64 = w.iter().sum();
        let expected: Vec<f64> = w.iter().map(|x| x / tot).collect();

        let reps = 100_000;
        let mut rng = substream(2, Stream::Chain);
        let mut counts = [0usize; 3];
        for _ in 0..reps {
            let mut st = start.clone();
            let z = assign_with_auxiliary(1, &mut st, eta, fresh, &mut rng).unwrap();
            st.check_invariants().unwrap();
            let dest = if st.n_clusters() == 3 { 2 } else { z };
            counts[dest] += 1;
        }
        for k in 0..3 {
            let p = expected[k];
            let f = counts[k] as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((f - p).abs() < 3.0 * se, "cluster {k}: {f} vs {p}");
        }
    }

    #[test]
    fn singleton_reuses_its_atom_as_auxiliary() {
        // Individual 0 alone in cluster 0; moving it "new" must recreate the same atom.
        let atoms = vec![Atom::new(-3.0, 0.2), Atom::new(2.0, 1.0)];
        let mut rng = substream(3, Stream::Chain);
        for _ in 0..200 {
            let mut st = CrpState::from_parts(vec![0, 1, 1], atoms.clone(), 1.0).unwrap();
            assign_with_auxiliary(0, &mut st, -3.0, Atom::new(50.0, 1.0), &mut rng).unwrap();
            st.check_invariants().unwrap();
            let a = st.atom_of(0);
            assert!(a == atoms[0] || a == atoms[1]);
        }
    }

    #[test]
    fn marginal_new_cluster_probability_matches_quadrature() {
        // Averaging over the fresh G0 atom: P(new) = E_theta[alpha f(eta|theta) / (S + alpha f(eta|theta))].
        let base = NormalInvGamma::default();
        let atoms = vec![Atom::new(-1.0, 0.5), Atom::new(1.5, 1.0)];
        let start = CrpState::from_parts(vec![0, 1, 1], atoms.clone(), 0.7).unwrap();
        let eta = 0.2;
        let npdf = |x: f64, m: f64, v: f64| (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let s = npdf(eta, -1.0, 0.5) + npdf(eta, 1.5, 1.0);
        // 2-D quadrature: mu on a fine grid of its normal prior, sigma2 by substitution
        // t = 1/sigma2 ~ Gamma(2.01, rate 1.01) integrated with a midpoint rule on a CDF grid.
        use statrs::distribution::{ContinuousCDF, Gamma as G, Normal as N};
        let gd = G::new(2.01, 1.01).unwrap();
        let nd = N::new(0.0, 3f64.sqrt()).unwrap();
        let (m, k) = (400, 400);
        let mut acc = 0.0;
        for a in 0..m {
            let mu = nd.inverse_cdf((a as f64 + 0.5) / m as f64);
            for b in 0..k {
                let t = gd.inverse_cdf((b as f64 + 0.5) / k as f64);
                let f = 0.7 * npdf(eta, mu, 1.0 / t);
                acc += f / (s + f);
            }
        }
        let expected = acc / (m * k) as f64;
        let reps = 100_000;
        let mut rng = substream(4, Stream::Chain);
        let mut new = 0;
        for _ in 0..reps {
            let mut st = start.clone();
            crp_assignment_update(1, &mut st, eta, &base, &mut rng).unwrap();
            if st.n_clusters() == 3 {
                new += 1;
            }
        }
        let f = new as f64 / reps as f64;
        let se = (expected * (1.0 - expected) / reps as f64).sqrt();
        assert!((f - expected).abs() < 3.0 * se + 1e-3, "{f} vs {expected}");
    }

    #[test]
    fn corrupted_state_is_detected() {
        assert!(CrpState::from_parts(vec![0, 2], vec![Atom::new(0.0, 1.0)], 1.0).is_err());
        assert!(CrpState::from_parts(vec![0, 0], vec![Atom::new(0.0, 1.0), Atom::new(1.0, 1.0)], 1.0).is_err());
        let mut st = CrpState::single_cluster(3, Atom::new(0.0, 1.0), 1.0);
        st.counts[0] = 5;
        assert!(st.check_invariants().is_err());
    }

    #[test]
    fn escobar_west_leaves_gamma_prior_invariant() {
        // Joint chain on (alpha, K): K | alpha by forward CRP, alpha | K by the auxiliary update.
        let (shape, rate, n) = (2.0, 4.0, 20);
        let mut rng = substream(5, Stream::Chain);
        let mut alpha = 0.5;
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let k = crp_forward(n, alpha, &mut rng).1.len();
            alpha = escobar_west_alpha_update(alpha, k, n, shape, rate, &mut rng).unwrap();
            draws.push(alpha);
        }
        // Gamma(2, 4): mean 0.5, variance 0.125. Allow for autocorrelation with a 4x SE.
        let se = (0.125f64 / 1e5).sqrt();
        assert!((mean(&draws) - 0.5).abs() < 4.0 * 3.0 * se, "mean {}", mean(&draws));
        assert!((variance(&draws) - 0.125).abs() < 0.01, "var {}", variance(&draws));
    }

    #[test]
    fn escobar_west_moves_up_with_more_clusters() {
        let mut rng = substream(6, Stream::Chain);
        let avg = |k: usize, rng: &mut crate::rng::ChainRng| {
            let mut a = 1.0;
            let mut s = 0.0;
            for _ in 0..20_000 {
                a = escobar_west_alpha_update(a, k, 100, 2.0, 4.0, rng).unwrap();
                s += a;
            }
            s / 20_000.0
        };
        let low = avg(2, &mut rng);
        let high = avg(15, &mut rng);
        assert!(high > low);
        assert!(escobar_west_alpha_update(1.0, 0, 10, 2.0, 4.0, &mut rng).is_err());
        assert!(escobar_west_alpha_update(1.0, 11, 10, 2.0, 4.0, &mut rng).is_err());
    }

    #[test]
    fn atom_updates_keep_invariants() {
        let mut rng = substream(7, Stream::Chain);
        let base = NormalInvGamma::default();
        let mut st = CrpState::from_parts(vec![0, 1, 1, 0], vec![Atom::new(0.0, 1.0), Atom::new(3.0, 1.0)], 1.0).unwrap();
        update_atoms(&mut st, &[0.1, 2.9, 3.1, -0.2], &base, &mut rng).unwrap();
        st.check_invariants().unwrap();
        assert!(update_atoms(&mut st, &[0.1], &base, &mut rng).is_err());
    }
}
