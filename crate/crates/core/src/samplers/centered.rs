//! Joint (log slope, intercept) proposal that keeps the item logit fixed at the
//! current mean ability.
//!
//! A random-walk move `log lambda* = log lambda + e` is paired with
//! `gamma* = gamma + eta_bar (lambda - lambda*)`. For fixed `eta_bar` the map is a
//! shear in `(log lambda, gamma)`, so with the target written in those
//! coordinates the proposal is symmetric and no Hastings term is needed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::samplers::adaptive::AdaptiveMhState;

/// Deterministic part of the proposal for a given log-scale increment.
#[inline]
pub fn centered_proposal(log_slope: f64, intercept: f64, eta_bar: f64, increment: f64) -> (f64, f64) {
    let proposed = log_slope + increment;
    let gamma = intercept + eta_bar * (log_slope.exp() - proposed.exp());
    (proposed, gamma)
}

/// One centered MH step.
///
/// `target(log_slope, intercept)` is the log full conditional of the pair in
/// log-slope coordinates (likelihood plus priors). Returns the new pair and
/// whether the proposal was accepted.
pub fn centered_pair_update<R, F>(
    log_slope: f64,
    intercept: f64,
    eta_bar: f64,
    mut target: F,
    state: &mut AdaptiveMhState,
    rng: &mut R,
) -> Result<(f64, f64, bool)>
where
    R: Rng + ?Sized,
    F: FnMut(f64, f64) -> f64,
{
    let current_lp = target(log_slope, intercept);
    if !current_lp.is_finite() {
        return Err(Error::NonFinite(format!(
            "log target is {current_lp} at (log lambda = {log_slope}, gamma = {intercept})"
        )));
    }
    let (ls, g) = centered_proposal(log_slope, intercept, eta_bar, state.propose_increment(rng));
    let proposed_lp = target(ls, g);
    let accepted = state.accept(current_lp, proposed_lp, rng);
    state.record(accepted);
    Ok(if accepted { (ls, g, true) } else { (log_slope, intercept, false) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean, variance};
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    #[test]
    fn zero_increment_is_identity() {
        let (l, g) = centered_proposal(0.3, -1.2, 0.7, 0.0);
        assert_eq!((l, g), (0.3, -1.2));
    }

    #[test]
    fn centered_mean_leaves_intercept_alone() {
        let (_, g) = centered_proposal(0.3, -1.2, 0.0, 0.9);
        assert_eq!(g, -1.2);
    }

    proptest! {
        #[test]
        fn logit_at_mean_ability_is_preserved(
            ls in -2.0f64..2.0, g in -4.0f64..4.0, eta_bar in -3.0f64..3.0, e in -3.0f64..3.0
        ) {
            let (ls2, g2) = centered_proposal(ls, g, eta_bar, e);
            let before = ls.exp() * eta_bar + g;
            let after = ls2.exp() * eta_bar + g2;
            prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
        }

        #[test]
        fn proposal_is_reversible(
            ls in -2.0f64..2.0, g in -4.0f64..4.0, eta_bar in -3.0f64..3.0, e in -3.0f64..3.0
        ) {
            let (ls2, g2) = centered_proposal(ls, g, eta_bar, e);
            let (ls3, g3) = centered_proposal(ls2, g2, eta_bar, -e);
            prop_assert!((ls3 - ls).abs() < 1e-12);
            prop_assert!((g3 - g).abs() < 1e-9 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn samples_a_correlated_gaussian_target() {
        // Independent N(0.2, 0.3) on log lambda and N(-1, 2) on gamma: the sheared
        // random walk must still recover both marginals.
        let target = |ls: f64, g: f64| -0.5 * (ls - 0.2).powi(2) / 0.3 - 0.5 * (g + 1.0).powi(2) / 2.0;
        let mut rng = substream(9, Stream::Chain);
        let mut st = AdaptiveMhState::default();
        let mut gst = AdaptiveMhState::default();
        let (mut ls, mut g) = (0.0, 0.0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for t in 0..120_000 {
            (ls, g, _) = centered_pair_update(ls, g, 1.5, target, &mut st, &mut rng).unwrap();
            let step = gst.step_from(g, target(ls, g), |x| target(ls, x), &mut rng);
            g = step.value;
            if t == 20_000 {
                st.freeze();
                gst.freeze();
            }
            if t > 20_000 {
                a.push(ls);
                b.push(g);
            }
        }
        assert!((mean(&a) - 0.2).abs() < 0.03, "{}", mean(&a));
        assert!((variance(&a) - 0.3).abs() < 0.03, "{}", variance(&a));
        assert!((mean(&b) + 1.0).abs() < 0.08, "{}", mean(&b));
        assert!((variance(&b) - 2.0).abs() < 0.2, "{}", variance(&b));
    }
}
