//! Scalar adaptive random-walk Metropolis-Hastings.
//!
//! The scale adaptation follows Shaby and Wells: every `interval` proposals the
//! proposal sd is multiplied by `exp(gamma2 * (rate - target))` with
//! `gamma2 = 10 / (adaptations + 3)^0.8`, then the counters reset.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ADAPT_INTERVAL: u32 = 200;
pub const TARGET_ACCEPTANCE: f64 = 0.44;
const ADAPT_EXPONENT: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMhState {
    scale: f64,
    interval: u32,
    target: f64,
    adapting: bool,
    since_adapt: u32,
    accepted_since_adapt: u32,
    times_adapted: u32,
    total_proposed: u64,
    total_accepted: u64,
}

impl Default for AdaptiveMhState {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// Result of one MH step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhStep {
    pub value: f64,
    pub log_density: f64,
    pub accepted: bool,
}

impl AdaptiveMhState {
    pub fn new(initial_scale: f64) -> Self {
        Self {
            scale: initial_scale,
            interval: ADAPT_INTERVAL,
            target: TARGET_ACCEPTANCE,
            adapting: true,
            since_adapt: 0,
            accepted_since_adapt: 0,
            times_adapted: 0,
            total_proposed: 0,
            total_accepted: 0,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn times_adapted(&self) -> u32 {
        self.times_adapted
    }

    pub fn is_adapting(&self) -> bool {
        self.adapting
    }

    /// Stops adaptation; the kernel is fixed from here on.
    pub fn freeze(&mut self) {
        self.adapting = false;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.total_proposed == 0 {
            0.0
        } else {
            self.total_accepted as f64 / self.total_proposed as f64
        }
    }

    pub fn reset_counts(&mut self) {
        self.total_proposed = 0;
        self.total_accepted = 0;
    }

    /// Random-walk increment at the current scale.
    pub fn propose_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.scale * z
    }

    /// Metropolis accept/reject given the log target at the current and proposed values.
    pub fn accept<R: Rng + ?Sized>(&self, current_lp: f64, proposed_lp: f64, rng: &mut R) -> bool {
        let log_ratio = proposed_lp - current_lp;
        if log_ratio.is_nan() {
            return false;
        }
        log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio
    }

    /// Book-keeping after a proposal; adapts the scale at interval boundaries.
    pub fn record(&mut self, accepted: bool) {
        self.total_proposed += 1;
        if accepted {
            self.total_accepted += 1;
        }
        if !self.adapting {
            return;
        }
        self.since_adapt += 1;
        if accepted {
            self.accepted_since_adapt += 1;
        }
        if self.since_adapt == self.interval {
            let rate = self.accepted_since_adapt as f64 / self.interval as f64;
            self.times_adapted += 1;
            let gamma1 = 1.0 / (self.times_adapted as f64 + 3.0).powf(ADAPT_EXPONENT);
            let gamma2 = 10.0 * gamma1;
            self.scale *= (gamma2 * (rate - self.target)).exp();
            self.since_adapt = 0;
            self.accepted_since_adapt = 0;
        }
    }

    /// One step when the caller already knows the log target at `current`.
    pub fn step_from<R, F>(&mut self, current: f64, current_lp: f64, mut target: F, rng: &mut R) -> MhStep
    where
        R: Rng + ?Sized,
        F: FnMut(f64) -> f64,
    {
        let proposal = current + self.propose_increment(rng);
        let proposed_lp = target(proposal);
        let accepted = self.accept(current_lp, proposed_lp, rng);
        self.record(accepted);
        if accepted {
            MhStep {
                value: proposal,
                log_density: proposed_lp,
                accepted,
            }
        } else {
            MhStep {
                value: current,
                log_density: current_lp,
                accepted,
            }
        }
    }
}

/// One adaptive random-walk MH step on a scalar target.
pub fn adaptive_rw_mh_step<R, F>(
    mut target_log_density: F,
    current: f64,
    state: &mut AdaptiveMhState,
    rng: &mut R,
) -> Result<(f64, bool)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
{
    let current_lp = target_log_density(current);
    if !current_lp.is_finite() {
        return Err(Error::NonFinite(format!(
            "log target is {current_lp} at the current value {current}"
        )));
    }
    let step = state.step_from(current, current_lp, target_log_density, rng);
    Ok((step.value, step.accepted))
}
