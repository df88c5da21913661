//! MCMC kernels and the strategy matrix they are assembled into.

pub mod adaptive;
pub mod centered;
pub mod chain;
pub mod conjugate;
pub mod crp;
pub mod strategy;

pub use adaptive::{adaptive_rw_mh_step, AdaptiveMhState};
pub use centered::centered_pair_update;
pub use chain::{run_chain, AbilityState, Chain, ChainSettings, ChainState};
pub use conjugate::conjugate_normal_invgamma_update;
pub use crp::{crp_assignment_update, escobar_west_alpha_update, Atom, CrpState};
pub use strategy::{AbilityModel, Algorithm, ConstraintMode, Parameterization, StrategyConfig};
