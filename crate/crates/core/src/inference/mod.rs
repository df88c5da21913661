//! Posterior summaries of fitted archives: latent density estimates, DP measure
//! draws, percentiles, WAIC and error metrics.

pub mod density;
pub mod measure;
pub mod metrics;
pub mod percentiles;
pub mod waic;

pub use density::{
    crp_predictive_density_estimate, density_from_archive, parametric_density_estimate, CrpDraw, DensityEstimate,
};
pub use measure::{sample_dp_measure, MeasureSample};
pub use metrics::{error_metrics, ErrorMetrics};
pub use percentiles::{percentile_estimates, PercentileSummary};
pub use waic::{waic, Waic, WaicAccumulator};
