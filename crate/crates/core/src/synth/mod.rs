//! Synthetic order-selection and clustering scenarios and their error curves.

pub mod ar;
pub mod cluster;
mod lstsq;
pub mod poly;

use thiserror::Error;

use crate::curve::CurveError;

pub use ar::{ar_v_curve, ar_v_curve_with, gen_ar, ArScenario, ArWindow, CoefficientList};
pub use cluster::{cluster_v_curve, kmeans, sample_mixture, Gaussian2, KMeansFit, MixtureScenario};
pub use poly::{fit_poly, gen_poly, gen_poly_at, poly_v_curve, PolyData, PolyScenario};

/// Residual sums of squares below `RSS_FLOOR * n` are clamped before the log.
pub const RSS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("simulated series diverged at sample {index}")]
    Unstable { index: usize },
    #[error("regressors for order {order} are rank deficient")]
    SingularFit { order: usize },
    #[error("need more than {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// `n · log(max(rss, floor) / m)` for every entry of `rss`.
pub(crate) fn log_likelihood_curve(rss: &[f64], n: f64, m: f64) -> Vec<f64> {
    rss.iter()
        .map(|&r| n * (r.max(RSS_FLOOR * m) / m).ln())
        .collect()
}
