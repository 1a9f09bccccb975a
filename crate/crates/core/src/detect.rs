//! Elbow and order decisions of the form `argmin_k V(k) + λ·k`.
//!
//! UAED uses the chord slope `λ = V(0) / k_max`; the classical information
//! criteria plug in `log N`, `2` or `log log N`. Ties are resolved to the
//! largest minimizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{validate, CurveError, NormalizedCurve};

/// Relative tie tolerance on the objective range.
pub const TIE_RELATIVE: f64 = 1e-9;
/// Tie floor relative to the objective's natural magnitude.
pub const TIE_SCALE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("k_max is 0; the UAED slope V(0)/k_max is undefined")]
    DegenerateCurve,
    #[error("{criterion} needs at least {min} data points, got {n_data}")]
    InvalidN {
        criterion: &'static str,
        n_data: usize,
        min: usize,
    },
    #[error("alpha = {0} is a boundary value with no finite slope")]
    AlphaBoundary(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A penalty-slope policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    Uaed,
    Bic { n_data: usize },
    Aic,
    Hqic { n_data: usize },
    CustomLambda { lambda: f64 },
    AlphaUaed { alpha: f64 },
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Uaed => "UAED",
            Criterion::Bic { .. } => "BIC",
            Criterion::Aic => "AIC",
            Criterion::Hqic { .. } => "HQIC",
            Criterion::CustomLambda { .. } => "custom",
            Criterion::AlphaUaed { .. } => "alpha-UAED",
        }
    }

    /// Whether the slope depends on the curve through `V(0) / k_max`.
    pub fn is_uaed_family(&self) -> bool {
        matches!(self, Criterion::Uaed | Criterion::AlphaUaed { .. })
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::Uaed | Criterion::Aic => f.write_str(self.name()),
            Criterion::Bic { n_data } | Criterion::Hqic { n_data } => {
                write!(f, "{}(N={n_data})", self.name())
            }
            Criterion::CustomLambda { lambda } => write!(f, "lambda={lambda}"),
            Criterion::AlphaUaed { alpha } => write!(f, "alpha-UAED(alpha={alpha})"),
        }
    }
}

/// Outcome of an elbow search over `0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowResult {
    /// Chosen index in local coordinates (`0..=k_max`).
    pub k_star: usize,
    /// `C(k)` for `k = 0..=k_max`.
    pub costs: Vec<f64>,
    /// All indices within the tie tolerance of the minimum, ascending.
    pub ties: Vec<usize>,
    /// Slope used for the penalty; infinite for `alpha = 0`.
    pub lambda_used: f64,
    /// `k_min` of the underlying curve.
    pub offset: usize,
}

impl ElbowResult {
    /// `k_star` in the caller's complexity units.
    pub fn reported_k_star(&self) -> usize {
        self.k_star + self.offset
    }

    pub fn reported_ties(&self) -> Vec<usize> {
        self.ties.iter().map(|k| k + self.offset).collect()
    }

    pub fn is_tied(&self) -> bool {
        self.ties.len() > 1
    }
}

/// Whether an objective is minimized or maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Indices whose objective lies within tolerance of the optimum.
///
/// The tolerance is `max(1e-9 * range, 1e-12 * scale)`, where `scale` is the
/// magnitude of the quantities the objective was computed from. Both terms
/// transform with the objective under positive affine maps, so equivalent
/// objectives produce the same tie set.
pub fn tie_set(objective: &[f64], scale: f64, sense: Sense) -> Vec<usize> {
    let (lo, hi) = objective
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let tol = (TIE_RELATIVE * (hi - lo)).max(TIE_SCALE_FLOOR * scale.abs());
    objective
        .iter()
        .enumerate()
        .filter(|(_, &v)| match sense {
            Sense::Minimize => v <= lo + tol,
            Sense::Maximize => v >= hi - tol,
        })
        .map(|(k, _)| k)
        .collect()
}

/// The penalty slope `λ` of a criterion on a given curve.
pub fn penalty_slope(criterion: &Criterion, curve: &NormalizedCurve) -> Result<f64, DetectError> {
    match *criterion {
        Criterion::Uaed => uaed_slope(curve),
        Criterion::Bic { n_data } => {
            if n_data < 1 {
                return Err(DetectError::InvalidN {
                    criterion: "BIC",
                    n_data,
                    min: 1,
                });
            }
            Ok((n_data as f64).ln())
        }
        Criterion::Aic => Ok(2.0),
        Criterion::Hqic { n_data } => {
            // log log N is negative for N = 2, which would reward complexity
            if n_data < 3 {
                return Err(DetectError::InvalidN {
                    criterion: "HQIC",
                    n_data,
                    min: 3,
                });
            }
            Ok((n_data as f64).ln().ln())
        }
        Criterion::CustomLambda { lambda } => {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(DetectError::InvalidLambda(lambda));
            }
            Ok(lambda)
        }
        Criterion::AlphaUaed { alpha } => {
            check_alpha(alpha)?;
            if alpha == 0.0 || alpha == 1.0 {
                return Err(DetectError::AlphaBoundary(alpha));
            }
            Ok((1.0 - alpha) / alpha * uaed_slope(curve)?)
        }
    }
}

fn uaed_slope(curve: &NormalizedCurve) -> Result<f64, DetectError> {
    if curve.k_max() == 0 {
        return Err(DetectError::DegenerateCurve);
    }
    Ok(curve.v0() / curve.k_max() as f64)
}

fn check_alpha(alpha: f64) -> Result<(), DetectError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(DetectError::InvalidAlpha(alpha))
    }
}

/// `C(k) = V(k) + λ·k` over the support `0..=k_max`.
pub fn cost_vector(curve: &NormalizedCurve, lambda: f64) -> Vec<f64> {
    curve
        .support()
        .iter()
        .enumerate()
        .map(|(k, &v)| v + lambda * k as f64)
        .collect()
}

/// Chooses `k*` for `criterion`, resolving ties to the largest minimizer.
pub fn elbow(curve: &NormalizedCurve, criterion: &Criterion) -> Result<ElbowResult, DetectError> {
    let k_max = curve.k_max();
    let offset = curve.offset();

    if k_max == 0 {
        // nothing drops: every criterion keeps the empty model
        let lambda_used = match criterion {
            c if c.is_uaed_family() => {
                if let Criterion::AlphaUaed { alpha } = c {
                    check_alpha(*alpha)?;
                }
                0.0
            }
            c => penalty_slope(c, curve)?,
        };
        return Ok(ElbowResult {
            k_star: 0,
            costs: vec![curve.values()[0]],
            ties: vec![0],
            lambda_used,
            offset,
        });
    }

    let (costs, lambda_used) = match *criterion {
        Criterion::AlphaUaed { alpha: 0.0 } => {
            let slope = uaed_slope(curve)?;
            let costs = (0..=k_max).map(|k| slope * k as f64).collect();
            (costs, f64::INFINITY)
        }
        Criterion::AlphaUaed { alpha: 1.0 } => (curve.support().to_vec(), 0.0),
        ref c => {
            let lambda = penalty_slope(c, curve)?;
            (cost_vector(curve, lambda), lambda)
        }
    };

    let scale = if lambda_used.is_finite() {
        curve.v0().max(lambda_used * k_max as f64)
    } else {
        curve.v0()
    };
    let ties = tie_set(&costs, scale, Sense::Minimize);
    let k_star = *ties.last().expect("non-empty support");

    Ok(ElbowResult {
        k_star,
        costs,
        ties,
        lambda_used,
        offset,
    })
}

/// Validates, normalizes and runs [`elbow`] in one step.
pub fn elbow_on_raw(raw: &[f64], criterion: &Criterion, tol: f64) -> Result<ElbowResult, DetectError> {
    let curve = validate(raw, tol)?;
    elbow(&curve.normalize(), criterion)
}
