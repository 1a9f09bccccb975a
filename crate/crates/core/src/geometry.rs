//! Geometric constructions around the chord from `(0, V(0))` to `(k_max, 0)`.
//!
//! Each construction (piecewise-linear area, vertical gap, horizontal gap,
//! orthogonal distance) is evaluated from its own closed form, so they act as
//! independent checks on the cost in [`crate::detect`].

use thiserror::Error;

use crate::curve::NormalizedCurve;
use crate::detect::{tie_set, ElbowResult, Sense};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("k_max is 0; the chord is undefined")]
    DegenerateCurve,
    #[error("index {k} is outside 0..={k_max}")]
    OutOfRange { k: usize, k_max: usize },
    #[error("derivative never reaches the chord slope on [0, k_max]")]
    NoRoot,
    #[error("invalid tangent problem: {0}")]
    InvalidInput(&'static str),
}

/// The straight line `v(k) = V(0) - (V(0) / k_max)·k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordFrame {
    pub v0: f64,
    pub k_max: f64,
}

impl ChordFrame {
    pub fn new(v0: f64, k_max: f64) -> Self {
        Self { v0, k_max }
    }

    pub fn from_curve(curve: &NormalizedCurve) -> Result<Self, GeometryError> {
        if curve.k_max() == 0 {
            return Err(GeometryError::DegenerateCurve);
        }
        Ok(Self::new(curve.v0(), curve.k_max() as f64))
    }

    pub fn slope(&self) -> f64 {
        -self.v0 / self.k_max
    }

    pub fn intercept(&self) -> f64 {
        self.v0
    }

    pub fn at(&self, k: f64) -> f64 {
        self.v0 + self.slope() * k
    }

    /// Angle between the chord and the horizontal axis.
    pub fn chord_angle(&self) -> f64 {
        (self.v0 / self.k_max).atan()
    }

    /// Signed distance from `(x, y)` to the chord line, positive on the side
    /// of the origin (below the chord).
    ///
    /// Uses the implicit form `v0·x + k_max·y - v0·k_max = 0`.
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        (self.v0 * self.k_max - self.v0 * x - self.k_max * y) / self.v0.hypot(self.k_max)
    }
}

fn checked(curve: &NormalizedCurve, k: usize) -> Result<(ChordFrame, f64), GeometryError> {
    let frame = ChordFrame::from_curve(curve)?;
    if k > curve.k_max() {
        return Err(GeometryError::OutOfRange {
            k,
            k_max: curve.k_max(),
        });
    }
    Ok((frame, curve.values()[k]))
}

/// Area under the two-segment approximation through `(k, V(k))`.
pub fn area_cost(curve: &NormalizedCurve, k: usize) -> Result<f64, GeometryError> {
    let (frame, vk) = checked(curve, k)?;
    let k = k as f64;
    let a1 = k * (frame.v0 - vk) / 2.0;
    let a2 = k * vk;
    let a3 = (frame.k_max - k) * vk / 2.0;
    Ok(a1 + a2 + a3)
}

/// Vertical gap `d(k) = v(k) - V(k)` between chord and curve.
pub fn vertical_distance(curve: &NormalizedCurve, k: usize) -> Result<f64, GeometryError> {
    let (frame, vk) = checked(curve, k)?;
    Ok(frame.at(k as f64) - vk)
}

/// Horizontal gap `r(k) = k' - k`, where the chord reaches `V(k)` at `k'`.
pub fn horizontal_distance(curve: &NormalizedCurve, k: usize) -> Result<f64, GeometryError> {
    let (frame, vk) = checked(curve, k)?;
    let k_prime = -(frame.k_max / frame.v0) * (vk - frame.v0);
    Ok(k_prime - k as f64)
}

/// Orthogonal distance from `(k, V(k))` to the chord, positive below it.
pub fn euclidean_distance(curve: &NormalizedCurve, k: usize) -> Result<f64, GeometryError> {
    let (frame, vk) = checked(curve, k)?;
    Ok(frame.signed_distance(k as f64, vk))
}

/// Which geometric construction to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Area,
    Vertical,
    Horizontal,
    Euclidean,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Area,
        Method::Vertical,
        Method::Horizontal,
        Method::Euclidean,
    ];
}

/// Elbow from a geometric construction; the area is minimized, the three
/// distances maximized. Ties resolve to the largest index.
pub fn elbow_by(method: Method, curve: &NormalizedCurve) -> Result<ElbowResult, GeometryError> {
    let frame = ChordFrame::from_curve(curve)?;
    let k_max = curve.k_max();
    let eval: fn(&NormalizedCurve, usize) -> Result<f64, GeometryError> = match method {
        Method::Area => area_cost,
        Method::Vertical => vertical_distance,
        Method::Horizontal => horizontal_distance,
        Method::Euclidean => euclidean_distance,
    };
    let objective = (0..=k_max)
        .map(|k| eval(curve, k))
        .collect::<Result<Vec<_>, _>>()?;
    // magnitude of each construction expressed in its own units
    let (scale, sense) = match method {
        Method::Area => (frame.v0 * frame.k_max / 2.0, Sense::Minimize),
        Method::Vertical => (frame.v0, Sense::Maximize),
        Method::Horizontal => (frame.k_max, Sense::Maximize),
        Method::Euclidean => (frame.v0 * frame.chord_angle().cos(), Sense::Maximize),
    };
    let ties = tie_set(&objective, scale, sense);
    let k_star = *ties.last().expect("non-empty support");
    Ok(ElbowResult {
        k_star,
        costs: objective,
        ties,
        lambda_used: frame.v0 / frame.k_max,
        offset: curve.offset(),
    })
}

/// Bisection settings for [`continuous_tangent_elbow`].
pub const TANGENT_TOLERANCE: f64 = 1e-10;
pub const TANGENT_MAX_ITERATIONS: usize = 200;

/// Solution of the continuous tangent condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentElbow {
    pub k: f64,
    /// The derivative matches the chord slope everywhere (linear curve).
    pub degenerate: bool,
}

/// Finds `k*` in `(0, k_max)` where `df(k*) = -v0 / k_max`.
///
/// `f` must be convex and strictly decreasing with `f(0) = v0` and
/// `f(k_max) = 0`, so `df` is increasing and bisection on
/// `df(k) + v0 / k_max` brackets a single root.
pub fn continuous_tangent_elbow<F, D>(
    f: F,
    df: D,
    k_max: f64,
    v0: f64,
    tol: f64,
) -> Result<TangentElbow, GeometryError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(k_max.is_finite() && k_max > 0.0) {
        return Err(GeometryError::InvalidInput("k_max must be positive"));
    }
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(GeometryError::InvalidInput("v0 must be positive"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(GeometryError::InvalidInput("tol must be positive"));
    }
    let endpoint_tol = 1e-9 * v0;
    if (f(0.0) - v0).abs() > endpoint_tol || f(k_max).abs() > endpoint_tol {
        return Err(GeometryError::InvalidInput("f must satisfy f(0) = v0 and f(k_max) = 0"));
    }

    let chord = v0 / k_max;
    let residual = |k: f64| df(k) + chord;
    let (mut lo, mut hi) = (0.0, k_max);
    let (r_lo, r_hi) = (residual(lo), residual(hi));

    if r_lo.abs() <= tol && r_hi.abs() <= tol {
        return Ok(TangentElbow {
            k: k_max / 2.0,
            degenerate: true,
        });
    }
    if r_lo > tol || r_hi < -tol {
        return Err(GeometryError::NoRoot);
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..TANGENT_MAX_ITERATIONS {
        mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() <= tol {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(TangentElbow {
        k: mid,
        degenerate: false,
    })
}
