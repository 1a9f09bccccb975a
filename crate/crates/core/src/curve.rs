//! Error curves: validation, clamping and min-subtraction.
//!
//! An error curve is a non-increasing score `V(0), …, V(K)` indexed by model
//! complexity. Everything downstream works on the [`NormalizedCurve`], whose
//! minimum is exactly zero and whose `k_max` marks the first index where the
//! curve stops dropping.

use thiserror::Error;

/// Relative monotonicity tolerance, scaled by `V(0) - V(K)`.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;
/// Absolute floor for the monotonicity tolerance.
pub const ABSOLUTE_TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("error curve is empty")]
    Empty,
    #[error("value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("curve rises by {rise} between index {index} and {next} (tolerance {tol})", next = index + 1)]
    NonMonotone { index: usize, rise: f64, tol: f64 },
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
}

/// A validated, exactly non-increasing error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    values: Vec<f64>,
    offset: usize,
}

/// Default tolerance for `raw`: `1e-9 * (V(0) - V(K))` floored at `1e-12`.
pub fn default_tolerance(raw: &[f64]) -> f64 {
    match (raw.first(), raw.last()) {
        (Some(&first), Some(&last)) if first.is_finite() && last.is_finite() => {
            (RELATIVE_TOLERANCE * (first - last)).max(ABSOLUTE_TOLERANCE_FLOOR)
        }
        _ => ABSOLUTE_TOLERANCE_FLOOR,
    }
}

/// Validates `raw` as an error curve.
///
/// Rises of at most `tol` between consecutive values are repaired with a
/// running minimum, so the stored curve is exactly non-increasing. Larger
/// rises are rejected.
pub fn validate(raw: &[f64], tol: f64) -> Result<ErrorCurve, CurveError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CurveError::InvalidTolerance(tol));
    }
    if raw.is_empty() {
        return Err(CurveError::Empty);
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(CurveError::NonFinite { index, value });
    }
    for (index, pair) in raw.windows(2).enumerate() {
        let rise = pair[1] - pair[0];
        if rise > tol {
            return Err(CurveError::NonMonotone { index, rise, tol });
        }
    }
    let mut running = f64::INFINITY;
    let values = raw
        .iter()
        .map(|&v| {
            running = running.min(v);
            running
        })
        .collect();
    Ok(ErrorCurve { values, offset: 0 })
}

impl ErrorCurve {
    /// Validates with [`default_tolerance`].
    pub fn new(raw: &[f64]) -> Result<Self, CurveError> {
        validate(raw, default_tolerance(raw))
    }

    /// Records that index 0 of this curve corresponds to complexity `k_min`.
    pub fn with_offset(mut self, k_min: usize) -> Self {
        self.offset = k_min;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Complexity of the first stored value (`k_min`).
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest complexity index `K` in local coordinates.
    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn normalize(&self) -> NormalizedCurve {
        normalize(self)
    }
}

/// Min-subtracted curve with its effective support `0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCurve {
    values: Vec<f64>,
    k_max: usize,
    offset: usize,
}

/// Subtracts the minimum and locates `k_max`, the first index attaining it.
///
/// Values within `RELATIVE_TOLERANCE` of the range above the minimum are
/// set to exactly zero, so rounding noise in a flat tail does not move
/// `k_max` when the curve is rescaled or shifted.
pub fn normalize(curve: &ErrorCurve) -> NormalizedCurve {
    let raw = curve.values();
    // stored curves are non-increasing, so the last value is the minimum
    let min = raw[raw.len() - 1];
    let floor = RELATIVE_TOLERANCE * (raw[0] - min);
    let values: Vec<f64> = raw
        .iter()
        .map(|&v| if v - min <= floor { 0.0 } else { v - min })
        .collect();
    let k_max = values
        .iter()
        .position(|&v| v == 0.0)
        .expect("normalized curve attains zero");
    NormalizedCurve {
        values,
        k_max,
        offset: curve.offset(),
    }
}

impl NormalizedCurve {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First index of the minimum; later components produce no further drop.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Normalized value at index 0.
    pub fn v0(&self) -> f64 {
        self.values[0]
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The values on the effective support `0..=k_max`.
    pub fn support(&self) -> &[f64] {
        &self.values[..=self.k_max]
    }
}
