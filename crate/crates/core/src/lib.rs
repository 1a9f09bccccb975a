//! Elbow detection and information-criterion order selection over
//! non-increasing error curves.
//!
//! The core decision is `k* = argmax argmin_k V(k) + λ·k` on a normalized
//! curve. UAED sets `λ = V(0) / k_max`, the slope of the chord joining the
//! curve's endpoints; [`geometry`] computes the same elbow via areas and
//! distances to that chord.

pub mod bench;
pub mod curve;
pub mod detect;
pub mod geometry;
pub mod seed;
pub mod synth;

pub use curve::{validate, CurveError, ErrorCurve, NormalizedCurve};
pub use detect::{elbow, elbow_on_raw, Criterion, DetectError, ElbowResult};
pub use geometry::{continuous_tangent_elbow, elbow_by, GeometryError, Method as GeometricMethod};
