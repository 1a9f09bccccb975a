//! Polynomial regression order selection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::lstsq::{nested_rss, solve};
use super::{log_likelihood_curve, SynthError};
use crate::curve::ErrorCurve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyScenario {
    pub samples: usize,
    /// Coefficients of `1, x, x², …`.
    pub coefficients: Vec<f64>,
    pub sigma: f64,
    /// Inputs are drawn from `U[-input_half_width, input_half_width]`.
    pub input_half_width: f64,
    pub max_order: usize,
}

impl Default for PolyScenario {
    fn default() -> Self {
        Self {
            samples: 100,
            coefficients: vec![4.05, -2.025, -2.225, 0.1, 0.1],
            sigma: 1.0,
            input_half_width: 5.0,
            max_order: 10,
        }
    }
}

impl PolyScenario {
    /// Degree of the generating polynomial.
    pub fn true_order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.coefficients.is_empty() {
            return Err(SynthError::InvalidScenario("no coefficients".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(SynthError::InvalidScenario(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(self.input_half_width.is_finite() && self.input_half_width > 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "input range must be positive, got {}",
                self.input_half_width
            )));
        }
        if self.samples <= self.max_order + 1 {
            return Err(SynthError::InsufficientData { needed: self.max_order + 2, got: self.samples });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Evaluates `Σ c_j x^j` by Horner's rule.
pub fn eval_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn gen_poly(scenario: &PolyScenario, seed: u64) -> Result<PolyData, SynthError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = scenario.input_half_width;
    let inputs = Uniform::new_inclusive(-w, w).map_err(|e| SynthError::InvalidScenario(e.to_string()))?;
    let x: Vec<f64> = (0..scenario.samples).map(|_| rng.sample(inputs)).collect();
    respond(scenario, x, &mut rng)
}

/// Draws responses at fixed inputs.
pub fn gen_poly_at(scenario: &PolyScenario, x: &[f64], seed: u64) -> Result<PolyData, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    respond(scenario, x.to_vec(), &mut rng)
}

fn respond<R: Rng>(scenario: &PolyScenario, x: Vec<f64>, rng: &mut R) -> Result<PolyData, SynthError> {
    let noise = Normal::new(0.0, scenario.sigma).map_err(|e| SynthError::InvalidScenario(e.to_string()))?;
    let y = x
        .iter()
        .map(|&xi| eval_poly(&scenario.coefficients, xi) + noise.sample(rng))
        .collect();
    Ok(PolyData { x, y })
}

fn input_scale(x: &[f64]) -> f64 {
    let s = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

// monomials of x / max|x| keep the basis well conditioned up to order 10
fn vandermonde(x: &[f64], order: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), order + 1, |i, j| (x[i] / scale).powi(j as i32))
}

/// `V(k) = N log(RSS_k / N)` where order `k` fits `1, x, …, x^k`.
pub fn poly_v_curve(data: &PolyData, max_order: usize) -> Result<ErrorCurve, SynthError> {
    let n = data.x.len();
    if data.y.len() != n {
        return Err(SynthError::InvalidScenario(format!("{} inputs but {} responses", n, data.y.len())));
    }
    if n <= max_order + 1 {
        return Err(SynthError::InsufficientData { needed: max_order + 2, got: n });
    }
    let design = vandermonde(&data.x, max_order, input_scale(&data.x));
    let y = DVector::from_column_slice(&data.y);
    let rss = nested_rss(design, &y).map_err(|cols| SynthError::SingularFit { order: cols - 1 })?;
    let values = log_likelihood_curve(&rss[1..], n as f64, n as f64);
    Ok(ErrorCurve::new(&values)?)
}

/// Least-squares coefficients of `1, x, …, x^order` in the raw input scale.
pub fn fit_poly(data: &PolyData, order: usize) -> Result<Vec<f64>, SynthError> {
    let scale = input_scale(&data.x);
    let design = vandermonde(&data.x, order, scale);
    let y = DVector::from_column_slice(&data.y);
    let beta = solve(design, &y).map_err(|cols| SynthError::SingularFit { order: cols - 1 })?;
    Ok(beta.iter().enumerate().map(|(j, b)| b / scale.powi(j as i32)).collect())
}
