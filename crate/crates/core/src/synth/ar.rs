//! Autoregressive order selection: simulation and `-2 log ℓ` curves.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::lstsq::nested_rss;
use super::{log_likelihood_curve, SynthError};
use crate::curve::ErrorCurve;

/// Coefficients printed alongside the order-3 scenario.
pub const LISTED_ORDER_3: [f64; 4] = [1.0, -0.7408, 0.5488, 0.1];
/// Coefficients printed alongside the order-5 scenario.
pub const LISTED_ORDER_5: [f64; 6] = [1.0, -0.7408, 0.5488, 0.1, -0.4066, 0.3012];

/// Magnitude beyond which a simulated series counts as diverged.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// `θ_i = (-1)^(i-1) · exp(-0.3 (i-1))` for `i = 1..=order`.
pub fn formula_coefficients(order: usize) -> Vec<f64> {
    (0..order)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (-0.3 * i as f64).exp()
        })
        .collect()
}

/// Which coefficient list drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientList {
    /// Generated by the closed-form rule; the model order equals `true_order`.
    #[default]
    Formula,
    /// The values as printed, which carry one extra coefficient.
    Listed,
}

/// How the AR regressions are windowed when building `V(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArWindow {
    /// Forward and backward prediction over the samples available to each
    /// order; `V(k) = T log(RSS_k / 2T)`.
    #[default]
    ForwardBackward,
    /// Forward prediction on the common sample `t = K+1..T` for every order.
    Common,
    /// Forward prediction on all `T` samples with zero pre-sample values.
    ZeroPadded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArScenario {
    pub true_order: usize,
    pub sigma_eps: f64,
    pub length: usize,
    pub max_order: usize,
    #[serde(default)]
    pub coefficients: CoefficientList,
    #[serde(default)]
    pub window: ArWindow,
    pub burn_in: usize,
}

impl ArScenario {
    pub const DEFAULT_MAX_ORDER: usize = 100;
    pub const DEFAULT_BURN_IN: usize = 500;

    pub fn new(true_order: usize, sigma_eps: f64, length: usize) -> Self {
        Self {
            true_order,
            sigma_eps,
            length,
            max_order: Self::DEFAULT_MAX_ORDER,
            coefficients: CoefficientList::Formula,
            window: ArWindow::ForwardBackward,
            burn_in: Self::DEFAULT_BURN_IN,
        }
    }

    pub fn coefficient_values(&self) -> Result<Vec<f64>, SynthError> {
        match self.coefficients {
            CoefficientList::Formula => Ok(formula_coefficients(self.true_order)),
            CoefficientList::Listed => match self.true_order {
                3 => Ok(LISTED_ORDER_3.to_vec()),
                5 => Ok(LISTED_ORDER_5.to_vec()),
                p => Err(SynthError::InvalidScenario(format!(
                    "no printed coefficient list for order {p}"
                ))),
            },
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.sigma_eps.is_finite() && self.sigma_eps >= 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "noise standard deviation must be non-negative, got {}",
                self.sigma_eps
            )));
        }
        if self.length <= self.max_order + 1 {
            return Err(SynthError::InsufficientData {
                needed: self.max_order + 1,
                got: self.length,
            });
        }
        self.coefficient_values().map(|_| ())
    }
}

/// Largest modulus among the roots of `z^p - θ_1 z^{p-1} - … - θ_p`.
///
/// The recursion is stable when this is below one.
pub fn spectral_radius(coefficients: &[f64]) -> f64 {
    let p = coefficients.len();
    if p == 0 {
        return 0.0;
    }
    let companion = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            coefficients[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Simulates `y_t = Σ θ_i y_{t-i} + ε_t` from zero initial conditions,
/// discarding the burn-in.
pub fn gen_ar(scenario: &ArScenario, seed: u64) -> Result<Vec<f64>, SynthError> {
    scenario.validate()?;
    let coefficients = scenario.coefficient_values()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate(
        &coefficients,
        scenario.sigma_eps,
        scenario.length,
        scenario.burn_in,
        &mut rng,
    )
}

pub(crate) fn simulate<R: rand::Rng>(
    coefficients: &[f64],
    sigma: f64,
    length: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<f64>, SynthError> {
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| SynthError::InvalidScenario(format!("noise: {e}")))?;
    let total = burn_in + length;
    let mut y = Vec::with_capacity(total);
    for t in 0..total {
        let ar: f64 = coefficients
            .iter()
            .enumerate()
            .take_while(|(i, _)| *i < t)
            .map(|(i, th)| th * y[t - 1 - i])
            .sum();
        let value = ar + noise.sample(rng);
        if !value.is_finite() || value.abs() > OVERFLOW_GUARD {
            return Err(SynthError::Unstable { index: t });
        }
        y.push(value);
    }
    Ok(y.split_off(burn_in))
}

/// `V(k)` for `k = 0..=max_order` with the default forward-backward window.
pub fn ar_v_curve(y: &[f64], max_order: usize) -> Result<ErrorCurve, SynthError> {
    ar_v_curve_with(y, max_order, ArWindow::ForwardBackward)
}

/// `V(k) = n log(RSS_k / m)`, the profile Gaussian `-2 log ℓ` up to a constant.
///
/// `V(0)` uses the power of the signal over the same residual terms.
pub fn ar_v_curve_with(y: &[f64], max_order: usize, window: ArWindow) -> Result<ErrorCurve, SynthError> {
    let t = y.len();
    if t <= max_order + 1 {
        return Err(SynthError::InsufficientData {
            needed: max_order + 1,
            got: t,
        });
    }
    let values = match window {
        ArWindow::ForwardBackward => {
            let rss = forward_backward_rss(y, max_order)?;
            log_likelihood_curve(&rss, t as f64, 2.0 * t as f64)
        }
        ArWindow::Common => {
            let n = t - max_order;
            let design = DMatrix::from_fn(n, max_order, |r, j| y[max_order + r - j - 1]);
            let target = DVector::from_column_slice(&y[max_order..]);
            let rss = nested_rss(design, &target).map_err(|order| SynthError::SingularFit { order })?;
            log_likelihood_curve(&rss, n as f64, n as f64)
        }
        ArWindow::ZeroPadded => {
            let design = DMatrix::from_fn(t, max_order, |r, j| if r > j { y[r - j - 1] } else { 0.0 });
            let target = DVector::from_column_slice(y);
            let rss = nested_rss(design, &target).map_err(|order| SynthError::SingularFit { order })?;
            log_likelihood_curve(&rss, t as f64, t as f64)
        }
    };
    Ok(ErrorCurve::new(&values)?)
}

/// Running sums `Σ_{s<m} y_s y_{s+d}` for every lag `d ≤ max_lag`.
struct LagProducts {
    prefix: Vec<Vec<f64>>,
}

impl LagProducts {
    fn new(y: &[f64], max_lag: usize) -> Self {
        let prefix = (0..=max_lag)
            .map(|d| {
                let mut acc = 0.0;
                let mut out = Vec::with_capacity(y.len() - d + 1);
                out.push(0.0);
                for s in 0..y.len() - d {
                    acc += y[s] * y[s + d];
                    out.push(acc);
                }
                out
            })
            .collect();
        Self { prefix }
    }

    /// `Σ_{s=a}^{b-1} y_s y_{s+d}`.
    fn sum(&self, d: usize, a: usize, b: usize) -> f64 {
        self.prefix[d][b] - self.prefix[d][a]
    }
}

/// Forward-backward residual sums for orders `0..=max_order`.
///
/// Order `k` stacks forward equations `y_t ~ y_{t-1..t-k}` for `t = k..T-1`
/// with backward equations `y_t ~ y_{t+1..t+k}` for `t = 0..T-1-k`; both
/// share the coefficients. Normal equations come from lag-product sums.
fn forward_backward_rss(y: &[f64], max_order: usize) -> Result<Vec<f64>, SynthError> {
    let t = y.len();
    let lags = LagProducts::new(y, max_order);
    // index 0 stands for the target, i ≥ 1 for the i-th lag
    let forward = |k: usize, i: usize, j: usize| {
        let (i, j) = (i.min(j), i.max(j));
        lags.sum(j - i, k - j, t - j)
    };
    let backward = |k: usize, i: usize, j: usize| {
        let (i, j) = (i.min(j), i.max(j));
        lags.sum(j - i, i, t - k + i)
    };
    let gram = |k: usize, i: usize, j: usize| forward(k, i, j) + backward(k, i, j);

    let mut rss = Vec::with_capacity(max_order + 1);
    rss.push(2.0 * lags.sum(0, 0, t));
    for k in 1..=max_order {
        let normal = DMatrix::from_fn(k, k, |i, j| gram(k, i + 1, j + 1));
        let rhs = DVector::from_fn(k, |i, _| gram(k, 0, i + 1));
        let chol = normal
            .cholesky()
            .ok_or(SynthError::SingularFit { order: k })?;
        let theta = chol.solve(&rhs);
        rss.push(gram(k, 0, 0) - theta.dot(&rhs));
    }
    Ok(rss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{elbow, Criterion};
    use approx::assert_relative_eq;

    fn noise_series(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        simulate(&[], 1.0, len, 0, &mut rng).unwrap()
    }

    #[test]
    fn formula_values() {
        let th = formula_coefficients(5);
        let expected = [1.0, -0.7408, 0.5488, -0.4066, 0.3012];
        for (a, b) in th.iter().zip(expected) {
            assert!((a - b).abs() < 5e-5, "{a} vs {b}");
        }
        assert!(spectral_radius(&formula_coefficients(3)) < 1.0);
        assert!(spectral_radius(&formula_coefficients(5)) < 1.0);
        assert!(spectral_radius(&LISTED_ORDER_3) < 1.0);
        assert!(spectral_radius(&LISTED_ORDER_5) < 1.0);
        assert!(spectral_radius(&[1.2]) > 1.0);
    }

    #[test]
    fn silent_zero_model() {
        let mut s = ArScenario::new(3, 0.0, 50);
        s.max_order = 5;
        assert!(gen_ar(&s, 1).unwrap().iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = simulate(&[0.0, 0.0], 0.0, 40, 10, &mut rng).unwrap();
        assert_eq!(y, vec![0.0; 40]);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = ArScenario::new(3, 0.5, 300);
        assert_eq!(gen_ar(&s, 42).unwrap(), gen_ar(&s, 42).unwrap());
        assert_ne!(gen_ar(&s, 42).unwrap(), gen_ar(&s, 43).unwrap());
    }

    #[test]
    fn variance_grows_with_noise() {
        let var = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        let mut low = ArScenario::new(3, 0.5, 400);
        low.max_order = 10;
        let mut high = low.clone();
        high.sigma_eps = 2.0;
        let wins = (0..100)
            .filter(|&seed| var(&gen_ar(&high, seed).unwrap()) > var(&gen_ar(&low, seed).unwrap()))
            .count();
        assert_eq!(wins, 100);
    }

    #[test]
    fn divergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            simulate(&[1.5], 1.0, 2000, 0, &mut rng),
            Err(SynthError::Unstable { .. })
        ));
    }

    #[test]
    fn listed_coefficients_only_for_known_orders() {
        let mut s = ArScenario::new(4, 1.0, 300);
        s.coefficients = CoefficientList::Listed;
        assert!(matches!(s.validate(), Err(SynthError::InvalidScenario(_))));
        s.true_order = 3;
        assert_eq!(s.coefficient_values().unwrap().len(), 4);
    }

    // Dense least squares on the explicitly stacked forward/backward system.
    fn stacked_rss(y: &[f64], k: usize) -> f64 {
        let t = y.len();
        let rows = 2 * (t - k);
        let x = DMatrix::from_fn(rows, k, |r, j| {
            if r < t - k {
                y[k + r - j - 1]
            } else {
                y[r - (t - k) + j + 1]
            }
        });
        let target = DVector::from_fn(rows, |r, _| if r < t - k { y[k + r] } else { y[r - (t - k)] });
        let beta = x.clone().svd(true, true).solve(&target, 1e-14).unwrap();
        (target - x * beta).norm_squared()
    }

    #[test]
    fn forward_backward_matches_stacked_oracle() {
        let mut s = ArScenario::new(3, 0.7, 60);
        s.max_order = 12;
        let y = gen_ar(&s, 5).unwrap();
        let rss = forward_backward_rss(&y, 12).unwrap();
        assert_relative_eq!(rss[0], 2.0 * y.iter().map(|v| v * v).sum::<f64>(), max_relative = 1e-12);
        for (k, &r) in rss.iter().enumerate().skip(1) {
            assert_relative_eq!(r, stacked_rss(&y, k), max_relative = 1e-8);
        }
    }

    #[test]
    fn curves_are_non_increasing_for_every_window() {
        let s = ArScenario::new(5, 1.0, 400);
        for seed in 0..5 {
            let y = gen_ar(&s, seed).unwrap();
            for window in [ArWindow::ForwardBackward, ArWindow::Common, ArWindow::ZeroPadded] {
                let c = ar_v_curve_with(&y, 30, window).unwrap();
                assert_eq!(c.len(), 31);
                assert!(c.values().iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn v0_is_signal_power() {
        let y = noise_series(9, 200);
        let power = y.iter().map(|v| v * v).sum::<f64>() / 200.0;
        let c = ar_v_curve(&y, 10).unwrap();
        assert_relative_eq!(c.values()[0], 200.0 * power.ln(), max_relative = 1e-12);
        let c = ar_v_curve_with(&y, 10, ArWindow::Common).unwrap();
        let window_power = y[10..].iter().map(|v| v * v).sum::<f64>() / 190.0;
        assert_relative_eq!(c.values()[0], 190.0 * window_power.ln(), max_relative = 1e-12);
    }

    #[test]
    fn recovers_true_order_with_long_series() {
        let s = ArScenario::new(3, 0.5, 2000);
        let y = gen_ar(&s, 11).unwrap();
        let curve = ar_v_curve(&y, 100).unwrap().normalize();
        assert_eq!(elbow(&curve, &Criterion::Uaed).unwrap().k_star, 3);
        assert_eq!(elbow(&curve, &Criterion::Bic { n_data: 2000 }).unwrap().k_star, 3);
    }

    #[test]
    fn white_noise_bic_keeps_empty_model() {
        let zeros = (0..100u64)
            .filter(|&seed| {
                let y = noise_series(1000 + seed, 400);
                let curve = ar_v_curve(&y, 20).unwrap().normalize();
                elbow(&curve, &Criterion::Bic { n_data: 400 }).unwrap().k_star == 0
            })
            .count();
        assert!(zeros > 50, "{zeros}");
    }

    #[test]
    fn residual_sums_never_increase() {
        for (order, sigma, len) in [(3, 0.5, 200), (5, 1.0, 400), (3, 0.5, 2000)] {
            let s = ArScenario::new(order, sigma, len);
            for seed in 0..10 {
                let y = gen_ar(&s, seed).unwrap();
                let fb = forward_backward_rss(&y, 100).unwrap();
                assert!(fb.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "seed {seed}");
                let n = len - 100;
                let design = DMatrix::from_fn(n, 100, |r, j| y[100 + r - j - 1]);
                let common = nested_rss(design, &DVector::from_column_slice(&y[100..])).unwrap();
                assert!(common.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            ar_v_curve(&[1.0; 10], 9),
            Err(SynthError::InsufficientData { .. })
        ));
    }
}
