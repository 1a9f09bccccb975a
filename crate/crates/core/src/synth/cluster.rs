//! Gaussian-mixture data and k-means inner-variance curves.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SynthError, RSS_FLOOR};
use crate::curve::{validate, ErrorCurve, ABSOLUTE_TOLERANCE_FLOOR};
use crate::seed::derive_seed;

/// Lloyd iteration cap.
pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Accepted rise of a single-restart log-variance curve, relative to its
/// range. Averaging over `r` restarts divides it by `sqrt(r)`.
///
/// Restart averages of a local search are only monotone up to Monte-Carlo
/// noise. On the five-component mixture single restarts rise by up to about
/// 3.5% of the range and 20-restart averages did not rise at all.
pub const CLUSTER_RELATIVE_TOLERANCE: f64 = 5e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    /// Row-major `[[s11, s12], [s21, s22]]`.
    pub covariance: [[f64; 2]; 2],
}

impl Gaussian2 {
    fn cholesky(&self) -> Option<Matrix2<f64>> {
        let c = self.covariance;
        if c[0][1] != c[1][0] {
            return None;
        }
        Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1])
            .cholesky()
            .map(|ch| ch.l())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureScenario {
    pub points: usize,
    pub components: Vec<Gaussian2>,
    pub max_index: usize,
    pub restarts: usize,
}

impl Default for MixtureScenario {
    fn default() -> Self {
        let g = |mean: [f64; 2], covariance: [[f64; 2]; 2]| Gaussian2 { mean, covariance };
        Self {
            points: 2500,
            components: vec![
                g([3.0, 0.0], [[0.3, 0.0], [0.0, 2.0]]),
                g([14.0, 5.0], [[1.5, 0.7], [0.7, 1.5]]),
                g([-5.0, -10.0], [[1.5, 0.7], [0.7, 1.5]]),
                g([10.0, -10.0], [[1.5, 0.0], [0.0, 1.5]]),
                g([-5.0, 5.0], [[1.0, -0.8], [-0.8, 1.0]]),
            ],
            max_index: 50,
            restarts: 200,
        }
    }
}

impl MixtureScenario {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.components.is_empty() || self.points == 0 {
            return Err(SynthError::InvalidScenario("mixture needs components and points".into()));
        }
        if self.restarts == 0 {
            return Err(SynthError::InvalidScenario("restarts must be at least 1".into()));
        }
        if self.max_index + 1 > self.points {
            return Err(SynthError::InsufficientData { needed: self.max_index + 1, got: self.points });
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.cholesky().is_none() {
                return Err(SynthError::InvalidScenario(format!(
                    "covariance of component {i} is not symmetric positive definite"
                )));
            }
        }
        Ok(())
    }
}

/// Draws points with equal component weights.
pub fn sample_mixture(scenario: &MixtureScenario, seed: u64) -> Result<Vec<[f64; 2]>, SynthError> {
    scenario.validate()?;
    let factors: Vec<Matrix2<f64>> = scenario.components.iter().filter_map(Gaussian2::cholesky).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..scenario.points)
        .map(|_| {
            let j = rng.random_range(0..factors.len());
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            let l = &factors[j];
            let m = scenario.components[j].mean;
            [m[0] + l[(0, 0)] * z0, m[1] + l[(1, 0)] * z0 + l[(1, 1)] * z1]
        })
        .collect();
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<const D: usize> {
    pub assignment: Vec<usize>,
    pub centroids: Vec<[f64; D]>,
    /// `Σ_j var(j)` with `var(j) = SSE_j / n`, i.e. the total within-cluster
    /// sum of squares over the number of points.
    pub inner_variance: f64,
    pub iterations: usize,
}

#[inline]
fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for d in 0..D {
        let t = a[d] - b[d];
        s += t * t;
    }
    s
}

fn plus_plus_seeding<const D: usize, R: Rng>(points: &[[f64; D]], k: usize, rng: &mut R) -> Vec<[f64; D]> {
    let n = points.len();
    // greedy variant: draw several D² candidates per step and keep the one
    // that lowers the potential most
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    let mut candidate = vec![0.0; n];
    let mut best = vec![0.0; n];
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            // every point already coincides with a centroid
            centroids.push(points[rng.random_range(0..n)]);
            continue;
        }
        let mut best_pick = None;
        let mut best_potential = f64::INFINITY;
        for _ in 0..trials {
            let pick = sample_weighted(&nearest, total, rng);
            let c = points[pick];
            let mut potential = 0.0;
            for ((w, p), out) in nearest.iter().zip(points).zip(candidate.iter_mut()) {
                *out = w.min(dist2(p, &c));
                potential += *out;
            }
            if potential < best_potential {
                best_potential = potential;
                best_pick = Some(pick);
                std::mem::swap(&mut best, &mut candidate);
            }
        }
        let pick = best_pick.expect("at least one trial");
        centroids.push(points[pick]);
        std::mem::swap(&mut nearest, &mut best);
    }
    centroids
}

fn sample_weighted<R: Rng>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // rounding left the target past the end
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Lloyd's algorithm from greedy k-means++ seeding.
///
/// Iterates until the assignment stops changing or the iteration cap is
/// reached. A cluster that loses all its points is moved to the point
/// farthest from its current centroid.
pub fn kmeans<const D: usize>(points: &[[f64; D]], k: usize, seed: u64) -> Result<KMeansFit<D>, SynthError> {
    let n = points.len();
    if n == 0 {
        return Err(SynthError::InvalidScenario("no points".into()));
    }
    if k == 0 || k > n {
        return Err(SynthError::InvalidScenario(format!("cluster count {k} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeding(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; n];
    let mut sums = vec![[0.0; D]; k];
    let mut counts = vec![0usize; k];
    let mut iterations = 0;

    loop {
        let mut changed = false;
        for (a, p) in assignment.iter_mut().zip(points) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = dist2(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed || iterations == MAX_LLOYD_ITERATIONS {
            break;
        }
        iterations += 1;

        sums.iter_mut().for_each(|s| *s = [0.0; D]);
        counts.iter_mut().for_each(|c| *c = 0);
        for (&a, p) in assignment.iter().zip(points) {
            counts[a] += 1;
            for d in 0..D {
                sums[a][d] += p[d];
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for d in 0..D {
                    centroids[j][d] = sums[j][d] / counts[j] as f64;
                }
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&points[a], &centroids[assignment[a]])
                            .total_cmp(&dist2(&points[b], &centroids[assignment[b]]))
                    })
                    .unwrap_or(0);
                centroids[j] = points[far];
                counts[assignment[far]] -= 1;
                counts[j] = 1;
                assignment[far] = j;
            }
        }
    }

    let sse: f64 = assignment.iter().zip(points).map(|(&a, p)| dist2(p, &centroids[a])).sum();
    Ok(KMeansFit { assignment, centroids, inner_variance: sse / n as f64, iterations })
}

/// Restart-averaged inner variances for `1..=max_index+1` clusters.
///
/// Entry `k` corresponds to `k + 1` clusters. Restart `r` at index `k` uses
/// its own derived seed, so every entry is reproducible on its own.
pub fn averaged_inner_variance(
    points: &[[f64; 2]],
    max_index: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<f64>, SynthError> {
    if restarts == 0 {
        return Err(SynthError::InvalidScenario("restarts must be at least 1".into()));
    }
    (0..=max_index)
        .map(|k| {
            let stream = derive_seed(seed, k as u64);
            let mut total = 0.0;
            for r in 0..restarts {
                total += kmeans(points, k + 1, derive_seed(stream, r as u64))?.inner_variance;
            }
            Ok(total / restarts as f64)
        })
        .collect()
}

/// `V(k) = log Σ_{j=1}^{k+1} var(j)`, averaged over k-means restarts.
pub fn cluster_v_curve(
    points: &[[f64; 2]],
    max_index: usize,
    restarts: usize,
    seed: u64,
) -> Result<ErrorCurve, SynthError> {
    let variances = averaged_inner_variance(points, max_index, restarts, seed)?;
    let floor = RSS_FLOOR * variances[0].max(f64::MIN_POSITIVE);
    let values: Vec<f64> = variances.iter().map(|v| v.max(floor).ln()).collect();
    Ok(validate(&values, cluster_tolerance(&values, restarts))?)
}

/// Monotonicity tolerance for a curve averaged over `restarts` runs.
pub fn cluster_tolerance(values: &[f64], restarts: usize) -> f64 {
    let range = match (values.first(), values.last()) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };
    let spread = CLUSTER_RELATIVE_TOLERANCE / (restarts.max(1) as f64).sqrt();
    (spread * range).max(ABSOLUTE_TOLERANCE_FLOOR)
}
