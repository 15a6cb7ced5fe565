//! Fréchet functions and means: on the finite space itself, and on the
//! convex hull of its embedding under the `L²(η)` norm.

use serde::{Deserialize, Serialize};

use crate::embedding::{hull_point, sup_distance_unchecked, HullPoint};
use crate::error::{Error, Result};
use crate::measure::{ProbabilityMeasure, SampleBatch};
use crate::metric::Metric;
use crate::modified::{l2_eta_distance, l2_eta_dot};
use crate::par::Exec;
use crate::simplex::{PgdConfig, SimplexQuadratic};

/// Default relative tolerance for declaring two Fréchet values tied.
pub const TIE_TOL: f64 = 1e-9;

/// Which metric a computation runs under.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    #[default]
    D,
    DEta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub minimizers: Vec<usize>,
    pub min_value: f64,
    pub values: Vec<f64>,
    pub unique: bool,
}

impl FrechetResult {
    fn from_values(values: Vec<f64>, tol: f64) -> Self {
        let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let slack = tol * min_value.abs();
        let minimizers: Vec<usize> = (0..values.len()).filter(|&p| values[p] - min_value <= slack).collect();
        let unique = minimizers.len() == 1;
        Self { minimizers, min_value, values, unique }
    }

    /// Lowest-index minimizer.
    pub fn representative(&self) -> usize {
        self.minimizers[0]
    }
}

/// `f(p) = Σ_z w_z d(p, z)²`.
pub fn frechet_function<M: Metric + ?Sized>(metric: &M, weights: &[f64], p: usize) -> f64 {
    metric.row(p).iter().zip(weights).map(|(d, w)| w * d * d).sum()
}

pub fn population_frechet_mean<M: Metric + ?Sized>(
    metric: &M,
    measure: &ProbabilityMeasure,
    tol: f64,
) -> Result<FrechetResult> {
    population_frechet_mean_with(metric, measure, tol, Exec::default())
}

/// Exact argmin of the Fréchet function over the points; all minimizers
/// within relative tolerance `tol` are returned.
pub fn population_frechet_mean_with<M: Metric + ?Sized>(
    metric: &M,
    measure: &ProbabilityMeasure,
    tol: f64,
    exec: Exec,
) -> Result<FrechetResult> {
    measure.check_space(metric)?;
    let w = measure.weights();
    let values = exec.map_range(metric.len(), |p| frechet_function(metric, w, p));
    Ok(FrechetResult::from_values(values, tol))
}

/// Argmin of `p ↦ (1/m) Σ_i d(p, X_i)²` over the points.
pub fn sample_frechet_mean<M: Metric + ?Sized>(metric: &M, batch: &SampleBatch, tol: f64) -> Result<FrechetResult> {
    if batch.is_empty() {
        return Err(Error::Empty("sample batch"));
    }
    if batch.n_points != metric.len() {
        return Err(Error::Dimension(format!("batch drawn on {} points, space has {}", batch.n_points, metric.len())));
    }
    population_frechet_mean(metric, &batch.empirical_measure()?, tol)
}

/// `(1/m) Σ_i ‖X_i − Y‖²_{L²(η)}`.
pub fn hull_objective(batch: &[&[f64]], y: &[f64], weights: &[f64]) -> f64 {
    let m = batch.len() as f64;
    batch.iter().map(|x| l2_eta_distance(x, y, weights).powi(2)).sum::<f64>() / m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullMeanResult {
    pub mean: HullPoint,
    pub frechet_value: f64,
    /// Best objective found by the projected-gradient oracle.
    pub oracle_value: f64,
    /// `oracle_value − frechet_value`; negative means the oracle beat the mean.
    pub oracle_gap: f64,
    /// Sup-distance between the oracle's minimizer and the mean.
    pub oracle_sup_distance: f64,
}

/// Sample Fréchet mean over the hull: the coordinate-wise average, checked
/// against a multistart projected-gradient search over hull coefficients.
pub fn hull_sample_mean<M: Metric + ?Sized>(
    metric: &M,
    batch: &[HullPoint],
    measure: &ProbabilityMeasure,
    oracle: &PgdConfig,
) -> Result<HullMeanResult> {
    if batch.is_empty() {
        return Err(Error::Empty("hull batch"));
    }
    measure.check_space(metric)?;
    let n = metric.len();
    let m = batch.len() as f64;
    let mut coeffs = vec![0.0; n];
    for h in batch {
        if h.values().len() != n {
            return Err(Error::Dimension("hull point from a different space".into()));
        }
        for (&i, &w) in h.coeffs() {
            coeffs[i] += w / m;
        }
    }
    let mean = hull_point(metric, coeffs.iter().copied().enumerate().filter(|(_, w)| *w > 0.0))
        .or_else(|_| renormalized(metric, &coeffs))?;

    let w = measure.weights();
    let xs: Vec<&[f64]> = batch.iter().map(|h| h.values()).collect();
    let frechet_value = hull_objective(&xs, mean.values(), w);

    let y = hull_argmin(metric, &xs, w, oracle);
    let oracle_value = hull_objective(&xs, &y, w);
    Ok(HullMeanResult {
        oracle_sup_distance: sup_distance_unchecked(&y, mean.values()),
        mean,
        frechet_value,
        oracle_value,
        oracle_gap: oracle_value - frechet_value,
    })
}

fn renormalized<M: Metric + ?Sized>(metric: &M, coeffs: &[f64]) -> Result<HullPoint> {
    let t: f64 = coeffs.iter().sum();
    hull_point(metric, coeffs.iter().map(|c| c / t).enumerate())
}

/// Minimizes `Y ↦ (1/m) Σ ‖X_i − Y‖²_{L²(η)}` over `Y = Σ c_x f_x`, `c` in the
/// simplex, without using the closed-form mean. Returns the values of `Y`.
pub fn hull_argmin<M: Metric + ?Sized>(metric: &M, batch: &[&[f64]], weights: &[f64], cfg: &PgdConfig) -> Vec<f64> {
    HullOracle::new(metric, weights).argmin(metric, batch, cfg)
}

/// Gram matrix `G_xy = <f_x, f_y>_{L²(η)}` of the generators, reusable
/// across batches on the same space and measure.
pub struct HullOracle {
    gram: Vec<f64>,
    weights: Vec<f64>,
}

impl HullOracle {
    pub fn new<M: Metric + ?Sized>(metric: &M, weights: &[f64]) -> Self {
        let n = metric.len();
        let mut gram = vec![0.0; n * n];
        for x in 0..n {
            for y in x..n {
                let g = l2_eta_dot(metric.row(x), metric.row(y), weights);
                gram[x * n + y] = g;
                gram[y * n + x] = g;
            }
        }
        Self { gram, weights: weights.to_vec() }
    }

    pub fn argmin<M: Metric + ?Sized>(&self, metric: &M, batch: &[&[f64]], cfg: &PgdConfig) -> Vec<f64> {
        let n = metric.len();
        let m = batch.len() as f64;
        // b_x = (1/m) Σ_i <f_x, X_i>_η
        let linear: Vec<f64> = (0..n)
            .map(|x| batch.iter().map(|xi| l2_eta_dot(metric.row(x), xi, &self.weights)).sum::<f64>() / m)
            .collect();
        self.argmin_linear(metric, &linear, cfg)
    }

    /// Same as [`argmin`](Self::argmin) for a batch of generators given by
    /// occupation counts (`X_i = f_x` repeated `counts[x]` times).
    pub fn argmin_counts<M: Metric + ?Sized>(&self, metric: &M, counts: &[u32], cfg: &PgdConfig) -> Vec<f64> {
        let n = metric.len();
        let m: f64 = counts.iter().map(|&c| c as f64).sum();
        let linear: Vec<f64> = (0..n)
            .map(|x| {
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(y, &c)| c as f64 * self.gram[x * n + y])
                    .sum::<f64>()
                    / m
            })
            .collect();
        self.argmin_linear(metric, &linear, cfg)
    }

    fn argmin_linear<M: Metric + ?Sized>(&self, metric: &M, linear: &[f64], cfg: &PgdConfig) -> Vec<f64> {
        let c = SimplexQuadratic { gram: &self.gram, linear }.minimize(cfg);
        let mut y = vec![0.0; metric.len()];
        for (x, &cx) in c.iter().enumerate() {
            if cx != 0.0 {
                for (v, d) in y.iter_mut().zip(metric.row(x)) {
                    *v += cx * d;
                }
            }
        }
        y
    }
}

/// Center of mass `Σ_x η_x f_x` of the embedded measure.
pub fn hull_population_mean<M: Metric + ?Sized>(metric: &M, measure: &ProbabilityMeasure) -> Result<HullPoint> {
    measure.check_space(metric)?;
    hull_point(metric, measure.weights().iter().copied().enumerate())
}

/// `F̄(p) = Σ_x η_x ‖p − f_x‖²_{L²(η)}`.
pub fn hull_frechet_function<M: Metric + ?Sized>(metric: &M, measure: &ProbabilityMeasure, p: &[f64]) -> f64 {
    let w = measure.weights();
    (0..metric.len()).filter(|&x| w[x] > 0.0).map(|x| w[x] * l2_eta_distance(p, metric.row(x), w).powi(2)).sum()
}

/// Relative `L²(η)` error between a central-difference gradient of `F̄` at
/// `p` (in Riesz form: partial derivative divided by `η_s`) and `2(p − μ̄)`.
/// Requires full support.
pub fn center_of_mass_gradient_error<M: Metric + ?Sized>(
    metric: &M,
    measure: &ProbabilityMeasure,
    p: &[f64],
    step: f64,
) -> Result<f64> {
    if !measure.has_full_support() {
        return Err(Error::Hypothesis("gradient identity check needs a full-support measure".into()));
    }
    let mu = hull_population_mean(metric, measure)?;
    let w = measure.weights();
    let mut probe = p.to_vec();
    let mut num = 0.0;
    let mut den = 0.0;
    for s in 0..p.len() {
        probe[s] = p[s] + step;
        let up = hull_frechet_function(metric, measure, &probe);
        probe[s] = p[s] - step;
        let down = hull_frechet_function(metric, measure, &probe);
        probe[s] = p[s];
        let fd = (up - down) / (2.0 * step) / w[s];
        let exact = 2.0 * (p[s] - mu.values()[s]);
        num += w[s] * (fd - exact).powi(2);
        den += w[s] * exact.powi(2);
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosestPointResult {
    /// Fréchet minimizers under `‖f_x − f_z‖_{L²(η)}` between embedded points.
    pub mu0: Vec<usize>,
    /// Points whose embedding is nearest (in `L²(η)`) to the center of mass.
    pub closest: Vec<usize>,
    pub coincide: bool,
    pub ball_positive: bool,
}

/// Compares the Fréchet mean of the embedded points with the point closest
/// to their center of mass. The embedding is the rows of `metric`, so a
/// [`ModifiedMetricSpace`](crate::modified::ModifiedMetricSpace) gives the
/// `d_η` embedding. Non-coincidence is reported, not an error.
pub fn closest_point_to_hull_mean<M: Metric + ?Sized>(
    metric: &M,
    measure: &ProbabilityMeasure,
    tol: f64,
) -> Result<ClosestPointResult> {
    let mu = hull_population_mean(metric, measure)?;
    let w = measure.weights();
    let n = metric.len();
    let frechet: Vec<f64> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&z| w[z] > 0.0)
                .map(|z| w[z] * l2_eta_distance(metric.row(x), metric.row(z), w).powi(2))
                .sum()
        })
        .collect();
    let to_mean: Vec<f64> = (0..n).map(|x| l2_eta_distance(metric.row(x), mu.values(), w).powi(2)).collect();
    let a = FrechetResult::from_values(frechet, tol);
    let b = FrechetResult::from_values(to_mean, tol);
    Ok(ClosestPointResult {
        coincide: a.minimizers == b.minimizers,
        mu0: a.minimizers,
        closest: b.minimizers,
        ball_positive: measure.has_full_support(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::hull_point_dense;
    use crate::metric::{cone_rotation, euclidean_space, make_cone_space, FiniteMetricSpace};
    use crate::modified::build_d_eta;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn cloud(n: usize, seed: u64) -> FiniteMetricSpace {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        euclidean_space(&pts).unwrap()
    }

    fn two_point() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap()
    }

    /// Independent argmin: plain nested loops, no shared helpers.
    #[allow(clippy::needless_range_loop)]
    fn naive_argmin(s: &FiniteMetricSpace, w: &[f64]) -> (Vec<usize>, f64) {
        let n = s.len();
        let mut vals = Vec::new();
        for p in 0..n {
            let mut acc = 0.0;
            for z in 0..n {
                let d = s.rows()[p][z];
                acc += w[z] * d * d;
            }
            vals.push(acc);
        }
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        ((0..n).filter(|&p| vals[p] <= min * (1.0 + TIE_TOL)).collect(), min)
    }

    #[test]
    fn frechet_function_examples() {
        let s = cloud(10, 1);
        let delta = ProbabilityMeasure::delta(10, 4).unwrap();
        assert_eq!(frechet_function(&s, delta.weights(), 4), 0.0);
        let two = two_point();
        let u = ProbabilityMeasure::uniform(2).unwrap();
        assert_eq!(frechet_function(&two, u.weights(), 0), 0.5);
        assert_eq!(frechet_function(&two, u.weights(), 1), 0.5);
        let us = ProbabilityMeasure::uniform(10).unwrap();
        for p in 0..10 {
            assert!(frechet_function(&s, us.weights(), p) <= s.diameter().powi(2));
        }
    }

    #[test]
    fn population_mean_examples() {
        let s = cloud(20, 2);
        let r = population_frechet_mean(&s, &ProbabilityMeasure::delta(20, 7).unwrap(), TIE_TOL).unwrap();
        assert_eq!(r.minimizers, vec![7]);
        assert!(r.unique);

        let u = ProbabilityMeasure::uniform(20).unwrap();
        let r = population_frechet_mean(&s, &u, TIE_TOL).unwrap();
        let (naive, min) = naive_argmin(&s, u.weights());
        assert_eq!(r.minimizers, naive);
        assert!((r.min_value - min).abs() <= 1e-15);

        let two = population_frechet_mean(&two_point(), &ProbabilityMeasure::uniform(2).unwrap(), TIE_TOL).unwrap();
        assert_eq!(two.minimizers, vec![0, 1]);
        assert!(!two.unique);
    }

    #[test]
    fn cone_orbit_measure_gives_a_circle_of_minimizers() {
        let (nu, nv) = (6, 12);
        let s = make_cone_space(nu, nv).unwrap();
        // uniform on the ring u-index 3
        let raw: Vec<f64> = (0..nu * nv).map(|k| if k / nv == 3 { 1.0 } else { 0.0 }).collect();
        let eta = ProbabilityMeasure::from_weights(&raw).unwrap();
        let r = population_frechet_mean(&s, &eta, TIE_TOL).unwrap();
        assert_eq!(r.minimizers.len(), nv);
        assert!(!r.unique);
        let perm = cone_rotation(nu, nv, 1);
        let mut rotated: Vec<usize> = r.minimizers.iter().map(|&k| perm[k]).collect();
        rotated.sort_unstable();
        assert_eq!(rotated, r.minimizers);
    }

    #[test]
    fn scaling_leaves_minimizers_unchanged() {
        let s = cloud(20, 3);
        let u = ProbabilityMeasure::uniform(20).unwrap();
        let base = population_frechet_mean(&s, &u, TIE_TOL).unwrap();
        for c in [1e-3, 0.5, 44.72, 1e4] {
            let scaled = FrechetResult::from_values(base.values.iter().map(|v| v * c).collect(), TIE_TOL);
            assert_eq!(scaled.minimizers, base.minimizers);
        }
    }

    #[test]
    fn sample_mean_examples() {
        let s = cloud(20, 4);
        let one = SampleBatch::new(vec![5], 20).unwrap();
        assert_eq!(sample_frechet_mean(&s, &one, TIE_TOL).unwrap().minimizers, vec![5]);

        let all = SampleBatch::new((0..20).collect(), 20).unwrap();
        let u = ProbabilityMeasure::uniform(20).unwrap();
        assert_eq!(sample_frechet_mean(&s, &all, TIE_TOL).unwrap(), population_frechet_mean(&s, &u, TIE_TOL).unwrap());
        assert!(sample_frechet_mean(&s, &SampleBatch::new(vec![], 20).unwrap(), TIE_TOL).is_err());
    }

    #[test]
    fn sample_mean_is_consistent() {
        let s = cloud(20, 5);
        let u = ProbabilityMeasure::uniform(20).unwrap();
        let pop = population_frechet_mean(&s, &u, 1e-6).unwrap();
        for seed in 0..5 {
            let batch = u.sample_iid(10_000, seed).unwrap();
            let r = sample_frechet_mean(&s, &batch, 1e-6).unwrap();
            assert!(pop.minimizers.contains(&r.representative()), "seed {seed}");
        }
    }

    #[test]
    fn hull_mean_examples() {
        let s = cloud(15, 6);
        let eta = ProbabilityMeasure::uniform(15).unwrap();
        let cfg = PgdConfig::default();
        let x = hull_point(&s, [(2, 1.0)]).unwrap();
        let r = hull_sample_mean(&s, std::slice::from_ref(&x), &eta, &cfg).unwrap();
        assert_eq!(r.mean, x);
        assert!(r.oracle_gap >= -1e-12);

        let y = hull_point(&s, [(9, 1.0)]).unwrap();
        let r = hull_sample_mean(&s, &[x.clone(), y.clone()], &eta, &cfg).unwrap();
        let xs = [x.values(), y.values()];
        let at_x = hull_objective(&xs, x.values(), eta.weights());
        let at_y = hull_objective(&xs, y.values(), eta.weights());
        assert!(r.frechet_value < at_x && r.frechet_value < at_y);
        assert_eq!(r.mean.coeffs().get(&2), Some(&0.5));
    }

    #[test]
    fn oracle_confirms_hull_mean() {
        let mut rng = rng_from_seed(77);
        let cfg = PgdConfig::default();
        let mut worst_gap = 0.0f64;
        let mut worst_sup = 0.0f64;
        for t in 0..40 {
            let s = cloud(15, 1000 + t);
            let eta = ProbabilityMeasure::uniform(15).unwrap();
            let m = rng.random_range(1..=10);
            let batch: Vec<HullPoint> = (0..m)
                .map(|_| {
                    if rng.random::<bool>() {
                        hull_point(&s, [(rng.random_range(0..15), 1.0)]).unwrap()
                    } else {
                        let raw: Vec<f64> = (0..15).map(|_| rng.random::<f64>()).collect();
                        let tot: f64 = raw.iter().sum();
                        hull_point_dense(&s, &raw.iter().map(|r| r / tot).collect::<Vec<_>>()).unwrap()
                    }
                })
                .collect();
            let r = hull_sample_mean(&s, &batch, &eta, &cfg).unwrap();
            assert!(r.oracle_gap >= -1e-8, "oracle beat the mean by {}", -r.oracle_gap);
            worst_gap = worst_gap.max(r.oracle_gap.abs());
            worst_sup = worst_sup.max(r.oracle_sup_distance);
        }
        eprintln!("worst oracle gap {worst_gap:e}, worst sup distance {worst_sup:e}");
        assert!(worst_gap <= 1e-8);
    }

    #[test]
    fn center_of_mass_examples() {
        let s = cloud(12, 8);
        let d = hull_population_mean(&s, &ProbabilityMeasure::delta(12, 3).unwrap()).unwrap();
        assert_eq!(d.values(), s.row(3));
        let two = two_point();
        let m = hull_population_mean(&two, &ProbabilityMeasure::uniform(2).unwrap()).unwrap();
        assert_eq!(m.values(), &[0.5, 0.5]);

        let eta = ProbabilityMeasure::uniform(12).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
            let tot: f64 = raw.iter().sum();
            let p = hull_point_dense(&s, &raw.iter().map(|r| r / tot).collect::<Vec<_>>()).unwrap();
            let err = center_of_mass_gradient_error(&s, &eta, p.values(), 1e-5).unwrap();
            assert!(err <= 1e-6, "relative gradient error {err}");
        }
        assert!(center_of_mass_gradient_error(&s, &ProbabilityMeasure::delta(12, 0).unwrap(), s.row(0), 1e-5).is_err());
    }

    #[test]
    fn closest_point_examples() {
        let s = cloud(10, 9);
        let delta = ProbabilityMeasure::delta(10, 6).unwrap();
        let r = closest_point_to_hull_mean(&s, &delta, TIE_TOL).unwrap();
        assert_eq!((r.mu0.clone(), r.closest.clone()), (vec![6], vec![6]));
        assert!(r.coincide && !r.ball_positive);

        let two = two_point();
        let u2 = ProbabilityMeasure::uniform(2).unwrap();
        let mm = build_d_eta(&two, &u2).unwrap();
        let r = closest_point_to_hull_mean(&mm, &u2, TIE_TOL).unwrap();
        assert_eq!(r.mu0, vec![0, 1]);
        assert!(r.coincide);

        let (nu, nv) = (5, 12);
        let cone = make_cone_space(nu, nv).unwrap();
        let eta = ProbabilityMeasure::uniform(cone.len()).unwrap();
        let mm = build_d_eta(&cone, &eta).unwrap();
        let r = closest_point_to_hull_mean(&mm, &eta, 1e-9).unwrap();
        assert!(r.coincide, "{r:?}");
        assert_eq!(r.mu0.len() % nv, 0);
        let perm = cone_rotation(nu, nv, 1);
        let mut rot: Vec<usize> = r.mu0.iter().map(|&k| perm[k]).collect();
        rot.sort_unstable();
        assert_eq!(rot, r.mu0);
    }
}
