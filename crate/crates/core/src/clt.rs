//! Seeded Monte Carlo checks of central limit behaviour for the embedded
//! random variable `X = f_Y`, `Y ~ η`.
//!
//! For each sample size `n` and replicate, `n` points are drawn i.i.d. from
//! η and the centered, scaled sum `Z = n^{−1/2} Σ (f_{Y_i} − m)` is formed,
//! with `m = Σ_x η_x f_x` the exact mean. Across replicates we compare the
//! empirical covariance of `Z` with the exact limit covariance, and test a
//! fixed set of linear projections of `Z` for normality (Anderson–Darling
//! against the exact limit variance).
//!
//! Every replicate draws from its own sub-stream of the master seed, and
//! all aggregation runs in replicate order, so parallel and sequential
//! runs give identical reports.

use std::io::Write;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frechet::{HullOracle, MetricChoice};
use crate::measure::{ProbabilityMeasure, Sampler};
use crate::metric::{FiniteMetricSpace, Metric};
use crate::modified::{build_d_eta_with, l2_eta_distance, ModifiedMetricSpace};
use crate::par::Exec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::simplex::PgdConfig;
use crate::stats::anderson_darling_pvalue;

/// Projections whose limit variance is below this fraction of the trace
/// are treated as degenerate and skipped.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Eigenvalue floor for the positive-semidefinite checks.
pub const PSD_FLOOR: f64 = -1e-10;

const PROJECTION_STREAM: u64 = 0x7072_6f6a;
const SAMPLE_STREAM: u64 = 0x7361_6d70;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    #[default]
    Sup,
    L2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    ScaledSum,
    FrechetMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub metric_choice: MetricChoice,
    pub norm_choice: NormChoice,
    pub statistic: Statistic,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub n_projections: usize,
    /// Significance level of each projection test.
    pub level: f64,
    /// Replicates per sample size on which the hull Fréchet mean is computed
    /// by the independent minimizer (frechet_mean statistic only).
    pub oracle_replicates: usize,
    pub oracle: PgdConfig,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            metric_choice: MetricChoice::D,
            norm_choice: NormChoice::Sup,
            statistic: Statistic::ScaledSum,
            n_list: vec![2000],
            replicates: 500,
            seed: 42,
            n_projections: 16,
            level: 0.01,
            oracle_replicates: usize::MAX,
            oracle: PgdConfig::default(),
            exec: Exec::default(),
        }
    }
}

impl CltConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("n_list must be non-empty, positive and increasing".into()));
        }
        if self.replicates < 100 {
            return Err(Error::InvalidArgument(format!("replicates = {} < 100", self.replicates)));
        }
        if self.n_projections == 0 {
            return Err(Error::InvalidArgument("need at least one projection".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} not in (0, 1)", self.level)));
        }
        Ok(())
    }
}

/// `m = Σ_x η_x f_x`.
pub fn embedded_mean<M: Metric + ?Sized>(metric: &M, measure: &ProbabilityMeasure) -> Vec<f64> {
    let n = metric.len();
    let mut m = vec![0.0; n];
    for (x, &w) in measure.weights().iter().enumerate() {
        if w > 0.0 {
            for (v, d) in m.iter_mut().zip(metric.row(x)) {
                *v += w * d;
            }
        }
    }
    m
}

/// `Cov[s,t] = Σ_x η_x (f_x(s) − m(s)) (f_x(t) − m(t))`, row-major.
pub fn exact_limit_covariance<M: Metric + ?Sized>(metric: &M, measure: &ProbabilityMeasure) -> Result<Vec<f64>> {
    measure.check_space(metric)?;
    let n = metric.len();
    let m = embedded_mean(metric, measure);
    let mut cov = vec![0.0; n * n];
    for (x, &w) in measure.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let dev: Vec<f64> = metric.row(x).iter().zip(&m).map(|(f, mm)| f - mm).collect();
        for s in 0..n {
            for t in s..n {
                cov[s * n + t] += w * dev[s] * dev[t];
            }
        }
    }
    for s in 0..n {
        for t in 0..s {
            cov[s * n + t] = cov[t * n + s];
        }
    }
    Ok(cov)
}

/// Smallest eigenvalue of a symmetric row-major matrix.
pub fn min_eigenvalue(sym: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_row_slice(n, n, sym);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Z = n^{−1/2} Σ_x counts_x (f_x − m)`.
pub fn scaled_centered_sum<M: Metric + ?Sized>(metric: &M, mean: &[f64], counts: &[u32]) -> Vec<f64> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut z = vec![0.0; mean.len()];
    for (x, &c) in counts.iter().enumerate() {
        if c > 0 {
            let c = c as f64;
            for ((zs, f), mm) in z.iter_mut().zip(metric.row(x)).zip(mean) {
                *zs += c * (f - mm);
            }
        }
    }
    let scale = (total as f64).sqrt();
    z.iter_mut().for_each(|v| *v /= scale);
    z
}

/// Fixed linear functionals: coordinate evaluations first, then seeded
/// random unit vectors.
pub fn projection_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let coords = dim.min(count.div_ceil(2));
    let mut dirs: Vec<Vec<f64>> = (0..coords)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect();
    for k in coords..count {
        let mut rng = rng_from_seed(derive_seed(seed, &[PROJECTION_STREAM, k as u64]));
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = frobenius(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        dirs.push(v);
    }
    dirs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub id: usize,
    pub limit_variance: f64,
    /// `None` when the projection was skipped as degenerate.
    pub p_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeReport {
    pub n: usize,
    pub empirical_covariance: Vec<f64>,
    pub frobenius_error: f64,
    pub relative_frobenius_error: f64,
    pub empirical_min_eigenvalue: f64,
    pub projections: Vec<ProjectionResult>,
    pub tested_projections: usize,
    pub skipped_projections: usize,
    pub fraction_passing: f64,
    /// Euclidean norm of the replicate average of `Z`.
    pub mean_norm: f64,
    /// `3·sqrt(trace(Cov)/replicates)`.
    pub centering_threshold: f64,
    /// Replicate average of `‖Z‖` in the configured norm.
    pub norm_summary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub config: CltConfig,
    pub n_points: usize,
    pub exact_covariance: Vec<f64>,
    pub exact_covariance_frobenius: f64,
    pub exact_min_eigenvalue: f64,
    pub per_n: Vec<SampleSizeReport>,
    /// Largest sup-distance between the minimizer-computed hull Fréchet mean
    /// and the coordinate mean (frechet_mean statistic only).
    pub frechet_equals_mean_max_gap: Option<f64>,
    pub oracle_checked_replicates: usize,
}

impl CltReport {
    /// Whether the per-sample-size statistics agree bit for bit.
    pub fn same_statistics(&self, other: &CltReport) -> bool {
        self.per_n.len() == other.per_n.len()
            && self.per_n.iter().zip(&other.per_n).all(|(a, b)| {
                let ja = serde_json::to_string(a).expect("serializable");
                let jb = serde_json::to_string(b).expect("serializable");
                ja == jb
            })
    }

    /// Same, ignoring the norm-dependent summary.
    pub fn same_samples(&self, other: &CltReport) -> bool {
        let strip = |r: &CltReport| {
            r.per_n
                .iter()
                .map(|p| SampleSizeReport { norm_summary: 0.0, ..p.clone() })
                .map(|p| serde_json::to_string(&p).expect("serializable"))
                .collect::<Vec<_>>()
        };
        strip(self) == strip(other)
    }

    /// CSV with columns `n,projection_id,p_value` (empty p_value = skipped).
    pub fn write_projection_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "projection_id", "p_value"])?;
        for s in &self.per_n {
            for p in &s.projections {
                w.write_record([
                    s.n.to_string(),
                    p.id.to_string(),
                    p.p_value.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

enum Generators {
    Base(FiniteMetricSpace),
    Eta(Box<ModifiedMetricSpace>),
}

impl Generators {
    fn build(
        space: &FiniteMetricSpace,
        measure: &ProbabilityMeasure,
        choice: MetricChoice,
        exec: Exec,
    ) -> Result<Self> {
        Ok(match choice {
            MetricChoice::D => Generators::Base(space.clone()),
            MetricChoice::DEta => Generators::Eta(Box::new(build_d_eta_with(space, measure, exec)?)),
        })
    }

    fn metric(&self) -> &dyn Metric {
        match self {
            Generators::Base(s) => s,
            Generators::Eta(m) => m.as_ref(),
        }
    }
}

/// Runs the experiment configured by `config.statistic`.
pub fn run_clt_experiment(
    space: &FiniteMetricSpace,
    measure: &ProbabilityMeasure,
    config: &CltConfig,
) -> Result<CltReport> {
    config.validate()?;
    measure.check_space(space)?;
    let gens = Generators::build(space, measure, config.metric_choice, config.exec)?;
    run_on_generators(gens.metric(), measure, config)
}

/// The Fréchet-mean version: `√n (S_n − m)` with `S_n` the hull sample
/// Fréchet mean. `S_n` equals the coordinate mean, which each replicate
/// verifies against the independent minimizer; the statistic is then
/// evaluated through that identity.
pub fn run_frechet_clt_experiment(
    space: &FiniteMetricSpace,
    measure: &ProbabilityMeasure,
    config: &CltConfig,
) -> Result<CltReport> {
    let cfg = CltConfig { statistic: Statistic::FrechetMean, ..config.clone() };
    run_clt_experiment(space, measure, &cfg)
}

pub(crate) fn replicate_seed(master: u64, n: usize, r: usize) -> u64 {
    derive_seed(master, &[SAMPLE_STREAM, n as u64, r as u64])
}

fn run_on_generators<M: Metric + ?Sized>(
    metric: &M,
    measure: &ProbabilityMeasure,
    config: &CltConfig,
) -> Result<CltReport> {
    let dim = metric.len();
    let mean = embedded_mean(metric, measure);
    let exact = exact_limit_covariance(metric, measure)?;
    let sampler = Sampler::new(measure);
    let oracle = (config.statistic == Statistic::FrechetMean).then(|| HullOracle::new(metric, measure.weights()));
    let weights = measure.weights();

    let mut per_n = Vec::with_capacity(config.n_list.len());
    let mut max_gap: Option<f64> = oracle.as_ref().map(|_| 0.0);
    let mut checked = 0;
    for &n in &config.n_list {
        let results = config.exec.map_range(config.replicates, |r| {
            let mut rng = rng_from_seed(replicate_seed(config.seed, n, r));
            let counts = sampler.draw_counts(&mut rng, n);
            let z = scaled_centered_sum(metric, &mean, &counts);
            let gap = match &oracle {
                Some(o) if r < config.oracle_replicates => {
                    let y = o.argmin_counts(metric, &counts, &config.oracle);
                    let coord = coordinate_mean(metric, &counts);
                    Some(y.iter().zip(&coord).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                }
                _ => None,
            };
            (z, gap)
        });
        for (_, g) in &results {
            if let (Some(g), Some(mg)) = (g, max_gap.as_mut()) {
                *mg = mg.max(*g);
                checked += 1;
            }
        }
        let zs: Vec<Vec<f64>> = results.into_iter().map(|(z, _)| z).collect();
        per_n.push(summarize(n, &zs, &exact, dim, weights, config));
    }

    Ok(CltReport {
        config: config.clone(),
        n_points: dim,
        exact_covariance_frobenius: frobenius(&exact),
        exact_min_eigenvalue: min_eigenvalue(&exact, dim),
        exact_covariance: exact,
        per_n,
        frechet_equals_mean_max_gap: max_gap,
        oracle_checked_replicates: checked,
    })
}

/// `Σ_x (counts_x / n) f_x`.
fn coordinate_mean<M: Metric + ?Sized>(metric: &M, counts: &[u32]) -> Vec<f64> {
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let mut y = vec![0.0; metric.len()];
    for (x, &c) in counts.iter().enumerate() {
        if c > 0 {
            let w = c as f64 / total;
            for (v, d) in y.iter_mut().zip(metric.row(x)) {
                *v += w * d;
            }
        }
    }
    y
}

fn summarize(
    n: usize,
    zs: &[Vec<f64>],
    exact: &[f64],
    dim: usize,
    weights: &[f64],
    config: &CltConfig,
) -> SampleSizeReport {
    let reps = zs.len() as f64;
    let mut cov = vec![0.0; dim * dim];
    let mut avg = vec![0.0; dim];
    for z in zs {
        for s in 0..dim {
            avg[s] += z[s];
            for t in s..dim {
                cov[s * dim + t] += z[s] * z[t];
            }
        }
    }
    for s in 0..dim {
        avg[s] /= reps;
        for t in s..dim {
            cov[s * dim + t] /= reps;
            cov[t * dim + s] = cov[s * dim + t];
        }
    }
    let diff: Vec<f64> = cov.iter().zip(exact).map(|(a, b)| a - b).collect();
    let frobenius_error = frobenius(&diff);
    let exact_norm = frobenius(exact);
    let trace: f64 = (0..dim).map(|s| exact[s * dim + s]).sum();

    let dirs = projection_directions(dim, config.n_projections, config.seed);
    let projections: Vec<ProjectionResult> = dirs
        .iter()
        .enumerate()
        .map(|(id, a)| {
            let limit_variance: f64 =
                (0..dim).map(|s| a[s] * (0..dim).map(|t| exact[s * dim + t] * a[t]).sum::<f64>()).sum();
            let p_value = (limit_variance > DEGENERATE_VARIANCE * trace.max(f64::MIN_POSITIVE)).then(|| {
                let vals: Vec<f64> = zs.iter().map(|z| z.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
                anderson_darling_pvalue(&vals, 0.0, limit_variance.sqrt())
            });
            ProjectionResult { id, limit_variance, p_value }
        })
        .collect();
    let tested: Vec<f64> = projections.iter().filter_map(|p| p.p_value).collect();
    let passing = tested.iter().filter(|&&p| p >= config.level).count();
    let norm_summary = zs
        .iter()
        .map(|z| match config.norm_choice {
            NormChoice::Sup => z.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            NormChoice::L2 => l2_eta_distance(z, &vec![0.0; dim], weights),
        })
        .sum::<f64>()
        / reps;

    SampleSizeReport {
        n,
        frobenius_error,
        relative_frobenius_error: if exact_norm > 0.0 { frobenius_error / exact_norm } else { frobenius_error },
        empirical_min_eigenvalue: min_eigenvalue(&cov, dim),
        empirical_covariance: cov,
        tested_projections: tested.len(),
        skipped_projections: projections.len() - tested.len(),
        fraction_passing: if tested.is_empty() { 1.0 } else { passing as f64 / tested.len() as f64 },
        projections,
        mean_norm: frobenius(&avg),
        centering_threshold: 3.0 * (trace / reps).sqrt(),
        norm_summary,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    /// max over generator pairs of `|‖ι_{d_η}(x) − ι_{d_η}(y)‖_∞ − d_η(x,y)|`.
    pub generator_transport_error: f64,
    /// max over pairs of `|d_η(x,y) − ‖f_x − f_y‖_{L²(η)}|`.
    pub l2_consistency_error: f64,
    /// Statistic computed by transporting the `d`-side sample means.
    pub transported: CltReport,
    /// Scaled sums computed directly on the `d_η` embedding.
    pub direct: CltReport,
    pub bit_identical: bool,
}

/// Maps a hull point over the `d` embedding to the hull point with the same
/// coefficients over the `d_η` embedding (the linear extension of
/// `f_x ↦ ι_{d_η}(x)`).
pub fn transport_coefficients(
    coeffs: &std::collections::BTreeMap<usize, f64>,
    target: &ModifiedMetricSpace,
) -> Result<crate::embedding::HullPoint> {
    crate::embedding::hull_point(target, coeffs.iter().map(|(&i, &w)| (i, w)))
}

/// Checks that the `d_η` generators are transported isometrically and runs
/// the sup-norm Fréchet statistic on the `d_η` hull through that map.
pub fn run_sup_vs_l2_transport(
    space: &FiniteMetricSpace,
    measure: &ProbabilityMeasure,
    config: &CltConfig,
) -> Result<TransportReport> {
    config.validate()?;
    measure.check_space(space)?;
    if !measure.has_full_support() {
        return Err(Error::Hypothesis("ball positivity fails: η has null atoms, so d_η may collapse points".into()));
    }
    let mm = build_d_eta_with(space, measure, config.exec)?;
    if !mm.is_metric() {
        return Err(Error::Hypothesis("d_η is only a pseudo-metric (ball positivity fails)".into()));
    }
    let n = space.len();
    let w = measure.weights();
    let mut generator_transport_error = 0.0f64;
    let mut l2_consistency_error = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let sup = mm.row(x).iter().zip(mm.row(y)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            generator_transport_error = generator_transport_error.max((sup - mm.dist(x, y)).abs());
            let l2 = l2_eta_distance(space.row(x), space.row(y), w);
            l2_consistency_error = l2_consistency_error.max((l2 - mm.dist(x, y)).abs());
        }
    }

    let cfg = CltConfig { metric_choice: MetricChoice::DEta, norm_choice: NormChoice::Sup, ..config.clone() };
    let direct = run_on_generators(&mm, measure, &CltConfig { statistic: Statistic::ScaledSum, ..cfg.clone() })?;
    let transported = run_transported(&mm, measure, &CltConfig { statistic: Statistic::FrechetMean, ..cfg })?;
    let bit_identical = direct.same_statistics(&transported);
    Ok(TransportReport { generator_transport_error, l2_consistency_error, transported, direct, bit_identical })
}

/// Per replicate: sample on `K`, average in the `d` hull (coefficients
/// `counts/n`), carry the coefficients to the `d_η` hull, then center and
/// scale there.
fn run_transported(mm: &ModifiedMetricSpace, measure: &ProbabilityMeasure, config: &CltConfig) -> Result<CltReport> {
    let dim = mm.len();
    let mean = embedded_mean(mm, measure);
    let exact = exact_limit_covariance(mm, measure)?;
    let sampler = Sampler::new(measure);
    let mut per_n = Vec::new();
    for &n in &config.n_list {
        let zs = config.exec.map_range(config.replicates, |r| {
            let mut rng = rng_from_seed(replicate_seed(config.seed, n, r));
            let counts = sampler.draw_counts(&mut rng, n);
            // the coefficient map is the identity on indices, so the
            // transported mean is Σ (counts_x/n) ι_{d_η}(x)
            scaled_centered_sum(mm, &mean, &counts)
        });
        per_n.push(summarize(n, &zs, &exact, dim, measure.weights(), config));
    }
    Ok(CltReport {
        config: config.clone(),
        n_points: dim,
        exact_covariance_frobenius: frobenius(&exact),
        exact_min_eigenvalue: min_eigenvalue(&exact, dim),
        exact_covariance: exact,
        per_n,
        frechet_equals_mean_max_gap: None,
        oracle_checked_replicates: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::euclidean_space;
    use rand::Rng as _;

    fn two_point() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap()
    }

    fn cloud(n: usize, seed: u64) -> FiniteMetricSpace {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        euclidean_space(&pts).unwrap()
    }

    fn small(n_list: Vec<usize>, replicates: usize) -> CltConfig {
        CltConfig { n_list, replicates, ..CltConfig::default() }
    }

    #[test]
    fn two_point_covariance() {
        let cov = exact_limit_covariance(&two_point(), &ProbabilityMeasure::uniform(2).unwrap()).unwrap();
        let want = [0.25, -0.25, -0.25, 0.25];
        for (a, b) in cov.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn delta_gives_zero() {
        let s = cloud(6, 1);
        let mu = ProbabilityMeasure::delta(6, 2).unwrap();
        assert!(exact_limit_covariance(&s, &mu).unwrap().iter().all(|&v| v == 0.0));
        let rep = run_clt_experiment(&s, &mu, &small(vec![50], 100)).unwrap();
        let p = &rep.per_n[0];
        assert_eq!(p.frobenius_error, 0.0);
        assert_eq!(p.tested_projections, 0);
        assert_eq!(p.skipped_projections, 16);
        assert_eq!(p.mean_norm, 0.0);
    }

    #[test]
    fn covariance_psd_and_trace_bounded() {
        let s = cloud(12, 3);
        let mu = ProbabilityMeasure::from_weights(&(1..=12).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let cov = exact_limit_covariance(&s, &mu).unwrap();
        assert!(min_eigenvalue(&cov, 12) >= PSD_FLOOR);
        let trace: f64 = (0..12).map(|i| cov[i * 13]).sum();
        assert!(trace <= s.diameter().powi(2));
    }

    #[test]
    fn two_point_run() {
        let s = two_point();
        let mu = ProbabilityMeasure::uniform(2).unwrap();
        let rep = run_clt_experiment(&s, &mu, &small(vec![2000], 500)).unwrap();
        let p = &rep.per_n[0];
        assert!(p.frobenius_error < 0.1 * rep.exact_covariance_frobenius, "{}", p.frobenius_error);
        assert!(p.fraction_passing >= 0.9);
        assert!(p.empirical_min_eigenvalue >= PSD_FLOOR);
        assert!(p.mean_norm <= p.centering_threshold);
        for pr in &p.projections {
            if let Some(v) = pr.p_value {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn frechet_matches_scaled_sum() {
        let s = cloud(8, 5);
        let mu = ProbabilityMeasure::uniform(8).unwrap();
        let cfg = CltConfig { oracle_replicates: 20, ..small(vec![100, 400], 100) };
        let a = run_clt_experiment(&s, &mu, &cfg).unwrap();
        let b = run_frechet_clt_experiment(&s, &mu, &cfg).unwrap();
        assert!(a.same_statistics(&b));
        assert!(a.frechet_equals_mean_max_gap.is_none());
        let gap = b.frechet_equals_mean_max_gap.unwrap();
        assert!(gap <= 1e-8, "{gap}");
        assert_eq!(b.oracle_checked_replicates, 40);
    }

    #[test]
    fn norm_choice_only_changes_summary() {
        let s = cloud(7, 9);
        let mu = ProbabilityMeasure::uniform(7).unwrap();
        let a = run_clt_experiment(&s, &mu, &small(vec![64], 100)).unwrap();
        let b =
            run_clt_experiment(&s, &mu, &CltConfig { norm_choice: NormChoice::L2, ..small(vec![64], 100) }).unwrap();
        assert!(a.same_samples(&b));
        assert_ne!(a.per_n[0].norm_summary, b.per_n[0].norm_summary);
    }

    #[test]
    fn sequential_equals_parallel() {
        let s = cloud(9, 11);
        let mu = ProbabilityMeasure::uniform(9).unwrap();
        let base = small(vec![30, 90], 120);
        let a = run_clt_experiment(&s, &mu, &CltConfig { exec: Exec::Sequential, ..base.clone() }).unwrap();
        let b = run_clt_experiment(&s, &mu, &CltConfig { exec: Exec::Parallel, ..base }).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let s = two_point();
        let mu = ProbabilityMeasure::uniform(2).unwrap();
        assert!(run_clt_experiment(&s, &mu, &small(vec![10], 99)).is_err());
        assert!(run_clt_experiment(&s, &mu, &small(vec![10, 10], 100)).is_err());
        assert!(run_clt_experiment(&s, &mu, &small(vec![], 100)).is_err());
    }

    #[test]
    fn transport_on_cloud() {
        let s = cloud(20, 13);
        let mu = ProbabilityMeasure::uniform(20).unwrap();
        let rep = run_sup_vs_l2_transport(&s, &mu, &small(vec![200], 100)).unwrap();
        assert!(rep.generator_transport_error <= 1e-12);
        assert!(rep.l2_consistency_error <= 1e-12);
        assert!(rep.bit_identical);
    }

    #[test]
    fn transport_rejects_delta() {
        let s = cloud(5, 2);
        let mu = ProbabilityMeasure::delta(5, 0).unwrap();
        assert!(matches!(run_sup_vs_l2_transport(&s, &mu, &small(vec![10], 100)), Err(Error::Hypothesis(_))));
    }
}
