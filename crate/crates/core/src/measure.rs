//! Probability measures on the points of a finite space, and i.i.d. sampling.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::rng::{rng_from_seed, Rng};

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMeasure {
    weights: Vec<f64>,
}

impl ProbabilityMeasure {
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("measure support"));
        }
        Ok(Self { weights: vec![1.0 / n as f64; n] })
    }

    /// Normalizes `raw` to unit mass.
    pub fn from_weights(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        if let Some(i) = raw.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("weight {i} is {} (must be finite and >= 0)", raw[i])));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Ok(Self { weights: raw.iter().map(|w| w / total).collect() })
    }

    /// Unit mass at `atom`.
    pub fn delta(n: usize, atom: usize) -> Result<Self> {
        if atom >= n {
            return Err(Error::IndexOutOfRange { index: atom, n });
        }
        let mut weights = vec![0.0; n];
        weights[atom] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Every atom carries positive mass.
    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i)
    }

    pub fn check_space<M: Metric + ?Sized>(&self, space: &M) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::Dimension(format!(
                "measure has {} atoms but the space has {} points",
                self.len(),
                space.len()
            )));
        }
        Ok(())
    }

    /// Mass of the open ball `{z : d(x, z) < eps}`.
    pub fn ball_mass<M: Metric + ?Sized>(&self, space: &M, x: usize, eps: f64) -> f64 {
        space.row(x).iter().zip(&self.weights).filter(|(d, _)| **d < eps).map(|(_, w)| w).sum()
    }

    /// Draws `m` indices i.i.d. by inverse CDF on the cumulative weights.
    pub fn sample_iid(&self, m: usize, seed: u64) -> Result<SampleBatch> {
        if m == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        let sampler = Sampler::new(self);
        let mut rng = rng_from_seed(seed);
        let indices = (0..m).map(|_| sampler.draw(&mut rng)).collect();
        Ok(SampleBatch { indices, seed, n_points: self.len() })
    }

    /// Image measure under `map`; `map[i] = None` is allowed only on null atoms.
    pub fn pushforward(&self, map: &[Option<usize>], target_n: usize) -> Result<Self> {
        if map.len() != self.len() {
            return Err(Error::Dimension(format!("map has {} entries, measure has {} atoms", map.len(), self.len())));
        }
        let mut weights = vec![0.0; target_n];
        for (i, (&w, t)) in self.weights.iter().zip(map).enumerate() {
            match t {
                Some(t) if *t < target_n => weights[*t] += w,
                Some(t) => return Err(Error::IndexOutOfRange { index: *t, n: target_n }),
                None if w > 0.0 => {
                    return Err(Error::InvalidArgument(format!("map undefined on atom {i} of positive weight {w}")))
                }
                None => {}
            }
        }
        Ok(Self { weights })
    }
}

/// Inverse-CDF sampler with a fixed atom ordering.
#[derive(Clone, Debug)]
pub struct Sampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Sampler {
    pub fn new(measure: &ProbabilityMeasure) -> Self {
        let mut acc = 0.0;
        let cdf = measure
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_positive = measure.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    pub fn draw(&self, rng: &mut Rng) -> usize {
        let total = self.cdf[self.cdf.len() - 1];
        let u = rng.random::<f64>() * total;
        // first atom whose cumulative weight exceeds u; null atoms are never hit
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.last_positive)
    }

    /// Occupation counts of `m` draws.
    pub fn draw_counts(&self, rng: &mut Rng, m: usize) -> Vec<u32> {
        let mut counts = vec![0u32; self.cdf.len()];
        for _ in 0..m {
            counts[self.draw(rng)] += 1;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub indices: Vec<usize>,
    pub seed: u64,
    pub n_points: usize,
}

impl SampleBatch {
    pub fn new(indices: Vec<usize>, n_points: usize) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= n_points) {
            return Err(Error::IndexOutOfRange { index: i, n: n_points });
        }
        Ok(Self { indices, seed: 0, n_points })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn counts(&self) -> Vec<u32> {
        let mut c = vec![0u32; self.n_points];
        for &i in &self.indices {
            c[i] += 1;
        }
        c
    }

    /// The empirical measure of the batch.
    pub fn empirical_measure(&self) -> Result<ProbabilityMeasure> {
        if self.is_empty() {
            return Err(Error::Empty("sample batch"));
        }
        let m = self.len() as f64;
        Ok(ProbabilityMeasure { weights: self.counts().iter().map(|&c| c as f64 / m).collect() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPositivity {
    pub holds: bool,
    /// First `(x, eps)` whose open ball has zero mass.
    pub first_failure: Option<(usize, f64)>,
    /// Smallest ball mass seen and where.
    pub worst: Option<(usize, f64, f64)>,
}

/// Whether every open ball `B_eps(x)` has positive mass, for all points and
/// all radii in `eps_grid`.
pub fn ball_positivity_check<M: Metric + ?Sized>(
    space: &M,
    measure: &ProbabilityMeasure,
    eps_grid: &[f64],
) -> Result<BallPositivity> {
    measure.check_space(space)?;
    if eps_grid.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::InvalidArgument("eps grid must be positive".into()));
    }
    let mut first_failure = None;
    let mut worst: Option<(usize, f64, f64)> = None;
    for x in 0..space.len() {
        for &eps in eps_grid {
            let mass = measure.ball_mass(space, x, eps);
            if mass <= 0.0 && first_failure.is_none() {
                first_failure = Some((x, eps));
            }
            if worst.is_none_or(|(_, _, m)| mass < m) {
                worst = Some((x, eps, mass));
            }
        }
    }
    Ok(BallPositivity { holds: first_failure.is_none(), first_failure, worst })
}

/// Radii that exercise every distinct distance scale of the space: each
/// distinct positive distance, plus one radius below the smallest.
pub fn default_eps_grid<M: Metric + ?Sized>(space: &M) -> Vec<f64> {
    let mut d: Vec<f64> = (0..space.len()).flat_map(|i| space.row(i).to_vec()).filter(|&x| x > 0.0).collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    let mut grid = Vec::with_capacity(d.len() + 1);
    grid.push(d.first().map_or(1.0, |m| m / 2.0));
    grid.extend(d);
    grid
}
