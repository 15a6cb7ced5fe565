//! The measure-dependent metric `d_η(x, y) = ‖d(x, ·) − d(y, ·)‖_{L²(η)}`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::ProbabilityMeasure;
use crate::metric::{FiniteMetricSpace, Metric};
use crate::par::Exec;

/// Off-diagonal `d_η` values at or below this are reported as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-12;

/// `L²(η)` distance between two sampled functions.
pub fn l2_eta_distance(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    f.iter().zip(g).zip(weights).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `L²(η)` inner product.
pub fn l2_eta_dot(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    f.iter().zip(g).zip(weights).map(|((a, b), w)| w * a * b).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoMetricWarning {
    /// Distinct pairs `i < j` with `d_η(i, j) <= COLLAPSE_TOL`.
    pub collapsed_pairs: Vec<(usize, usize)>,
    /// Atoms with zero mass (ball positivity fails at them for small radii).
    pub null_atoms: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifiedMetricSpace {
    base: FiniteMetricSpace,
    measure: ProbabilityMeasure,
    dist_eta: Vec<f64>,
    warning: Option<PseudoMetricWarning>,
}

impl Metric for ModifiedMetricSpace {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        let n = self.base.len();
        &self.dist_eta[i * n..(i + 1) * n]
    }
}

impl ModifiedMetricSpace {
    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn measure(&self) -> &ProbabilityMeasure {
        &self.measure
    }

    /// Set when `d_η` is only a pseudo-metric or η lacks full support.
    pub fn warning(&self) -> Option<&PseudoMetricWarning> {
        self.warning.as_ref()
    }

    pub fn is_metric(&self) -> bool {
        self.warning.as_ref().is_none_or(|w| w.collapsed_pairs.is_empty())
    }

    /// `d_η` as a metric space in its own right (fails on a pseudo-metric).
    pub fn to_metric_space(&self) -> Result<FiniteMetricSpace> {
        let n = self.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| self.row(i).to_vec()).collect();
        FiniteMetricSpace::from_rows(&rows, self.base.labels().map(|l| l.to_vec()))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }
}

pub fn build_d_eta(space: &FiniteMetricSpace, measure: &ProbabilityMeasure) -> Result<ModifiedMetricSpace> {
    build_d_eta_with(space, measure, Exec::default())
}

/// Computes the full `d_η` matrix, row blocks in parallel.
pub fn build_d_eta_with(
    space: &FiniteMetricSpace,
    measure: &ProbabilityMeasure,
    exec: Exec,
) -> Result<ModifiedMetricSpace> {
    measure.check_space(space)?;
    let n = space.len();
    let w = measure.weights();
    let upper =
        exec.map_range(n, |i| ((i + 1)..n).map(|j| l2_eta_distance(space.row(i), space.row(j), w)).collect::<Vec<_>>());
    let mut dist_eta = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            dist_eta[i * n + j] = d;
            dist_eta[j * n + i] = d;
        }
    }
    let mut collapsed_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if dist_eta[i * n + j] <= COLLAPSE_TOL {
                collapsed_pairs.push((i, j));
            }
        }
    }
    let null_atoms: Vec<usize> = (0..n).filter(|&i| w[i] <= 0.0).collect();
    let warning = (!collapsed_pairs.is_empty() || !null_atoms.is_empty())
        .then_some(PseudoMetricWarning { collapsed_pairs, null_atoms });
    Ok(ModifiedMetricSpace { base: space.clone(), measure: measure.clone(), dist_eta, warning })
}

/// `‖f_x‖_{L²(η)} = (Σ_z η_z d(x, z)²)^{1/2}`.
pub fn l2_norm_embedded<M: Metric + ?Sized>(space: &M, measure: &ProbabilityMeasure, i: usize) -> f64 {
    l2_eta_dot(space.row(i), space.row(i), measure.weights()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityMargin {
    pub min_pair_distance: f64,
    pub pair: (usize, usize),
    /// `ε = d(x, y)/4` for the achieving pair.
    pub eps: f64,
    /// `d_η(x, y)²`.
    pub lhs: f64,
    /// `ε²·η(B_ε(x))`.
    pub rhs: f64,
    pub bound_holds: bool,
}

/// Per-pair check of `d_η(x,y)² >= ε²·η(B_ε(x))` with `ε = d(x,y)/4`.
/// Returns the worst slack `lhs − rhs` and where it occurs.
pub fn ball_bound_slack(mm: &ModifiedMetricSpace, x: usize, y: usize) -> (f64, f64, f64) {
    let eps = mm.base.dist(x, y) / 4.0;
    let lhs = mm.dist(x, y).powi(2);
    let rhs = eps * eps * mm.measure.ball_mass(&mm.base, x, eps);
    (eps, lhs, rhs)
}

/// Smallest off-diagonal `d_η`, together with the quantitative lower bound
/// at the achieving pair. `None` for a single point.
pub fn injectivity_margin(mm: &ModifiedMetricSpace) -> Option<InjectivityMargin> {
    let n = mm.len();
    let mut best: Option<(f64, (usize, usize))> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mm.dist(i, j);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, (i, j)));
            }
        }
    }
    let (min_pair_distance, pair) = best?;
    let (eps, lhs, rhs) = ball_bound_slack(mm, pair.0, pair.1);
    Some(InjectivityMargin { min_pair_distance, pair, eps, lhs, rhs, bound_holds: lhs >= rhs - 1e-12 })
}

/// Worst `lhs − rhs` of the ball bound over all ordered pairs `x ≠ y`.
pub fn worst_ball_bound_slack(mm: &ModifiedMetricSpace) -> f64 {
    let n = mm.len();
    let mut worst = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let (_, lhs, rhs) = ball_bound_slack(mm, x, y);
                worst = worst.min(lhs - rhs);
            }
        }
    }
    worst
}
