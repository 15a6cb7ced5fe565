//! Covering numbers, the entropy integral, and the dyadic covering bound.
//!
//! Covers use closed balls of radius `eps` around chosen sample points:
//! a point `x` is covered by center `c` when `d(c, x) <= eps`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Metric};
use crate::par::Exec;

/// Default size limit for the exact (exponential) covering search.
pub const EXACT_MAX_N: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMethod {
    Greedy,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub eps: f64,
    pub n_cover: usize,
    pub method: CoverMethod,
    pub centers: Vec<usize>,
}

impl CoveringReport {
    /// Direct scan: every point lies within `eps` of some center.
    pub fn covers<M: Metric + ?Sized>(&self, space: &M) -> bool {
        (0..space.len()).all(|x| self.centers.iter().any(|&c| space.dist(c, x) <= self.eps))
    }
}

fn validate_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("covering radius must be positive, got {eps}")))
    }
}

/// Farthest-point traversal: keep adding the point farthest from the
/// current centers until everything is within `eps`.
fn farthest_point_cover<M: Metric + ?Sized>(space: &M, eps: f64) -> Vec<usize> {
    let n = space.len();
    let mut centers = vec![0];
    let mut gap: Vec<f64> = space.row(0).to_vec();
    loop {
        let (far, &d) = gap.iter().enumerate().fold((0, &f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        if d <= eps || centers.len() == n {
            return centers;
        }
        centers.push(far);
        for (g, dd) in gap.iter_mut().zip(space.row(far)) {
            *g = g.min(*dd);
        }
    }
}

/// Greedy set cover: repeatedly take the ball covering the most uncovered
/// points (lowest index on ties).
fn greedy_set_cover<M: Metric + ?Sized>(space: &M, eps: f64) -> Vec<usize> {
    let n = space.len();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut centers = Vec::new();
    while remaining > 0 {
        let (best, gain) = (0..n)
            .map(|c| {
                let g = space.row(c).iter().zip(&covered).filter(|(d, cov)| !**cov && **d <= eps).count();
                (c, g)
            })
            .fold((0, 0), |b, c| if c.1 > b.1 { c } else { b });
        debug_assert!(gain > 0);
        centers.push(best);
        for (cov, d) in covered.iter_mut().zip(space.row(best)) {
            if !*cov && *d <= eps {
                *cov = true;
                remaining -= 1;
            }
        }
    }
    centers
}

/// Upper bound on the covering number: the better of a farthest-point
/// traversal and a greedy set cover.
pub fn covering_number_greedy<M: Metric + ?Sized>(space: &M, eps: f64) -> Result<CoveringReport> {
    validate_eps(eps)?;
    if space.is_empty() {
        return Err(Error::Empty("space"));
    }
    let a = farthest_point_cover(space, eps);
    let b = greedy_set_cover(space, eps);
    let mut centers = if b.len() < a.len() { b } else { a };
    centers.sort_unstable();
    Ok(CoveringReport { eps, n_cover: centers.len(), method: CoverMethod::Greedy, centers })
}

/// Minimum covering number by branch and bound over center subsets.
pub fn covering_number_exact<M: Metric + ?Sized>(space: &M, eps: f64, max_n: usize) -> Result<CoveringReport> {
    validate_eps(eps)?;
    let n = space.len();
    if n == 0 {
        return Err(Error::Empty("space"));
    }
    let max_n = max_n.min(64);
    if n > max_n {
        return Err(Error::TooLarge { n, max_n });
    }
    let balls: Vec<u64> = (0..n)
        .map(|c| space.row(c).iter().enumerate().filter(|(_, d)| **d <= eps).fold(0u64, |m, (x, _)| m | (1 << x)))
        .collect();
    let coverers: Vec<Vec<usize>> = (0..n).map(|x| (0..n).filter(|&c| balls[c] >> x & 1 == 1).collect()).collect();
    let max_ball = balls.iter().map(|b| b.count_ones()).max().unwrap_or(1);
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let mut best = covering_number_greedy(space, eps)?.centers;
    let mut chosen = Vec::new();
    branch(all, &balls, &coverers, max_ball, &mut chosen, &mut best);
    best.sort_unstable();
    Ok(CoveringReport { eps, n_cover: best.len(), method: CoverMethod::Exact, centers: best })
}

fn branch(
    uncovered: u64,
    balls: &[u64],
    coverers: &[Vec<usize>],
    max_ball: u32,
    chosen: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if uncovered == 0 {
        if chosen.len() < best.len() {
            *best = chosen.clone();
        }
        return;
    }
    let lower = chosen.len() + uncovered.count_ones().div_ceil(max_ball) as usize;
    if lower >= best.len() {
        return;
    }
    // branch on the uncovered point with the fewest candidate centers
    let pivot = (0..coverers.len())
        .filter(|&x| uncovered >> x & 1 == 1)
        .min_by_key(|&x| coverers[x].len())
        .expect("uncovered is non-empty");
    let mut options = coverers[pivot].clone();
    options.sort_by_key(|&c| std::cmp::Reverse((balls[c] & uncovered).count_ones()));
    for c in options {
        chosen.push(c);
        branch(uncovered & !balls[c], balls, coverers, max_ball, chosen, best);
        chosen.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    /// Strictly decreasing radii.
    pub grid: Vec<f64>,
    pub n_cover: Vec<usize>,
    /// Contribution of the cell `[grid[k+1], grid[k]]`, evaluated at its
    /// larger endpoint; the last entry is 0.
    pub cell_contribution: Vec<f64>,
    pub integral_estimate: f64,
    /// Smallest pairwise distance; below it every point needs its own ball.
    pub resolution_floor: f64,
    /// Bound `sqrt(log n)·grid_min` on the part of the integral below the grid.
    pub floor_remainder: f64,
    pub convention: String,
}

impl EntropyCurve {
    /// CSV with columns `eps,n_cover,sqrt_log,cell_contribution`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "n_cover", "sqrt_log", "cell_contribution"])?;
        for k in 0..self.grid.len() {
            w.write_record([
                self.grid[k].to_string(),
                self.n_cover[k].to_string(),
                (self.n_cover[k] as f64).ln().sqrt().to_string(),
                self.cell_contribution[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn entropy_integral(space: &FiniteMetricSpace, grid: &[f64]) -> Result<EntropyCurve> {
    entropy_integral_with(space, grid, Exec::default())
}

/// Left-endpoint (larger radius) Riemann sum of `sqrt(log N(K, u))` over
/// the cells of `grid`.
///
/// Greedy counts are made monotone by reusing a cover found at a smaller
/// radius whenever it beats the greedy cover at a larger one.
pub fn entropy_integral_with<M: Metric + ?Sized>(space: &M, grid: &[f64], exec: Exec) -> Result<EntropyCurve> {
    if grid.is_empty() {
        return Err(Error::Empty("eps grid"));
    }
    if grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps grid must be positive and strictly decreasing".into()));
    }
    let covers = exec.map_range(grid.len(), |k| covering_number_greedy(space, grid[k]));
    let mut n_cover = covers.into_iter().map(|c| c.map(|r| r.n_cover)).collect::<Result<Vec<_>>>()?;
    for k in (0..grid.len() - 1).rev() {
        n_cover[k] = n_cover[k].min(n_cover[k + 1]);
    }
    let mut cell_contribution = vec![0.0; grid.len()];
    for k in 0..grid.len() - 1 {
        if n_cover[k] > 1 {
            cell_contribution[k] = (n_cover[k] as f64).ln().sqrt() * (grid[k] - grid[k + 1]);
        }
    }
    let integral_estimate = cell_contribution.iter().sum();
    let n = space.len();
    let resolution_floor = (0..n).flat_map(|i| space.row(i)[i + 1..].to_vec()).fold(f64::INFINITY, f64::min);
    let floor_remainder = (n as f64).ln().sqrt() * grid[grid.len() - 1];
    Ok(EntropyCurve {
        grid: grid.to_vec(),
        n_cover,
        cell_contribution,
        integral_estimate,
        resolution_floor: if resolution_floor.is_finite() { resolution_floor } else { 0.0 },
        floor_remainder,
        convention: "closed balls of radius eps around sample points".into(),
    })
}

/// `cells + 1` evenly spaced radii from `hi` down to `lo`.
pub fn uniform_eps_grid(hi: f64, lo: f64, cells: usize) -> Vec<f64> {
    let step = (hi - lo) / cells as f64;
    (0..=cells).map(|k| hi - step * k as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSums {
    pub partial_sums: Vec<f64>,
    /// `S_{k_max} − S_{k_max − 10}` (or `− S_0` when `k_max < 10`).
    pub tail: f64,
}

/// Partial sums of `Σ_k sqrt((k + 2) log M + log N) · 2^{−k−1}` for
/// `k = 0..=k_max`.
pub fn dyadic_bound_partial_sums(n_balls: f64, m: f64, k_max: usize) -> Result<DyadicSums> {
    if !(n_balls >= 1.0 && m >= 1.0) || k_max < 1 {
        return Err(Error::InvalidArgument(format!("need N >= 1, M >= 1, k_max >= 1 (got {n_balls}, {m}, {k_max})")));
    }
    let (ln_n, ln_m) = (n_balls.ln(), m.ln());
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = (0..=k_max)
        .map(|k| {
            let term = ((k as f64 + 2.0) * ln_m + ln_n).sqrt() * 0.5f64.powi(k as i32 + 1);
            acc += term;
            acc
        })
        .collect();
    let back = k_max.saturating_sub(10);
    let tail = partial_sums[k_max] - partial_sums[back];
    Ok(DyadicSums { partial_sums, tail })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingConstant {
    /// Balls of radius 1 needed for the rescaled space.
    pub n: usize,
    /// Worst number of radius-1/2 balls needed inside one radius-1 ball.
    pub m: usize,
    /// Factor applied to the distances so the diameter is 2.
    pub scale: f64,
}

/// Constants `(N, M)` of the dyadic covering bound, computed on the space
/// rescaled to diameter 2.
pub fn doubling_constant(space: &FiniteMetricSpace) -> Result<DoublingConstant> {
    let diam = space.diameter();
    if diam == 0.0 {
        return Ok(DoublingConstant { n: 1, m: 1, scale: 1.0 });
    }
    let scale = 2.0 / diam;
    let s = space.scaled(scale);
    let top = covering_number_greedy(&s, 1.0)?;
    let mut m = 1;
    for &c in &top.centers {
        let ball: Vec<usize> = (0..s.len()).filter(|&x| s.dist(c, x) <= 1.0).collect();
        let sub = SubSpace::new(&s, &ball);
        m = m.max(covering_number_greedy(&sub, 0.5)?.n_cover);
    }
    Ok(DoublingConstant { n: top.n_cover, m, scale })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicCheck {
    pub k: u32,
    pub measured: usize,
    pub bound: f64,
    pub ok: bool,
}

/// Compares greedy `N(2^{−k})` on the rescaled space with `N·M^{k+1}`.
pub fn dyadic_cover_check(space: &FiniteMetricSpace, k_max: u32) -> Result<Vec<DyadicCheck>> {
    let dc = doubling_constant(space)?;
    let s = space.scaled(dc.scale);
    (0..=k_max)
        .map(|k| {
            let measured = covering_number_greedy(&s, 0.5f64.powi(k as i32))?.n_cover;
            let bound = dc.n as f64 * (dc.m as f64).powi(k as i32 + 1);
            Ok(DyadicCheck { k, measured, bound, ok: measured as f64 <= bound })
        })
        .collect()
}

/// Induced metric on a subset of points.
struct SubSpace {
    n: usize,
    rows: Vec<f64>,
}

impl SubSpace {
    fn new<M: Metric + ?Sized>(space: &M, idx: &[usize]) -> Self {
        let rows = idx.iter().flat_map(|&a| idx.iter().map(move |&b| space.dist(a, b))).collect();
        Self { n: idx.len(), rows }
    }
}

impl Metric for SubSpace {
    fn len(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{euclidean_space, make_cone_space};
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        euclidean_space(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    fn cloud(n: usize, seed: u64) -> FiniteMetricSpace {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        euclidean_space(&pts).unwrap()
    }

    /// Minimum cover size by enumerating every subset; independent of the
    /// branch-and-bound search.
    fn brute_force_cover(space: &FiniteMetricSpace, eps: f64) -> usize {
        let n = space.len();
        (1u32..(1 << n))
            .filter(|mask| (0..n).all(|x| (0..n).any(|c| mask >> c & 1 == 1 && space.dist(c, x) <= eps)))
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn greedy_extremes() {
        let s = cloud(25, 1);
        let diam = s.diameter();
        assert_eq!(covering_number_greedy(&s, diam).unwrap().n_cover, 1);
        let tiny = s.min_separation().unwrap() * 0.5;
        assert_eq!(covering_number_greedy(&s, tiny).unwrap().n_cover, 25);
        assert!(covering_number_greedy(&s, 0.0).is_err());
    }

    #[test]
    fn exact_collinear() {
        let s = line(&[0.0, 1.0, 2.0]);
        let one = covering_number_exact(&s, 1.0, EXACT_MAX_N).unwrap();
        assert_eq!(one.n_cover, 1);
        assert_eq!(one.centers, vec![1]);
        assert_eq!(covering_number_exact(&s, 0.5, EXACT_MAX_N).unwrap().n_cover, 3);
    }

    #[test]
    fn exact_refuses_large_spaces() {
        let s = cloud(30, 2);
        assert!(matches!(covering_number_exact(&s, 0.2, EXACT_MAX_N), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn exact_matches_brute_force_and_bounds_greedy() {
        for seed in 0..20 {
            let s = cloud(12, 100 + seed);
            for &eps in &[0.1, 0.2, 0.3, 0.5] {
                let ex = covering_number_exact(&s, eps, EXACT_MAX_N).unwrap();
                let gr = covering_number_greedy(&s, eps).unwrap();
                assert!(ex.covers(&s) && gr.covers(&s));
                assert_eq!(ex.n_cover, brute_force_cover(&s, eps), "seed {seed} eps {eps}");
                assert!(gr.n_cover >= ex.n_cover);
            }
        }
    }

    #[test]
    fn two_point_entropy_closed_form() {
        // N(u) = 2 for u < 1, 1 for u >= 1
        let s = line(&[0.0, 1.0]);
        let grid = uniform_eps_grid(1.0, 0.125, 7);
        let curve = entropy_integral(&s, &grid).unwrap();
        let expected: f64 = (0..7).filter(|&k| grid[k] < 1.0).map(|k| 2f64.ln().sqrt() * (grid[k] - grid[k + 1])).sum();
        assert!((curve.integral_estimate - expected).abs() < 1e-15);
        assert!((expected - 2f64.ln().sqrt() * 0.75).abs() < 1e-12);
        assert_eq!(curve.resolution_floor, 1.0);
        assert!((curve.floor_remainder - 2f64.ln().sqrt() * 0.125).abs() < 1e-15);
    }

    #[test]
    fn entropy_curve_is_monotone_and_finite() {
        let s = make_cone_space(4, 12).unwrap();
        let grid = uniform_eps_grid(s.diameter(), s.diameter() / 64.0, 63);
        let c = entropy_integral(&s, &grid).unwrap();
        assert!(c.n_cover.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.integral_estimate.is_finite());
        assert!(c.integral_estimate <= (s.len() as f64).ln().sqrt() * s.diameter());
        assert!(entropy_integral(&s, &[0.5, 0.5]).is_err());
        assert!(entropy_integral(&s, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn entropy_parallel_matches_sequential() {
        let s = cloud(60, 4);
        let grid = uniform_eps_grid(s.diameter(), 0.01, 40);
        let a = entropy_integral_with(&s, &grid, Exec::Sequential).unwrap();
        let b = entropy_integral_with(&s, &grid, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dyadic_sums_examples() {
        let zero = dyadic_bound_partial_sums(1.0, 1.0, 20).unwrap();
        assert!(zero.partial_sums.iter().all(|&s| s == 0.0));
        let e = dyadic_bound_partial_sums(1.0, std::f64::consts::E, 60).unwrap();
        assert!((e.partial_sums[0] - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((e.partial_sums[1] - e.partial_sums[0] - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(e.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let big = dyadic_bound_partial_sums(1e6, 1e6, 60).unwrap();
        assert!(big.tail < 1e-6);
        assert!(dyadic_bound_partial_sums(0.5, 2.0, 10).is_err());
    }

    #[test]
    fn doubling_constants() {
        let one = line(&[3.0]);
        assert_eq!(doubling_constant(&one).unwrap(), DoublingConstant { n: 1, m: 1, scale: 1.0 });
        let two = line(&[0.0, 5.0]);
        let dc = doubling_constant(&two).unwrap();
        assert_eq!((dc.n, dc.m), (2, 1));
        let cone = make_cone_space(6, 16).unwrap();
        for c in dyadic_cover_check(&cone, 4).unwrap() {
            assert!(c.ok, "{c:?}");
        }
    }
}
