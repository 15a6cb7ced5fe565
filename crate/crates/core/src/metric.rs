//! Finite metric spaces, metric-axiom validation, and the cone example.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;

/// Absolute slack allowed in the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// Anything with a finite, row-addressable distance matrix.
pub trait Metric: Sync {
    fn len(&self) -> usize;

    /// Row `i` of the distance matrix, i.e. the function `d(i, ·)`.
    fn row(&self, i: usize) -> &[f64];

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.row(i)[j]
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Metric for FiniteMetricSpace {
    fn len(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }
}

impl FiniteMetricSpace {
    /// Builds a space from a row-major matrix, rejecting anything that fails
    /// [`validate_metric`] at [`TRIANGLE_TOL`].
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self> {
        let report = validate_metric(rows, TRIANGLE_TOL)?;
        if !report.is_metric() {
            return Err(Error::NotAMetric(report.summary()));
        }
        let n = rows.len();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Dimension(format!("{} labels for {} points", l.len(), n)));
            }
        }
        Ok(Self { n, dist: rows.concat(), labels })
    }

    /// Builds a space from a flat row-major matrix already known to be a metric.
    pub(crate) fn from_flat_trusted(n: usize, dist: Vec<f64>, labels: Option<Vec<String>>) -> Self {
        debug_assert_eq!(dist.len(), n * n);
        Self { n, dist, labels }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn flat(&self) -> &[f64] {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        diameter(self)
    }

    /// Smallest off-diagonal distance; `None` for a single point.
    pub fn min_separation(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.dist(i, j);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }

    /// The same space with every distance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, dist: self.dist.iter().map(|d| d * factor).collect(), labels: self.labels.clone() }
    }

    /// Relabels points so that new point `k` is old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut dist = vec![0.0; n * n];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                dist[a * n + b] = self.dist(pa, pb);
            }
        }
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p].clone()).collect());
        Self { n, dist, labels }
    }
}

/// Largest pairwise distance (0 for a single point).
pub fn diameter<M: Metric + ?Sized>(space: &M) -> f64 {
    let n = space.len();
    (0..n).flat_map(|i| space.row(i).iter().copied()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    /// The intermediate point: `d(i,j) > d(i,k) + d(k,j) + tol`.
    pub k: usize,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValidationReport {
    pub n: usize,
    pub tol: f64,
    pub symmetric: bool,
    /// Zero diagonal and strictly positive off-diagonal entries.
    pub identity_ok: bool,
    pub triangle_violations: Vec<TriangleViolation>,
    pub max_excess: f64,
}

impl MetricValidationReport {
    pub fn is_metric(&self) -> bool {
        self.symmetric && self.identity_ok && self.triangle_violations.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.symmetric {
            parts.push("matrix is not symmetric".to_string());
        }
        if !self.identity_ok {
            parts.push("diagonal not zero or off-diagonal not positive".to_string());
        }
        if let Some(v) = self.triangle_violations.first() {
            parts.push(format!(
                "{} triangle violation(s), first at ({}, {}, {}) with excess {}",
                self.triangle_violations.len(),
                v.i,
                v.j,
                v.k,
                v.excess
            ));
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("; ")
        }
    }
}

pub fn validate_metric(dist: &[Vec<f64>], tol: f64) -> Result<MetricValidationReport> {
    validate_metric_with(dist, tol, Exec::default())
}

/// Checks symmetry, identity of indiscernibles and every triangle
/// inequality. Triangle violations are listed once per unordered pair
/// `i < j`.
#[allow(clippy::needless_range_loop)]
pub fn validate_metric_with(dist: &[Vec<f64>], tol: f64, exec: Exec) -> Result<MetricValidationReport> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::Empty("distance matrix"));
    }
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i, j));
        }
    }

    let mut symmetric = true;
    let mut identity_ok = true;
    for i in 0..n {
        if dist[i][i].abs() > tol {
            identity_ok = false;
        }
        for j in (i + 1)..n {
            if (dist[i][j] - dist[j][i]).abs() > tol {
                symmetric = false;
            }
            if dist[i][j] <= 0.0 || dist[j][i] <= 0.0 {
                identity_ok = false;
            }
        }
    }

    let per_row = exec.map_range(n, |i| {
        let mut out = Vec::new();
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let excess = dist[i][j] - (dist[i][k] + dist[k][j]);
                if excess > tol {
                    out.push(TriangleViolation { i, j, k, excess });
                }
            }
        }
        out
    });
    let triangle_violations: Vec<_> = per_row.into_iter().flatten().collect();
    let max_excess = triangle_violations.iter().map(|v| v.excess).fold(0.0, f64::max);

    Ok(MetricValidationReport { n, tol, symmetric, identity_ok, triangle_violations, max_excess })
}

/// Largest triangle-inequality excess over all triples, signed: negative
/// means every inequality holds with room to spare.
pub fn max_triangle_excess<M: Metric + ?Sized>(space: &M) -> f64 {
    let n = space.len();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if k != i && k != j && i != j {
                    worst = worst.max(space.dist(i, j) - space.dist(i, k) - space.dist(k, j));
                }
            }
        }
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

/// Euclidean distances between the given points.
pub fn euclidean_space(points: &[Vec<f64>]) -> Result<FiniteMetricSpace> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Empty("point list"));
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::Dimension(format!("point {i} has dimension {}, expected {dim}", p.len())));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i, 0));
        }
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d == 0.0 {
                return Err(Error::DuplicatePoints(i, j));
            }
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Ok(FiniteMetricSpace::from_flat_trusted(n, dist, None))
}

/// A point of the open cone, in the `(u, v)` parametrization
/// `F(u, v) = (u cos v, u sin v, u) / sqrt(2)` with `0 < u < 1`, `0 < v < 2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    u: f64,
    v: f64,
}

impl ConePoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidArgument(format!("cone radial coordinate u = {u} not in (0, 1)")));
        }
        if !(v > 0.0 && v < 2.0 * PI) {
            return Err(Error::InvalidArgument(format!("cone angle v = {v} not in (0, 2π)")));
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Total angle of the unrolled sector.
pub const CONE_SECTOR_ANGLE: f64 = SQRT_2 * PI;

/// Flat sector coordinates `(r, θ) = (√2·u, v/√2)`, with `θ ∈ (0, √2·π)`.
pub fn cone_sector_coords(p: ConePoint) -> (f64, f64) {
    (SQRT_2 * p.u, p.v / SQRT_2)
}

/// Intrinsic distance on the cone whose unrolled sector has angle `√2·π`.
///
/// The angular gap is taken the short way around the seam. When the gap
/// exceeds π the straight segment would leave the sector and the shortest
/// path runs through the apex instead.
pub fn cone_geodesic_distance(p: ConePoint, q: ConePoint) -> f64 {
    let (rp, tp) = cone_sector_coords(p);
    let (rq, tq) = cone_sector_coords(q);
    let raw = (tp - tq).abs();
    let gap = raw.min(CONE_SECTOR_ANGLE - raw);
    if gap <= PI {
        (rp * rp + rq * rq - 2.0 * rp * rq * gap.cos()).max(0.0).sqrt()
    } else {
        rp + rq
    }
}

/// Grid of `n_u × n_v` cone points at half-step offsets, so no point sits on
/// the apex or the removed seam. Point `(i, j)` has index `i * n_v + j`.
pub fn cone_grid(n_u: usize, n_v: usize) -> Result<Vec<ConePoint>> {
    if n_u < 2 || n_v < 3 {
        return Err(Error::InvalidArgument(format!("cone grid needs n_u >= 2 and n_v >= 3, got {n_u} x {n_v}")));
    }
    let mut pts = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let u = (i as f64 + 0.5) / n_u as f64;
        for j in 0..n_v {
            let v = 2.0 * PI * (j as f64 + 0.5) / n_v as f64;
            pts.push(ConePoint::new(u, v)?);
        }
    }
    Ok(pts)
}

pub fn make_cone_space(n_u: usize, n_v: usize) -> Result<FiniteMetricSpace> {
    let pts = cone_grid(n_u, n_v)?;
    let n = pts.len();
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = cone_geodesic_distance(pts[a], pts[b]);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let labels = (0..n_u).flat_map(|i| (0..n_v).map(move |j| format!("u{i}v{j}"))).collect();
    Ok(FiniteMetricSpace::from_flat_trusted(n, dist, Some(labels)))
}

/// Index permutation rotating a cone grid by `steps` in the angular direction.
pub fn cone_rotation(n_u: usize, n_v: usize, steps: usize) -> Vec<usize> {
    (0..n_u).flat_map(|i| (0..n_v).map(move |j| i * n_v + (j + steps) % n_v)).collect()
}
