//! The Kuratowski embedding `x ↦ d(x, ·)` and finite convex combinations of
//! its image.
//!
//! Functions on the space are sampled at the space's own points, so an
//! embedded function is a plain vector and the embedding of the whole space
//! is the distance matrix itself.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MASS_TOL;
use crate::metric::{diameter, Metric};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddedFunction {
    pub values: Vec<f64>,
}

impl EmbeddedFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i, 0));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }
}

pub fn embed_point<M: Metric + ?Sized>(space: &M, i: usize) -> Result<EmbeddedFunction> {
    if i >= space.len() {
        return Err(Error::IndexOutOfRange { index: i, n: space.len() });
    }
    Ok(EmbeddedFunction { values: space.row(i).to_vec() })
}

/// `‖f − g‖_∞` over the sample points.
pub fn sup_distance(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::Dimension(format!("functions of length {} and {}", f.len(), g.len())));
    }
    Ok(sup_distance_unchecked(f, g))
}

pub(crate) fn sup_distance_unchecked(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Lipschitz seminorm `max_{t≠s} |f(t) − f(s)| / d(t, s)`; 0 on a single point.
pub fn lipschitz_constant<M: Metric + ?Sized>(f: &[f64], space: &M) -> Result<f64> {
    let n = space.len();
    if f.len() != n {
        return Err(Error::Dimension(format!("function of length {} on {n} points", f.len())));
    }
    let mut best = 0.0f64;
    for t in 0..n {
        let row = space.row(t);
        for s in (t + 1)..n {
            best = best.max((f[t] - f[s]).abs() / row[s]);
        }
    }
    Ok(best)
}

/// A finite convex combination `Σ c_x f_x` of embedded points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullPoint {
    coeffs: BTreeMap<usize, f64>,
    values: Vec<f64>,
}

impl HullPoint {
    pub fn coeffs(&self) -> &BTreeMap<usize, f64> {
        &self.coeffs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dense coefficient vector of length `n`.
    pub fn dense_coeffs(&self, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (&i, &w) in &self.coeffs {
            c[i] = w;
        }
        c
    }

    /// Largest deviation between the cached values and a fresh recomputation.
    pub fn cache_error<M: Metric + ?Sized>(&self, space: &M) -> f64 {
        sup_distance_unchecked(&combine(space, &self.coeffs), &self.values)
    }
}

fn combine<M: Metric + ?Sized>(space: &M, coeffs: &BTreeMap<usize, f64>) -> Vec<f64> {
    let mut values = vec![0.0; space.len()];
    for (&i, &w) in coeffs {
        for (v, d) in values.iter_mut().zip(space.row(i)) {
            *v += w * d;
        }
    }
    values
}

/// Builds a hull point from `(index, weight)` pairs. Repeated indices are
/// merged and zero weights dropped.
pub fn hull_point<M: Metric + ?Sized>(space: &M, coeffs: impl IntoIterator<Item = (usize, f64)>) -> Result<HullPoint> {
    let n = space.len();
    let mut merged = BTreeMap::new();
    for (i, w) in coeffs {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument(format!("coefficient {w} at index {i} is negative or non-finite")));
        }
        if w > 0.0 {
            *merged.entry(i).or_insert(0.0) += w;
        }
    }
    let total: f64 = merged.values().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!("coefficients sum to {total}, expected 1")));
    }
    let values = combine(space, &merged);
    Ok(HullPoint { coeffs: merged, values })
}

/// Hull point from a dense coefficient vector (length `n`).
pub fn hull_point_dense<M: Metric + ?Sized>(space: &M, coeffs: &[f64]) -> Result<HullPoint> {
    if coeffs.len() != space.len() {
        return Err(Error::Dimension(format!("{} coefficients for {} points", coeffs.len(), space.len())));
    }
    hull_point(space, coeffs.iter().copied().enumerate())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDiameterCheck {
    pub dist_to_image: f64,
    pub nearest_point: usize,
    pub bound: f64,
    pub ok: bool,
}

/// Sup-distance from `h` to the embedded image, against twice the diameter.
pub fn two_diameter_check<M: Metric + ?Sized>(space: &M, h: &HullPoint) -> Result<TwoDiameterCheck> {
    let n = space.len();
    if h.values.len() != n {
        return Err(Error::Dimension(format!("hull point of length {} on {n} points", h.values.len())));
    }
    let (nearest_point, dist_to_image) = (0..n)
        .map(|x| (x, sup_distance_unchecked(&h.values, space.row(x))))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    let bound = 2.0 * diameter(space);
    Ok(TwoDiameterCheck { dist_to_image, nearest_point, bound, ok: dist_to_image <= bound + 1e-12 })
}
