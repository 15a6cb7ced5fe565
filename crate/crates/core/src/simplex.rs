//! Convex quadratics over the probability simplex: multistart projected
//! gradient descent, finished by a primal active-set solve of the KKT
//! system on the support it identifies. Used as an independent minimizer
//! over convex hulls.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from_seed};

/// Euclidean projection onto `{c : c >= 0, Σ c = 1}` (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Run the active-set refinement after gradient descent.
    pub polish: bool,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self { iterations: 10_000, restarts: 8, seed: 0x5eed, polish: true }
    }
}

/// `q(c) = cᵀ G c − 2 bᵀ c`, with `G` symmetric PSD (row-major, `n × n`).
pub struct SimplexQuadratic<'a> {
    pub gram: &'a [f64],
    pub linear: &'a [f64],
}

impl SimplexQuadratic<'_> {
    fn n(&self) -> usize {
        self.linear.len()
    }

    fn gram_times(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.gram[i * n..(i + 1) * n].iter().zip(c).map(|(g, x)| g * x).sum()).collect()
    }

    pub fn value(&self, c: &[f64]) -> f64 {
        let gc = self.gram_times(c);
        c.iter().zip(&gc).zip(self.linear).map(|((x, g), b)| x * g - 2.0 * b * x).sum()
    }

    /// Gershgorin bound on the largest eigenvalue of `G`.
    pub fn eigen_bound(&self) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.gram[i * n..(i + 1) * n].iter().map(|g| g.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Multistart projected gradient descent with fixed step `1/(2L)`.
    /// Restart 0 starts at the barycenter, the rest at seeded random points.
    pub fn minimize(&self, cfg: &PgdConfig) -> Vec<f64> {
        let n = self.n();
        let l = self.eigen_bound();
        if l == 0.0 {
            return vec![1.0 / n as f64; n];
        }
        let step = 1.0 / (2.0 * l);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for r in 0..cfg.restarts.max(1) {
            let start = if r == 0 {
                vec![1.0 / n as f64; n]
            } else {
                let mut rng = rng_from_seed(derive_seed(cfg.seed, &[r as u64]));
                let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
                let t: f64 = raw.iter().sum();
                raw.iter().map(|x| x / t).collect()
            };
            let c = self.descend(start, step, cfg.iterations);
            let v = self.value(&c);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
        let (v, c) = best.expect("at least one restart");
        if !cfg.polish {
            return c;
        }
        let refined = self.active_set(c.clone());
        if self.value(&refined) <= v {
            refined
        } else {
            c
        }
    }

    /// Primal active-set iterations from a feasible point. Each step solves
    /// the equality-constrained problem on the current support
    /// `[2G_SS 1; 1ᵀ 0] [c_S; λ] = [2b_S; 1]`, moves toward it until a
    /// coefficient hits zero (dropping it), and otherwise adds the index
    /// with the most negative reduced gradient.
    pub fn active_set(&self, mut c: Vec<f64>) -> Vec<f64> {
        let n = self.n();
        let mut support: Vec<bool> = c.iter().map(|&x| x > 1e-12).collect();
        let mut last_value = f64::INFINITY;
        for _ in 0..(4 * n + 20) {
            let idx: Vec<usize> = (0..n).filter(|&i| support[i]).collect();
            let Some(target) = self.solve_on_support(&idx) else { return c };
            // largest feasible step toward target
            let mut alpha = 1.0f64;
            let mut blocking = None;
            for (k, &i) in idx.iter().enumerate() {
                if target[k] < 0.0 {
                    let a = c[i] / (c[i] - target[k]);
                    if a < alpha {
                        alpha = a;
                        blocking = Some(i);
                    }
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                c[i] += alpha * (target[k] - c[i]);
            }
            if let Some(b) = blocking {
                c[b] = 0.0;
                support[b] = false;
                let t: f64 = c.iter().sum();
                c.iter_mut().for_each(|x| *x /= t);
                continue;
            }
            // stop once add/drop rounds no longer lower the objective
            let value = self.value(&c);
            if value >= last_value - 1e-15 * value.abs() {
                return c;
            }
            last_value = value;
            let gc = self.gram_times(&c);
            let grad: Vec<f64> = gc.iter().zip(self.linear).map(|(g, b)| 2.0 * (g - b)).collect();
            let level = idx.iter().map(|&i| grad[i]).sum::<f64>() / idx.len() as f64;
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-300);
            let entering = (0..n)
                .filter(|&j| !support[j] && grad[j] < level - 1e-12 * scale)
                .min_by(|&a, &b| grad[a].total_cmp(&grad[b]));
            match entering {
                Some(j) => support[j] = true,
                None => return c,
            }
        }
        c
    }

    fn solve_on_support(&self, idx: &[usize]) -> Option<Vec<f64>> {
        let k = idx.len();
        if k == 0 {
            return None;
        }
        let n = self.n();
        let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (r, &i) in idx.iter().enumerate() {
            for (s, &j) in idx.iter().enumerate() {
                a[(r, s)] = 2.0 * self.gram[i * n + j];
            }
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
            rhs[r] = 2.0 * self.linear[i];
        }
        rhs[k] = 1.0;
        let sol = a.svd(true, true).solve(&rhs, 1e-14).ok()?;
        let c: Vec<f64> = sol.iter().take(k).copied().collect();
        c.iter().all(|x| x.is_finite()).then_some(c)
    }

    fn descend(&self, mut c: Vec<f64>, step: f64, iterations: usize) -> Vec<f64> {
        for _ in 0..iterations {
            let gc = self.gram_times(&c);
            let trial: Vec<f64> =
                c.iter().zip(&gc).zip(self.linear).map(|((x, g), b)| x - step * 2.0 * (g - b)).collect();
            let next = project_to_simplex(&trial);
            if next == c {
                break;
            }
            c = next;
        }
        c
    }
}
