//! Sampled constants and the random sources used to estimate them.
//!
//! Estimates are suprema of ratios over random samples, refined by a short
//! local search around the best samples. They are lower bounds for the true
//! supremum; the tests check that they are finite and stable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{q, Rational};

/// A sampled supremum standing in for an existential constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub label: String,
    pub sup_observed: f64,
    pub samples: usize,
    pub nu: Option<f64>,
}

impl EmpiricalConstant {
    pub fn new(label: impl Into<String>, sup_observed: f64, samples: usize, nu: Option<f64>) -> Self {
        EmpiricalConstant {
            label: label.into(),
            sup_observed,
            samples: samples.max(1),
            nu,
        }
    }

    /// Relative change from `self` to `other`.
    pub fn drift(&self, other: &EmpiricalConstant) -> f64 {
        let a = self.sup_observed;
        let b = other.sup_observed;
        let m = a.abs().max(b.abs());
        if m == 0.0 {
            0.0
        } else {
            (a - b).abs() / m
        }
    }

    pub fn is_finite(&self) -> bool {
        self.sup_observed.is_finite() && self.sup_observed >= 0.0
    }
}

/// Deterministic generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random rational with numerator in `-max_num..=max_num` and denominator in `1..=max_den`.
pub fn random_rational<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    let n = rng.random_range(-max_num..=max_num);
    let d = rng.random_range(1..=max_den);
    q(n, d)
}

pub fn random_rational_vector<R: Rng>(rng: &mut R, dim: usize, max_num: i64, max_den: i64) -> Vec<Rational> {
    (0..dim).map(|_| random_rational(rng, max_num, max_den)).collect()
}

/// Uniform point of the cube `[-1, 1]^dim`.
pub fn random_cube<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Standard normal vector (Box-Muller).
pub fn random_gaussian<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let v: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        })
        .collect()
}

/// Uniform point on the Euclidean unit sphere.
pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let g = random_gaussian(rng, dim);
        let n = crate::scalar::norm(&g);
        if n > 1e-12 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point of the Euclidean ball of radius `r`.
pub fn random_ball<R: Rng>(rng: &mut R, dim: usize, r: f64) -> Vec<f64> {
    let u = random_unit(rng, dim);
    let s: f64 = rng.random_range(0.0..1.0);
    let rad = r * s.powf(1.0 / dim as f64);
    u.into_iter().map(|x| x * rad).collect()
}

/// Settings for [`sup_over_cube`].
#[derive(Clone, Copy, Debug)]
pub struct SupSearch {
    pub samples: usize,
    pub seed: u64,
    /// Number of best samples refined by local search.
    pub polish_starts: usize,
    /// Local search steps per start.
    pub polish_steps: usize,
}

impl SupSearch {
    pub fn new(samples: usize, seed: u64) -> Self {
        SupSearch {
            samples,
            seed,
            polish_starts: 8,
            polish_steps: 400,
        }
    }

    pub fn without_polish(samples: usize, seed: u64) -> Self {
        SupSearch {
            samples,
            seed,
            polish_starts: 0,
            polish_steps: 0,
        }
    }
}

/// Supremum of `f` over the cube `[-1, 1]^dim`; `f` returns `None` on excluded points.
///
/// The random draws of a run with `n` samples are a prefix of the draws of a
/// run with more samples and the same seed.
pub fn sup_over_cube<F>(label: &str, dim: usize, cfg: SupSearch, nu: Option<f64>, f: F) -> EmpiricalConstant
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut r = rng(cfg.seed);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut counted = 0usize;
    for _ in 0..cfg.samples {
        let u = random_cube(&mut r, dim);
        if let Some(v) = f(&u).filter(|v| v.is_finite()) {
            counted += 1;
            insert_best(&mut best, cfg.polish_starts.max(1), v, u);
        }
    }
    let mut sup = best.first().map_or(0.0, |b| b.0);
    let mut pr = rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    for (v0, u0) in best.iter().take(cfg.polish_starts) {
        let mut cur = u0.clone();
        let mut val = *v0;
        let mut step = 0.1;
        for k in 0..cfg.polish_steps {
            let trial: Vec<f64> = cur
                .iter()
                .map(|x| (x + step * (pr.random_range(-1.0..=1.0))).clamp(-1.0, 1.0))
                .collect();
            if let Some(v) = f(&trial).filter(|v| v.is_finite()) {
                if v > val {
                    val = v;
                    cur = trial;
                    continue;
                }
            }
            if k % 40 == 39 {
                step *= 0.5;
            }
        }
        sup = sup.max(val);
    }
    EmpiricalConstant::new(label, sup, counted, nu)
}

fn insert_best(best: &mut Vec<(f64, Vec<f64>)>, keep: usize, v: f64, u: Vec<f64>) {
    if best.len() < keep || v > best.last().map_or(f64::NEG_INFINITY, |b| b.0) {
        let pos = best.iter().position(|b| b.0 < v).unwrap_or(best.len());
        best.insert(pos, (v, u));
        best.truncate(keep);
    }
}

/// Least squares slope of `log y` against `log x`.
pub fn fitted_order(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_of_smooth_function() {
        let c = sup_over_cube("t", 2, SupSearch::new(2000, 7), None, |u| {
            Some(1.0 - (u[0] - 0.3).powi(2) - (u[1] + 0.2).powi(2))
        });
        assert!((c.sup_observed - 1.0).abs() < 1e-4);
        assert_eq!(c.samples, 2000);
    }

    #[test]
    fn excluded_points_are_not_counted() {
        let c = sup_over_cube("t", 1, SupSearch::without_polish(100, 1), None, |u| {
            (u[0] > 0.0).then_some(u[0])
        });
        assert!(c.samples < 100);
        assert!(c.sup_observed <= 1.0);
    }

    #[test]
    fn order_fit() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((fitted_order(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn drift_is_relative() {
        let a = EmpiricalConstant::new("a", 1.0, 10, None);
        let b = EmpiricalConstant::new("a", 1.04, 20, None);
        assert!((a.drift(&b) - 0.04 / 1.04).abs() < 1e-12);
    }
}
