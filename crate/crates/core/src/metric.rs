//! Homogeneous gauges and distances, generating words and sampled
//! estimates for them.
//!
//! `d(x, y) = N((-x) o y)` for a homogeneous gauge `N`.

use serde::{Deserialize, Serialize};

use crate::bch::{conjugate, group_product, group_product_all, left_difference};
use crate::empirical::{sup_over_cube, EmpiricalConstant, SupSearch};
use crate::error::AlgebraError;
use crate::graded_algebra::GradedAlgebra;
use crate::linalg;
use crate::scalar::{norm, Rational};

/// Homogeneous gauge on exponential coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomogeneousMetric {
    /// `((|v|^2)^2 + 16 |z|^2)^(1/4)` on step-2 algebras.
    Koranyi,
    /// `max_i w_i |pi_i x|^(1/i)`; a quasi-distance in general.
    WeightedMax { weights: Vec<f64> },
}

impl HomogeneousMetric {
    /// Korányi gauge for step 2, unit weighted max otherwise.
    pub fn default_for(alg: &GradedAlgebra) -> Self {
        if alg.step() == 2 {
            HomogeneousMetric::Koranyi
        } else {
            HomogeneousMetric::WeightedMax {
                weights: vec![1.0; alg.step()],
            }
        }
    }

    pub fn weighted_max(step: usize) -> Self {
        HomogeneousMetric::WeightedMax {
            weights: vec![1.0; step],
        }
    }

    /// Checks that the gauge applies to `alg`.
    pub fn check(&self, alg: &GradedAlgebra) -> Result<(), AlgebraError> {
        match self {
            HomogeneousMetric::Koranyi => {
                if alg.step() > 2 {
                    return Err(AlgebraError::Mismatch(format!(
                        "Korányi gauge needs step at most 2, algebra {} has step {}",
                        alg.name(),
                        alg.step()
                    )));
                }
            }
            HomogeneousMetric::WeightedMax { weights } => {
                if weights.len() < alg.step() || weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(AlgebraError::Mismatch(format!(
                        "need {} positive layer weights, got {:?}",
                        alg.step(),
                        weights
                    )));
                }
            }
        }
        Ok(())
    }

    /// `N(x)`; assumes [`check`](Self::check) passed.
    pub fn gauge(&self, alg: &GradedAlgebra, x: &[f64]) -> f64 {
        match self {
            HomogeneousMetric::Koranyi => {
                let mut v2 = 0.0;
                let mut z2 = 0.0;
                for (c, l) in x.iter().zip(alg.layers()) {
                    if *l == 1 {
                        v2 += c * c;
                    } else {
                        z2 += c * c;
                    }
                }
                (v2 * v2 + 16.0 * z2).sqrt().sqrt()
            }
            HomogeneousMetric::WeightedMax { weights } => {
                let mut sq = vec![0.0; alg.step()];
                for (c, l) in x.iter().zip(alg.layers()) {
                    sq[l - 1] += c * c;
                }
                sq.iter()
                    .enumerate()
                    .map(|(i, s)| weights[i] * s.sqrt().powf(1.0 / (i + 1) as f64))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Checked gauge.
    pub fn quasi_norm(&self, alg: &GradedAlgebra, x: &[f64]) -> Result<f64, AlgebraError> {
        self.check(alg)?;
        alg.check_len(x)?;
        Ok(self.gauge(alg, x))
    }

    /// `N((-x) o y)`.
    pub fn dist(&self, alg: &GradedAlgebra, x: &[f64], y: &[f64]) -> f64 {
        self.gauge(alg, &left_difference(alg, x, y))
    }

    /// Checked distance.
    pub fn distance(&self, alg: &GradedAlgebra, x: &[f64], y: &[f64]) -> Result<f64, AlgebraError> {
        self.check(alg)?;
        alg.check_len(x)?;
        alg.check_len(y)?;
        Ok(self.dist(alg, x, y))
    }

    /// `|pi_1(x - y)| / d(x, y)`, `None` for `x = y`.
    pub fn first_layer_ratio(&self, alg: &GradedAlgebra, x: &[f64], y: &[f64]) -> Option<f64> {
        let d = self.dist(alg, x, y);
        if d < 1e-300 {
            return None;
        }
        let diff = alg.project_layer(&linalg::sub(x, y), 1);
        Some(norm(&diff) / d)
    }

    /// Point of the gauge ball of radius `r` attached to a cube sample:
    /// direction `u`, radius parameter `c` in `[-1, 1]`.
    pub fn ball_point(&self, alg: &GradedAlgebra, u: &[f64], c: f64, r: f64) -> Option<Vec<f64>> {
        let n = self.gauge(alg, u);
        if n < 1e-9 {
            return None;
        }
        let s = r * 0.5 * (c + 1.0);
        Some(alg.dilate(u, &(s / n)))
    }

    /// Point of the gauge sphere of radius `r` in direction `u`.
    pub fn sphere_point(&self, alg: &GradedAlgebra, u: &[f64], r: f64) -> Option<Vec<f64>> {
        let n = self.gauge(alg, u);
        if n < 1e-9 {
            return None;
        }
        Some(alg.dilate(u, &(r / n)))
    }
}

/// Euclidean ball point attached to a cube sample: `u` clamped to the unit ball, scaled by `r`.
pub fn euclidean_ball_point(u: &[f64], r: f64) -> Vec<f64> {
    let n = norm(u);
    let f = if n > 1.0 { r / n } else { r };
    u.iter().map(|x| x * f).collect()
}

/// Word `P^N(a) = delta_{a_1} h_{i_1} ... delta_{a_N} h_{i_N}` over first-layer generators.
///
/// Generators are `X_i / d(exp X_i)` so that each `h_i` has unit gauge; the
/// scales are kept in `scales`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordSystem {
    /// Basis indices of the letters.
    pub indices: Vec<usize>,
    /// `d(exp X_k)` for every basis index `k` of the first layer, zero elsewhere.
    pub scales: Vec<f64>,
    /// Pairs of basis indices whose commutator words lead the word; empty for custom words.
    pub pairs: Vec<(usize, usize)>,
    solvable: bool,
}

impl WordSystem {
    /// Built-in system for step 1 and 2: one commutator block `(i, j, i, j)` per
    /// second-layer direction, then every first-layer letter once.
    pub fn standard(alg: &GradedAlgebra, metric: &HomogeneousMetric) -> Result<Self, AlgebraError> {
        metric.check(alg)?;
        if alg.step() > 2 {
            return Err(AlgebraError::Unsupported(format!(
                "no built-in word solver for step {}; register a custom word",
                alg.step()
            )));
        }
        if !alg.is_stratified() {
            return Err(AlgebraError::Unsupported("word systems need a stratified algebra".into()));
        }
        let v1 = alg.layer_indices(1).to_vec();
        let mut pairs = Vec::new();
        let mut got: Vec<Vec<Rational>> = Vec::new();
        let target = alg.layer_dim(2);
        'outer: for (a, &i) in v1.iter().enumerate() {
            for &j in &v1[a + 1..] {
                if got.len() == target {
                    break 'outer;
                }
                let b = alg.bracket(&alg.unit::<Rational>(i), &alg.unit::<Rational>(j));
                let mut trial = got.clone();
                trial.push(b.clone());
                if linalg::rank(&trial) > got.len() {
                    got.push(b);
                    pairs.push((i, j));
                }
            }
        }
        let mut indices = Vec::new();
        for &(i, j) in &pairs {
            indices.extend([i, j, i, j]);
        }
        indices.extend(v1.iter().copied());
        Ok(WordSystem {
            indices,
            scales: Self::scales_for(alg, metric),
            pairs,
            solvable: true,
        })
    }

    /// User supplied letters; only evaluation is available.
    pub fn custom(alg: &GradedAlgebra, metric: &HomogeneousMetric, indices: Vec<usize>) -> Result<Self, AlgebraError> {
        metric.check(alg)?;
        for &i in &indices {
            if i >= alg.dim() || alg.layer_of(i) != 1 {
                return Err(AlgebraError::Index(i));
            }
        }
        Ok(WordSystem {
            indices,
            scales: Self::scales_for(alg, metric),
            pairs: Vec::new(),
            solvable: false,
        })
    }

    fn scales_for(alg: &GradedAlgebra, metric: &HomogeneousMetric) -> Vec<f64> {
        (0..alg.dim())
            .map(|k| {
                if alg.layer_of(k) == 1 {
                    metric.gauge(alg, &alg.unit::<f64>(k))
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `P^s(a)`, the product of the first `s` letters.
    pub fn generating_word(&self, alg: &GradedAlgebra, a: &[f64], s: usize) -> Result<Vec<f64>, AlgebraError> {
        if s > self.indices.len() || a.len() < s {
            return Err(AlgebraError::Index(s));
        }
        let factors: Vec<Vec<f64>> = (0..s)
            .map(|k| {
                let i = self.indices[k];
                let mut v = vec![0.0; alg.dim()];
                v[i] = a[k] / self.scales[i];
                v
            })
            .collect();
        Ok(group_product_all(alg, &factors))
    }

    /// Coefficients `a` with `P^N(a) = x`, in closed form.
    pub fn solve_word(&self, alg: &GradedAlgebra, x: &[f64]) -> Result<Vec<f64>, AlgebraError> {
        if !self.solvable {
            return Err(AlgebraError::Unsupported("no registered solver for this word".into()));
        }
        alg.check_len(x)?;
        let v1 = alg.layer_indices(1);
        let nb = 4 * self.pairs.len();
        let mut a = vec![0.0; self.indices.len()];
        for (k, &i) in v1.iter().enumerate() {
            a[nb + k] = x[i] * self.scales[i];
        }
        if self.pairs.is_empty() {
            return Ok(a);
        }
        // second layer left for the commutator blocks
        let horiz: Vec<f64> = alg.project_layer(x, 1);
        let mut hp = alg.zero::<f64>();
        for &i in v1 {
            let mut e = vec![0.0; alg.dim()];
            e[i] = horiz[i];
            hp = group_product(alg, &hp, &e);
        }
        let rest: Vec<f64> = alg.project_layer(&linalg::sub(x, &hp), 2);
        let v2 = alg.layer_indices(2);
        let cols: Vec<Vec<f64>> = self
            .pairs
            .iter()
            .map(|&(i, j)| {
                let b = alg.bracket(&alg.unit::<f64>(i), &alg.unit::<f64>(j));
                v2.iter().map(|&k| b[k]).collect()
            })
            .collect();
        let m = linalg::from_columns(&cols, v2.len());
        let rhs: Vec<f64> = v2.iter().map(|&k| rest[k]).collect();
        let mu = linalg::solve_f64(&m, &rhs).ok_or_else(|| AlgebraError::Unsupported("commutator blocks do not span".into()))?;
        for (b, &(i, j)) in self.pairs.iter().enumerate() {
            let lam = mu[b] * self.scales[i] * self.scales[j];
            let s = lam.abs().sqrt();
            let t = lam.signum() * s;
            a[4 * b] = s;
            a[4 * b + 1] = t;
            a[4 * b + 2] = -s;
            a[4 * b + 3] = -t;
        }
        Ok(a)
    }

    /// Sampled `c(G, d) = max |a_s|` over the unit gauge sphere (times `r`).
    pub fn word_constant(
        &self,
        alg: &GradedAlgebra,
        metric: &HomogeneousMetric,
        r: f64,
        cfg: SupSearch,
    ) -> EmpiricalConstant {
        sup_over_cube("c(G,d)", alg.dim(), cfg, Some(r), |u| {
            let x = metric.sphere_point(alg, u, r)?;
            let a = self.solve_word(alg, &x).ok()?;
            Some(a.iter().map(|v| v.abs()).fold(0.0, f64::max))
        })
    }
}

/// `sup |pi_1(xi - eta)| / d(exp xi, exp eta)` over pairs in the box `[-nu, nu]^dim`.
pub fn first_layer_constant(alg: &GradedAlgebra, metric: &HomogeneousMetric, nu: f64, cfg: SupSearch) -> EmpiricalConstant {
    let n = alg.dim();
    sup_over_cube("C_d", 2 * n, cfg, Some(nu), |u| {
        let x: Vec<f64> = u[..n].iter().map(|v| v * nu).collect();
        let y: Vec<f64> = u[n..].iter().map(|v| v * nu).collect();
        metric.first_layer_ratio(alg, &x, &y)
    })
}

/// `K_U` for layer `i`: `sup |pi^i(log x)| / d(x)^i` over `d(x) <= radius`.
pub fn verify_projection_estimate(
    alg: &GradedAlgebra,
    metric: &HomogeneousMetric,
    i: usize,
    radius: f64,
    cfg: SupSearch,
) -> EmpiricalConstant {
    let n = alg.dim();
    sup_over_cube(&format!("K_U layer {i}"), n + 1, cfg, Some(radius), |u| {
        let x = metric.ball_point(alg, &u[..n], u[n], radius)?;
        let d = metric.gauge(alg, &x);
        if d < 1e-6 {
            return None;
        }
        Some(norm(&alg.project_tail(&x, i)) / d.powi(i as i32))
    })
}

/// `kappa(nu)`: `sup d(exp xi) / |xi|^(1/step)` over `|xi| <= nu`.
pub fn verify_norm_power_estimate(alg: &GradedAlgebra, metric: &HomogeneousMetric, nu: f64, cfg: SupSearch) -> EmpiricalConstant {
    let iota = alg.step() as f64;
    sup_over_cube("kappa", alg.dim(), cfg, Some(nu), |u| {
        let x = euclidean_ball_point(u, nu);
        let e = norm(&x);
        if e < 1e-9 {
            return None;
        }
        Some(metric.gauge(alg, &x) / e.powf(1.0 / iota))
    })
}

/// `C(nu)`: `sup |(-xi) o eta| / |xi - eta|` over `|xi|, |eta| <= nu`.
pub fn verify_left_inverse_estimate(alg: &GradedAlgebra, nu: f64, cfg: SupSearch) -> EmpiricalConstant {
    let n = alg.dim();
    sup_over_cube("left_inverse", 2 * n, cfg, Some(nu), |u| {
        let a = euclidean_ball_point(&u[..n], nu);
        let b = euclidean_ball_point(&u[n..], nu);
        let d = norm(&linalg::sub(&a, &b));
        if d < 1e-9 {
            return None;
        }
        Some(norm(&left_difference(alg, &a, &b)) / d)
    })
}

/// Which side of the conjugation estimate to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugationForm {
    /// `d(y^-1 x y) / |log x|^(1/step)`
    LogNorm,
    /// `d(y^-1 x y) / d(x)^(1/step)`
    Gauge,
}

/// Sampled conjugation constant over `d(x), d(y) <= nu`.
pub fn verify_conjugation_estimate(
    alg: &GradedAlgebra,
    metric: &HomogeneousMetric,
    nu: f64,
    form: ConjugationForm,
    cfg: SupSearch,
) -> EmpiricalConstant {
    let n = alg.dim();
    let iota = alg.step() as f64;
    let label = match form {
        ConjugationForm::LogNorm => "conjugation/log",
        ConjugationForm::Gauge => "conjugation/gauge",
    };
    sup_over_cube(label, 2 * n + 2, cfg, Some(nu), |u| {
        let x = metric.ball_point(alg, &u[..n], u[2 * n], nu)?;
        let y = metric.ball_point(alg, &u[n..2 * n], u[2 * n + 1], nu)?;
        let den = match form {
            ConjugationForm::LogNorm => norm(&x),
            ConjugationForm::Gauge => metric.gauge(alg, &x),
        };
        if den < 1e-6 {
            return None;
        }
        Some(metric.gauge(alg, &conjugate(alg, &x, &y)) / den.powf(1.0 / iota))
    })
}

/// Sampled `K_nu` of the product estimate with `factors` factors.
///
/// `B_j` range over gauge balls of radius `nu / factors`, `A_j = B_j E_j` with
/// `d(E_j) <= nu`; samples violating `d(B_j .. B_N) <= nu` are rejected.
pub fn verify_product_estimate(
    alg: &GradedAlgebra,
    metric: &HomogeneousMetric,
    nu: f64,
    factors: usize,
    cfg: SupSearch,
) -> EmpiricalConstant {
    let n = alg.dim();
    let iota = alg.step() as f64;
    let block = 2 * n + 2;
    sup_over_cube("K_nu", factors * block, cfg, Some(nu), |u| {
        let mut a = Vec::with_capacity(factors);
        let mut b = Vec::with_capacity(factors);
        let mut rhs = 0.0;
        for j in 0..factors {
            let w = &u[j * block..(j + 1) * block];
            let bj = metric.ball_point(alg, &w[..n], w[2 * n], nu / factors as f64)?;
            let ej = metric.ball_point(alg, &w[n..2 * n], w[2 * n + 1], nu)?;
            let aj = group_product(alg, &bj, &ej);
            rhs += metric.dist(alg, &bj, &aj).powf(1.0 / iota);
            a.push(aj);
            b.push(bj);
        }
        for j in 0..factors {
            if metric.gauge(alg, &group_product_all(alg, &b[j..])) > nu {
                return None;
            }
        }
        if rhs < 1e-9 {
            return None;
        }
        let lhs = metric.dist(alg, &group_product_all(alg, &a), &group_product_all(alg, &b));
        Some(lhs / rhs)
    })
}

/// Quasi-triangle constant `sup d(x, z) / (d(x, y) + d(y, z))` on the box `[-nu, nu]^dim`.
pub fn quasi_triangle_constant(alg: &GradedAlgebra, metric: &HomogeneousMetric, nu: f64, cfg: SupSearch) -> EmpiricalConstant {
    let n = alg.dim();
    sup_over_cube("quasi_triangle", 3 * n, cfg, Some(nu), |u| {
        let p: Vec<Vec<f64>> = (0..3).map(|k| u[k * n..(k + 1) * n].iter().map(|v| v * nu).collect()).collect();
        let s = metric.dist(alg, &p[0], &p[1]) + metric.dist(alg, &p[1], &p[2]);
        if s < 1e-9 {
            return None;
        }
        Some(metric.dist(alg, &p[0], &p[2]) / s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{abelian, complexified_heisenberg, heisenberg};

    #[test]
    fn koranyi_values() {
        let h = heisenberg(1);
        let m = HomogeneousMetric::Koranyi;
        assert_eq!(m.quasi_norm(&h, &[0.0, 0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(m.quasi_norm(&h, &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let x = [0.3, -0.2, 0.7];
        assert_eq!(m.distance(&h, &x, &x).unwrap(), 0.0);
        let f = crate::catalog::free_nilpotent(2, 3).unwrap();
        assert!(m.quasi_norm(&f, &vec![0.0; 5]).is_err());
    }

    #[test]
    fn homogeneity_and_symmetry() {
        let h = heisenberg(1);
        let m = HomogeneousMetric::Koranyi;
        let x = [0.3, -0.2, 0.7];
        let y = [-0.1, 0.5, 0.2];
        let r = 2.5;
        let d1 = m.dist(&h, &h.dilate(&x, &r), &h.dilate(&y, &r));
        assert!((d1 - r * m.dist(&h, &x, &y)).abs() < 1e-12 * d1);
        assert!((m.dist(&h, &x, &y) - m.dist(&h, &y, &x)).abs() < 1e-12);
        let w = HomogeneousMetric::weighted_max(2);
        assert_eq!(w.gauge(&h, &x), w.gauge(&h, &linalg::neg(&x)));
    }

    #[test]
    fn vertical_pair_has_zero_first_layer_ratio() {
        let h = heisenberg(1);
        let m = HomogeneousMetric::Koranyi;
        assert_eq!(m.first_layer_ratio(&h, &[1.0, 2.0, 0.0], &[1.0, 2.0, 3.0]), Some(0.0));
        assert_eq!(m.first_layer_ratio(&h, &[1.0, 2.0, 0.0], &[1.0, 2.0, 0.0]), None);
    }

    #[test]
    fn commutator_word_gives_center() {
        let h = heisenberg(1);
        let m = HomogeneousMetric::Koranyi;
        let ws = WordSystem::standard(&h, &m).unwrap();
        assert_eq!(ws.indices, vec![0, 1, 0, 1, 0, 1]);
        let a = ws.solve_word(&h, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(a, vec![1.0, 1.0, -1.0, -1.0, 0.0, 0.0]);
        let p = ws.generating_word(&h, &a, a.len()).unwrap();
        assert!(norm(&linalg::sub(&p, &[0.0, 0.0, 1.0])) < 1e-15);
        assert_eq!(ws.generating_word(&h, &a, 0).unwrap(), vec![0.0; 3]);
        assert_eq!(ws.generating_word(&h, &[0.5], 1).unwrap(), vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn word_round_trip_h21() {
        let g = complexified_heisenberg();
        let m = HomogeneousMetric::Koranyi;
        let ws = WordSystem::standard(&g, &m).unwrap();
        let x = [0.1, -0.4, 0.3, 0.2, -0.7, 0.25];
        let a = ws.solve_word(&g, &x).unwrap();
        let p = ws.generating_word(&g, &a, ws.len()).unwrap();
        assert!(norm(&linalg::sub(&p, &x)) < 1e-12);
    }

    #[test]
    fn abelian_word_constant() {
        let r = abelian(3);
        let m = HomogeneousMetric::weighted_max(1);
        let ws = WordSystem::standard(&r, &m).unwrap();
        assert_eq!(ws.len(), 3);
        let c = ws.word_constant(&r, &m, 1.0, SupSearch::new(500, 1));
        // max coordinate on the Euclidean unit sphere
        assert!((c.sup_observed - 1.0).abs() < 1e-6);
        let c2 = ws.word_constant(&r, &m, 2.0, SupSearch::new(500, 1));
        assert!((c2.sup_observed - 2.0 * c.sup_observed).abs() < 1e-9);
    }

    #[test]
    fn vertical_projection_ratio() {
        let h = heisenberg(1);
        let m = HomogeneousMetric::Koranyi;
        let x = [0.0, 0.0, 0.37];
        let d = m.gauge(&h, &x);
        assert!((norm(&h.project_tail(&x, 2)) / (d * d) - 0.25).abs() < 1e-12);
    }
}
