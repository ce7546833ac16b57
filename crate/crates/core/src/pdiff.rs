//! Numerical P-differentiability for maps between graded groups.
//!
//! Points are exponential coordinates. Maps are evaluated in floating point;
//! differentials that feed the exact classification routines come either from
//! an analytic first layer or from a rationalized numerical estimate.

use std::sync::Arc;

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bch::{conjugate, group_inverse, group_product, left_difference};
use crate::curves::horizontal_velocity;
use crate::empirical::{fitted_order, random_cube, random_gaussian, rng, EmpiricalConstant, SupSearch};
use crate::error::SolverError;
use crate::graded_algebra::GradedAlgebra;
use crate::linalg::{self, Matrix, Span};
use crate::metric::{HomogeneousMetric, WordSystem};
use crate::scalar::{norm, q, rational_to_f64, Rational, Scalar};
use crate::subgroups::{
    classify_epimorphism, classify_monomorphism, EpiVerdict, GradedMorphism, HomogeneousSubalgebra, MonoVerdict, SearchOptions,
};

type Eval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type Region = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type Jacobian = Arc<dyn Fn(&[f64]) -> Matrix<f64> + Send + Sync>;
type ExactJacobian = Arc<dyn Fn(&[f64]) -> Option<Matrix<Rational>> + Send + Sync>;

/// A map `f: Omega -> M` between graded groups.
///
/// `Omega` is the open box `(lower, upper)` intersected with an optional region
/// predicate. The optional first layers are `W_1 x V_1` matrices.
#[derive(Clone)]
pub struct PDMap {
    pub name: String,
    pub domain: GradedAlgebra,
    pub codomain: GradedAlgebra,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    f: Eval,
    region: Option<Region>,
    first_layer: Option<Jacobian>,
    exact_first_layer: Option<ExactJacobian>,
}

impl std::fmt::Debug for PDMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PDMap")
            .field("name", &self.name)
            .field("domain", &self.domain.name())
            .field("codomain", &self.codomain.name())
            .finish()
    }
}

impl PDMap {
    pub fn new(
        name: impl Into<String>,
        domain: GradedAlgebra,
        codomain: GradedAlgebra,
        radius: f64,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let n = domain.dim();
        PDMap {
            name: name.into(),
            domain,
            codomain,
            lower: vec![-radius; n],
            upper: vec![radius; n],
            f: Arc::new(f),
            region: None,
            first_layer: None,
            exact_first_layer: None,
        }
    }

    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_region(mut self, region: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.region = Some(Arc::new(region));
        self
    }

    pub fn with_first_layer(mut self, d: impl Fn(&[f64]) -> Matrix<f64> + Send + Sync + 'static) -> Self {
        self.first_layer = Some(Arc::new(d));
        self
    }

    /// Exact first layer at points where it is rational.
    pub fn with_exact_first_layer(mut self, d: impl Fn(&[f64]) -> Option<Matrix<Rational>> + Send + Sync + 'static) -> Self {
        self.exact_first_layer = Some(Arc::new(d));
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.domain.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| v > a && v < b)
            && self.region.as_ref().is_none_or(|r| r(x))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        if !self.contains(x) {
            return Err(SolverError::Domain(x.to_vec()));
        }
        Ok((self.f)(x))
    }

    fn try_eval(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.contains(x).then(|| (self.f)(x))
    }

    pub fn analytic_first_layer(&self, x: &[f64]) -> Option<Matrix<f64>> {
        if let Some(d) = &self.first_layer {
            return Some(d(x));
        }
        self.exact_first_layer
            .as_ref()
            .and_then(|d| d(x))
            .map(|m| linalg::to_f64_matrix(&m))
    }

    /// `g o self`, defined where `self` is defined and lands in the domain of `g`.
    pub fn then(&self, g: &PDMap) -> PDMap {
        let f1 = self.clone();
        let g1 = g.clone();
        let f2 = self.clone();
        let g2 = g.clone();
        let mut out = PDMap::new(
            format!("{}.{}", g.name, self.name),
            self.domain.clone(),
            g.codomain.clone(),
            1.0,
            move |x| (g1.f)(&(f1.f)(x)),
        )
        .with_box(self.lower.clone(), self.upper.clone())
        .with_region(move |x| f2.region.as_ref().is_none_or(|r| r(x)) && g2.contains(&(f2.f)(x)));
        if let (Some(a), Some(b)) = (&self.first_layer, &g.first_layer) {
            let (a, b, f) = (a.clone(), b.clone(), self.f.clone());
            out = out.with_first_layer(move |x| linalg::mat_mul(&b(&f(x)), &a(x)));
        }
        out
    }

    /// Identity of `alg` on the box of the given radius.
    pub fn identity(alg: &GradedAlgebra, radius: f64) -> PDMap {
        let m = alg.layer_dim(1);
        PDMap::new("identity", alg.clone(), alg.clone(), radius, |x| x.to_vec())
            .with_exact_first_layer(move |_| Some(linalg::identity(m)))
    }

    /// `delta_r`.
    pub fn dilation(alg: &GradedAlgebra, r: f64, radius: f64) -> PDMap {
        let a = alg.clone();
        let m = alg.layer_dim(1);
        PDMap::new(format!("dilation {r}"), alg.clone(), alg.clone(), radius, move |x| a.dilate(x, &r))
            .with_first_layer(move |_| linalg::scale_matrix(&r, &linalg::identity(m)))
    }

    /// `x -> g x`.
    pub fn left_translation(alg: &GradedAlgebra, g: Vec<f64>, radius: f64) -> PDMap {
        let a = alg.clone();
        let m = alg.layer_dim(1);
        PDMap::new("left translation", alg.clone(), alg.clone(), radius, move |x| group_product(&a, &g, x))
            .with_exact_first_layer(move |_| Some(linalg::identity(m)))
    }

    /// An h-homomorphism as a map of groups.
    pub fn h_homomorphism(l: &GradedMorphism, radius: f64) -> PDMap {
        let mf = linalg::to_f64_matrix(l.matrix());
        let first = first_layer_block(l.domain(), l.codomain(), l.matrix());
        PDMap::new("h-homomorphism", l.domain().clone(), l.codomain().clone(), radius, move |x| linalg::mat_vec(&mf, x))
            .with_exact_first_layer(move |_| Some(first.clone()))
    }

    /// `(x_1, ..., x_5) -> (sqrt(x_2^2 + x_3^2), x_4)` on `H^2` with `[X_1, X_2] = [X_3, X_4] = X_5`,
    /// defined on `{x_4 > 0, x_2^2 + x_3^2 > 0}`.
    ///
    /// `heisenberg(2)` orders its basis `X_1, Y_1, X_2, Y_2, Z`, which is the same bracket pattern.
    pub fn planar_radius_h2() -> PDMap {
        let h = crate::catalog::heisenberg(2);
        let r2 = crate::catalog::abelian(2);
        PDMap::new("planar_radius_h2", h, r2, 4.0, |x| vec![(x[1] * x[1] + x[2] * x[2]).sqrt(), x[3]])
            .with_region(|x| x[3] > 0.0 && x[1] * x[1] + x[2] * x[2] > 0.0)
            .with_first_layer(|x| {
                let r = (x[1] * x[1] + x[2] * x[2]).sqrt();
                vec![vec![0.0, x[1] / r, x[2] / r, 0.0], vec![0.0, 0.0, 0.0, 1.0]]
            })
            .with_exact_first_layer(|x| {
                let r = (x[1] * x[1] + x[2] * x[2]).sqrt();
                let entries = [x[1] / r, x[2] / r];
                let exact: Option<Vec<Rational>> = entries.iter().map(|v| small_rational(*v, 64, 0.0)).collect();
                let e = exact?;
                let z = q(0, 1);
                let one = q(1, 1);
                Some(vec![
                    vec![z.clone(), e[0].clone(), e[1].clone(), z.clone()],
                    vec![z.clone(), z.clone(), z, one],
                ])
            })
    }

    /// `(x, y, z) -> (x, y, z + x^2)` on `H^1`; not a contact map.
    pub fn vertical_shear_h1() -> PDMap {
        let h = crate::catalog::heisenberg(1);
        PDMap::new("vertical_shear_h1", h.clone(), h, 4.0, |x| vec![x[0], x[1], x[2] + x[0] * x[0]])
    }

    /// `(x, y, z) -> (y, x, z)` on `H^1`; not a contact map.
    pub fn coordinate_swap_h1() -> PDMap {
        let h = crate::catalog::heisenberg(1);
        PDMap::new("coordinate_swap_h1", h.clone(), h, 4.0, |x| vec![x[1], x[0], x[2]])
    }

    /// `(x, y, z) -> (x, y + e x^2, z + e x^3 / 6)` on `H^1`, a polynomial contact diffeomorphism.
    pub fn contact_shear_h1(e: f64) -> PDMap {
        let h = crate::catalog::heisenberg(1);
        PDMap::new("contact_shear_h1", h.clone(), h, 4.0, move |x| {
            vec![x[0], x[1] + e * x[0] * x[0], x[2] + e * x[0] * x[0] * x[0] / 6.0]
        })
        .with_first_layer(move |x| vec![vec![1.0, 0.0], vec![2.0 * e * x[0], 1.0]])
    }

    /// `x -> |x_1|` on `H^1`, Lipschitz but not P-differentiable where `x_1 = 0`.
    pub fn corner_h1() -> PDMap {
        let h = crate::catalog::heisenberg(1);
        PDMap::new("corner_h1", h, crate::catalog::abelian(1), 4.0, |x| vec![x[0].abs()])
    }

    /// `t -> exp(t_1 X_1 + t_2 X_2) exp(e t_1 t_2 Y_1)` from `R^2` to `H^2`.
    pub fn perturbed_legendrian(e: f64) -> PDMap {
        let h = crate::catalog::heisenberg(2);
        let hh = h.clone();
        PDMap::new("perturbed_legendrian", crate::catalog::abelian(2), h, 4.0, move |t| {
            let a = vec![t[0], 0.0, t[1], 0.0, 0.0];
            let b = vec![0.0, e * t[0] * t[1], 0.0, 0.0, 0.0];
            group_product(&hh, &a, &b)
        })
        .with_first_layer(move |t| {
            vec![vec![1.0, 0.0], vec![e * t[1], e * t[0]], vec![0.0, 1.0], vec![0.0, 0.0]]
        })
        .with_exact_first_layer(move |t| {
            if t.iter().all(|v| *v == 0.0) {
                let (z, o) = (q(0, 1), q(1, 1));
                Some(vec![
                    vec![o.clone(), z.clone()],
                    vec![z.clone(), z.clone()],
                    vec![z.clone(), o],
                    vec![z.clone(), z],
                ])
            } else {
                None
            }
        })
    }
}

/// Rational `k / d` with `d <= max_den` within `tol` of `v`.
pub fn small_rational(v: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    (1..=max_den).find_map(|d| {
        let k = (v * d as f64).round();
        ((v - k / d as f64).abs() <= tol).then(|| q(k as i64, d))
    })
}

fn first_layer_block(g: &GradedAlgebra, m: &GradedAlgebra, l: &Matrix<Rational>) -> Matrix<Rational> {
    m.layer_indices(1)
        .iter()
        .map(|&r| g.layer_indices(1).iter().map(|&c| l[r][c].clone()).collect())
        .collect()
}

/// Extends a first-layer map `V_1 -> W_1` (as a `W_1 x V_1` matrix) to the
/// layer-preserving Lie homomorphism it generates. The domain must be stratified.
pub fn extend_first_layer<S: Scalar>(g: &GradedAlgebra, m: &GradedAlgebra, l1: &Matrix<S>) -> Result<Matrix<S>, SolverError> {
    if !g.is_stratified() {
        return Err(SolverError::Differential(format!("{} is not stratified", g.name())));
    }
    let v1 = g.layer_indices(1);
    let w1 = m.layer_indices(1);
    if l1.len() != w1.len() || l1.iter().any(|r| r.len() != v1.len()) {
        return Err(SolverError::Differential(format!(
            "first layer must be {} x {}",
            w1.len(),
            v1.len()
        )));
    }
    let mut cols: Vec<Vec<S>> = vec![m.zero::<S>(); g.dim()];
    for (c, &k) in v1.iter().enumerate() {
        for (r, &w) in w1.iter().enumerate() {
            cols[k][w] = l1[r][c].clone();
        }
    }
    for i in 2..=g.step() {
        // brackets [X_a, Y_b] with X_a in V_1, Y_b in V_(i-1) spanning V_i
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        let mut vecs: Vec<Vec<Rational>> = Vec::new();
        for &a in v1 {
            for &b in g.layer_indices(i - 1) {
                let br = g.bracket(&g.unit::<Rational>(a), &g.unit::<Rational>(b));
                if linalg::is_zero_vec(&br) {
                    continue;
                }
                let mut trial = vecs.clone();
                trial.push(br.clone());
                if linalg::rank(&trial) > vecs.len() {
                    vecs = trial;
                    chosen.push((a, b));
                }
            }
        }
        for &k in g.layer_indices(i) {
            let coeffs = linalg::coordinates_in(&vecs, &g.unit::<Rational>(k))
                .ok_or_else(|| SolverError::Differential(format!("basis vector {k} is not generated by brackets")))?;
            let mut col = m.zero::<S>();
            for ((a, b), c) in chosen.iter().zip(&coeffs) {
                if c == &q(0, 1) {
                    continue;
                }
                let br = m.bracket(&cols[*a], &cols[*b]);
                linalg::axpy(&mut col, &S::from_rational(c), &br);
            }
            cols[k] = col;
        }
    }
    Ok(linalg::from_columns(&cols, m.dim()))
}

/// Exact Pansu differential from the analytic first layer, when available.
pub fn analytic_differential(map: &PDMap, x: &[f64]) -> Option<Result<GradedMorphism, SolverError>> {
    let d = map.exact_first_layer.as_ref()?(x)?;
    Some(
        extend_first_layer(&map.domain, &map.codomain, &d)
            .and_then(|mat| Ok(GradedMorphism::new(map.domain.clone(), map.codomain.clone(), mat)?)),
    )
}

/// Central difference of `t -> f(x exp(t v))` at `t = 0`, `v` in first-layer coordinates.
pub fn horizontal_derivative(map: &PDMap, x: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>, SolverError> {
    let g = &map.domain;
    let e = g.embed_layer(v, 1);
    let plus = group_product(g, x, &linalg::scale(&h, &e));
    let minus = group_product(g, x, &linalg::scale(&-h, &e));
    let a = map.eval(&plus)?;
    let b = map.eval(&minus)?;
    Ok(linalg::sub(&a, &b).iter().map(|d| d / (2.0 * h)).collect())
}

/// Horizontal derivatives `X_i F` along the first-layer basis, as columns.
fn horizontal_jacobian(map: &PDMap, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>, SolverError> {
    let m = map.domain.layer_dim(1);
    (0..m).map(|i| horizontal_derivative(map, x, &linalg::unit(m, i), h)).collect()
}

/// `dF(x)` on `V_1`: the first layer `dF_1` completed by the triangular recursion
/// `dF_j(h) = sum_n ((-1)^n / n!) pi_j([F(x), dF(h)]_(n-1))`.
/// Returns a `dim W x dim V_1` matrix.
pub fn lift_differential(codomain: &GradedAlgebra, fx: &[f64], df1: &Matrix<f64>) -> Matrix<f64> {
    let cols: Vec<Vec<f64>> = (0..df1.first().map_or(0, |r| r.len()))
        .map(|c| {
            let u: Vec<f64> = df1.iter().map(|r| r[c]).collect();
            horizontal_velocity(codomain, fx, &u)
        })
        .collect();
    linalg::from_columns(&cols, codomain.dim())
}

/// Tuning of [`pansu_differential`].
#[derive(Clone, Debug)]
pub struct PansuOptions {
    /// Finite difference steps, decreasing.
    pub fd_steps: Vec<f64>,
    /// Dilation scales for the defining limit, decreasing.
    pub scales: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PansuOptions {
    fn default() -> Self {
        PansuOptions {
            fd_steps: vec![1e-2, 1e-3, 1e-4, 1e-5],
            scales: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            samples: 200,
            seed: 0,
        }
    }
}

/// Numerical Pansu differential with its convergence report.
#[derive(Clone, Debug, Serialize)]
pub struct PansuDifferential {
    /// Layer-preserving matrix, rows indexed by the codomain.
    pub matrix: Matrix<f64>,
    pub first_layer: Matrix<f64>,
    pub fd_step: f64,
    /// Max change of the first-layer estimate between consecutive steps.
    pub successive_changes: Vec<f64>,
    /// Max deviation of the recursion `dF_j` from the finite difference `X_i F_j`.
    pub contact_residual: f64,
    /// `sup rho(f(x)^-1 f(x delta_s u), L(delta_s u)) / s` over sampled unit `u`.
    pub scales: Vec<f64>,
    pub defects: Vec<f64>,
    pub defect_order: f64,
    /// Gap to the analytic first layer when one is attached.
    pub analytic_gap: Option<f64>,
    pub converged: bool,
}

/// Sup over sampled unit directions of the P-differentiability quotient at each scale.
pub fn differentiability_defects(map: &PDMap, x: &[f64], l: &Matrix<f64>, scales: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>, SolverError> {
    let g = &map.domain;
    let m = &map.codomain;
    let dg = HomogeneousMetric::default_for(g);
    let dm = HomogeneousMetric::default_for(m);
    let fx = map.eval(x)?;
    let mut r = rng(seed);
    let dirs: Vec<Vec<f64>> = (0..samples).filter_map(|_| dg.sphere_point(g, &random_gaussian(&mut r, g.dim()), 1.0)).collect();
    scales
        .iter()
        .map(|&s| {
            let mut sup: f64 = 0.0;
            for u in &dirs {
                let us = g.dilate(u, &s);
                let y = map.eval(&group_product(g, x, &us))?;
                // compare at unit scale to keep the vertical parts well conditioned
                let a = m.dilate(&left_difference(m, &fx, &y), &(1.0 / s));
                let b = linalg::mat_vec(l, u);
                sup = sup.max(dm.dist(m, &a, &b));
            }
            Ok(sup)
        })
        .collect()
}

/// Estimates `Df(x)` from horizontal finite differences, extends it to all layers
/// and checks the defining limit on sampled unit directions.
pub fn pansu_differential(map: &PDMap, x: &[f64], opts: &PansuOptions) -> Result<PansuDifferential, SolverError> {
    if opts.fd_steps.is_empty() || opts.scales.is_empty() {
        return Err(SolverError::Invalid("empty step or scale list".into()));
    }
    let m1 = map.codomain.layer_indices(1).to_vec();
    let mut estimates: Vec<Matrix<f64>> = Vec::new();
    let mut fulls: Vec<Vec<Vec<f64>>> = Vec::new();
    for &h in &opts.fd_steps {
        let cols = horizontal_jacobian(map, x, h)?;
        let first: Matrix<f64> = m1.iter().map(|&w| cols.iter().map(|c| c[w]).collect()).collect();
        estimates.push(first);
        fulls.push(cols);
    }
    let change = |a: &Matrix<f64>, b: &Matrix<f64>| {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    };
    let changes: Vec<f64> = estimates.windows(2).map(|w| change(&w[0], &w[1])).collect();
    // the step after which the estimate moved least
    let best = if changes.is_empty() {
        0
    } else {
        changes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(k, _)| k + 1)
            .unwrap()
    };
    let first = estimates[best].clone();
    let matrix = extend_first_layer(&map.domain, &map.codomain, &first)?;
    let fx = map.eval(x)?;
    let lifted = lift_differential(&map.codomain, &fx, &first);
    let mut contact: f64 = 0.0;
    for (c, col) in fulls[best].iter().enumerate() {
        for i in 0..map.codomain.dim() {
            if map.codomain.layer_of(i) >= 2 {
                contact = contact.max((col[i] - lifted[i][c]).abs());
            }
        }
    }
    let defects = differentiability_defects(map, x, &matrix, &opts.scales, opts.samples, opts.seed)?;
    let order = fitted_order(&opts.scales, &defects);
    let last = *defects.last().unwrap();
    let converged = last.is_finite() && (last <= 1e-6 || (last < defects[0] && order > 0.25));
    let analytic_gap = map.analytic_first_layer(x).map(|a| change(&a, &first));
    Ok(PansuDifferential {
        matrix,
        first_layer: first,
        fd_step: opts.fd_steps[best],
        successive_changes: changes,
        contact_residual: contact,
        scales: opts.scales.clone(),
        defects,
        defect_order: order,
        analytic_gap,
        converged,
    })
}

/// Rational rounding of a float first layer, entries `k / d` with `d <= 64`.
pub fn rationalize(m: &Matrix<f64>, tol: f64) -> Option<Matrix<Rational>> {
    m.iter().map(|r| r.iter().map(|v| small_rational(*v, 64, tol)).collect()).collect()
}

/// Exact differential: analytic if attached, else the rationalized numerical one.
pub fn exact_differential(map: &PDMap, x: &[f64]) -> Result<(GradedMorphism, DifferentialSource), SolverError> {
    if let Some(r) = analytic_differential(map, x) {
        return Ok((r?, DifferentialSource::Analytic));
    }
    let p = pansu_differential(map, x, &PansuOptions::default())?;
    let first = rationalize(&p.first_layer, 1e-7)
        .ok_or_else(|| SolverError::Differential("numerical differential has no small rational form".into()))?;
    let mat = extend_first_layer(&map.domain, &map.codomain, &first)?;
    Ok((GradedMorphism::new(map.domain.clone(), map.codomain.clone(), mat)?, DifferentialSource::Numerical))
}

/// Where the exact differential came from; numerical sources make verdicts numerical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferentialSource {
    Analytic,
    Numerical,
}

/// Residual of the contact system at sampled points.
#[derive(Clone, Debug, Serialize)]
pub struct ContactReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
    pub tol: f64,
}

/// `max |X_i F_j - sum_n ((-1)^n / n!) pi_j([F, X_i F]_(n-1))|` over points, `i` and `j >= 2`.
pub fn contact_check(map: &PDMap, points: &[Vec<f64>], h: f64, tol: f64) -> Result<ContactReport, SolverError> {
    let m = &map.codomain;
    let mut worst = (0.0, Vec::new());
    for p in points {
        let fx = map.eval(p)?;
        for col in horizontal_jacobian(map, p, h)? {
            let u = m.layer_coords(&col, 1);
            let v = horizontal_velocity(m, &fx, &u);
            let r = m.project_tail(&linalg::sub(&col, &v), 2);
            let e = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if e > worst.0 || worst.1.is_empty() {
                worst = (e.max(worst.0), p.clone());
            }
        }
    }
    Ok(ContactReport {
        max_residual: worst.0,
        worst_point: worst.1,
        passed: worst.0 <= tol,
        tol,
    })
}

/// One distance bin of the mean value experiment.
#[derive(Clone, Debug, Serialize)]
pub struct MviBin {
    pub lo: f64,
    pub hi: f64,
    pub sup: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MviReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `c(G, d) N diam(Omega_1)`, the margin checked inside the domain.
    pub margin: f64,
    pub bins: Vec<MviBin>,
    /// Each bin at most 1.1 times the previous one.
    pub decreasing: bool,
    pub last_over_first: f64,
}

/// Configuration of [`mean_value_ratio`].
#[derive(Clone, Debug)]
pub struct MviOptions {
    /// `Omega_1` is the ball of this radius about the center.
    pub radius: f64,
    /// Dyadic bins `(r 2^-(k+1), r 2^-k]` with `r = radius / 2`.
    pub bins: usize,
    pub samples_per_bin: usize,
    pub seed: u64,
    /// Sample count for the word constant and the margin check.
    pub check_samples: usize,
}

impl Default for MviOptions {
    fn default() -> Self {
        MviOptions {
            radius: 0.01,
            bins: 4,
            samples_per_bin: 4000,
            seed: 0,
            check_samples: 2000,
        }
    }
}

/// Binned sup of `rho(f(x)^-1 f(y), Df(x)(x^-1 y)) / d(x, y)` over pairs of the
/// ball `Omega_1`, after checking that the enlarged ball stays in the domain.
pub fn mean_value_ratio(map: &PDMap, center: &[f64], opts: &MviOptions) -> Result<MviReport, SolverError> {
    let g = &map.domain;
    let m = &map.codomain;
    let dg = HomogeneousMetric::default_for(g);
    let dm = HomogeneousMetric::default_for(m);
    let words = WordSystem::standard(g, &dg)?;
    let c = words
        .word_constant(g, &dg, 1.0, SupSearch::new(opts.check_samples, opts.seed))
        .sup_observed;
    let margin = c * words.len() as f64 * 2.0 * opts.radius;
    let mut r = rng(opts.seed);
    for _ in 0..opts.check_samples {
        let u = random_gaussian(&mut r, g.dim());
        let s = r.random::<f64>();
        if let Some(p) = dg.ball_point(g, &u, 2.0 * s - 1.0, opts.radius + margin) {
            let y = group_product(g, center, &p);
            if !map.contains(&y) {
                return Err(SolverError::Domain(y));
            }
        }
    }
    let half = opts.radius / 2.0;
    let mut bins = Vec::new();
    for k in 0..opts.bins {
        let hi = half * 0.5f64.powi(k as i32);
        let lo = hi / 2.0;
        let mut sup: f64 = 0.0;
        let mut count = 0;
        while count < opts.samples_per_bin {
            let Some(p) = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, half) else {
                continue;
            };
            let d = lo + (hi - lo) * r.random::<f64>();
            let Some(w) = dg.sphere_point(g, &random_gaussian(&mut r, g.dim()), d) else {
                continue;
            };
            let x = group_product(g, center, &p);
            let y = group_product(g, &x, &w);
            let l = match map.analytic_first_layer(&x) {
                Some(a) => extend_first_layer(g, m, &a)?,
                None => {
                    let cols = horizontal_jacobian(map, &x, 1e-5)?;
                    let first: Matrix<f64> = m.layer_indices(1).iter().map(|&i| cols.iter().map(|c| c[i]).collect()).collect();
                    extend_first_layer(g, m, &first)?
                }
            };
            let fx = map.eval(&x)?;
            let fy = map.eval(&y)?;
            let lhs = dm.dist(m, &left_difference(m, &fx, &fy), &linalg::mat_vec(&l, &w));
            sup = sup.max(lhs / dg.dist(g, &x, &y));
            count += 1;
        }
        bins.push(MviBin { lo, hi, sup, samples: count });
    }
    let decreasing = bins.windows(2).all(|w| w[1].sup <= 1.1 * w[0].sup);
    let last_over_first = bins.last().unwrap().sup / bins[0].sup.max(1e-300);
    Ok(MviReport {
        center: center.to_vec(),
        radius: opts.radius,
        margin,
        bins,
        decreasing,
        last_over_first,
    })
}

/// Damped Newton settings.
#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Finite difference step relative to `max(1, |x_j|)`.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 100,
            fd_step: 1e-6,
        }
    }
}

/// Damped Newton for a square system with central difference Jacobian and
/// Armijo backtracking. `g` returns `None` outside its domain.
/// Returns the root, `|g|` there, and the iteration count.
pub fn newton(g: &dyn Fn(&[f64]) -> Option<Vec<f64>>, x0: &[f64], opts: &NewtonOptions) -> Result<(Vec<f64>, f64, usize), SolverError> {
    let mut x = x0.to_vec();
    let mut gx = g(&x).ok_or_else(|| SolverError::Domain(x.clone()))?;
    let mut res = norm(&gx);
    let n = x.len();
    if gx.len() != n {
        return Err(SolverError::Invalid(format!("{} equations for {} unknowns", gx.len(), n)));
    }
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok((x, res, it));
        }
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            let (ga, gb) = match (g(&a), g(&b)) {
                (Some(ga), Some(gb)) => (ga, gb),
                _ => return Err(SolverError::Domain(x)),
            };
            cols.push(linalg::sub(&ga, &gb).iter().map(|d| d / (2.0 * h)).collect::<Vec<f64>>());
        }
        let jac = linalg::from_columns(&cols, n);
        let dx = linalg::solve_f64(&jac, &linalg::neg(&gx)).ok_or(SolverError::Singular)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if let Some(gt) = g(&trial) {
                let rt = norm(&gt);
                if rt <= (1.0 - 1e-4 * t) * res || rt <= opts.tol {
                    x = trial;
                    gx = gt;
                    res = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-8 {
                return Err(SolverError::NoConvergence {
                    iterations: it,
                    residual: res,
                    at: x,
                });
            }
        }
    }
    if res <= opts.tol {
        Ok((x, res, opts.max_iter))
    } else {
        Err(SolverError::NoConvergence {
            iterations: opts.max_iter,
            residual: res,
            at: x,
        })
    }
}

/// Solution of `f(x) = y` near a base point.
#[derive(Clone, Debug, Serialize)]
pub struct LocalInverse {
    pub x: Vec<f64>,
    /// `rho(f(x), y)`.
    pub residual: f64,
    pub iterations: usize,
    /// Sampled `min d(f(a), f(b)) / d(a, b)` on the ball through `x` about the base point.
    pub bilipschitz_lower: f64,
    /// Sampled `max d(f(a), f(b)) / d(a, b)` on the same ball.
    pub bilipschitz_upper: f64,
}

/// Newton solve of `f(x) = y` from `x_bar`; requires an invertible first layer at `x_bar`.
pub fn local_inverse(map: &PDMap, x_bar: &[f64], y: &[f64], opts: &NewtonOptions) -> Result<LocalInverse, SolverError> {
    let g = &map.domain;
    let m = &map.codomain;
    if g.dim() != m.dim() || g.layer_dim(1) != m.layer_dim(1) {
        return Err(SolverError::Differential("domain and codomain have different shapes".into()));
    }
    let first = match map.analytic_first_layer(x_bar) {
        Some(a) => a,
        None => {
            let cols = horizontal_jacobian(map, x_bar, 1e-5)?;
            m.layer_indices(1).iter().map(|&i| cols.iter().map(|c| c[i]).collect()).collect()
        }
    };
    let k = first.len();
    if linalg::solve_f64(&first, &vec![1.0; k]).is_none() {
        return Err(SolverError::Singular);
    }
    let (x, _, iterations) = newton(&|z| map.try_eval(z).map(|fz| linalg::sub(&fz, y)), x_bar, opts)?;
    let dm = HomogeneousMetric::default_for(m);
    let dg = HomogeneousMetric::default_for(g);
    let residual = dm.dist(m, &map.eval(&x)?, y);
    let radius = dg.dist(g, x_bar, &x).max(1e-3);
    let mut r = rng(1);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..500 {
        let a = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, radius);
        let b = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, radius);
        let (Some(a), Some(b)) = (a, b) else { continue };
        let (a, b) = (group_product(g, x_bar, &a), group_product(g, x_bar, &b));
        let (Some(fa), Some(fb)) = (map.try_eval(&a), map.try_eval(&b)) else {
            continue;
        };
        let d = dg.dist(g, &a, &b);
        if d > 1e-12 {
            let ratio = dm.dist(m, &fa, &fb) / d;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(LocalInverse {
        x,
        residual,
        iterations,
        bilipschitz_lower: lo,
        bilipschitz_upper: hi,
    })
}

/// Tensor grid over the kernel coordinates: `counts[k]` nodes in `[-radius, radius]`
/// along the `k`-th basis vector of `N`.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub counts: Vec<usize>,
    /// Random restarts per node for the uniqueness check.
    pub restarts: usize,
    /// Restarts are drawn in `[-restart_radius, restart_radius]^dim H`.
    pub restart_radius: f64,
    pub seed: u64,
}

/// Implicit graph map `phi: N -> H` on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct ImplicitSolution {
    pub base: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub complement: Vec<Vec<f64>>,
    pub kernel_description: String,
    pub complement_description: String,
    pub source: DifferentialSource,
    /// Kernel coordinates of each node.
    pub nodes: Vec<Vec<f64>>,
    /// `n` as a group element.
    pub node_points: Vec<Vec<f64>>,
    /// `phi(n)` as a group element.
    pub values: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Max distance between restarted solutions and the continuation solution.
    pub restart_agreement: f64,
    pub restart_failures: usize,
    /// `max d(phi(n), phi(n')) / ||phi(n')^-1 n^-1 n' phi(n')||` over node pairs.
    pub kappa: f64,
    /// `max d(phi(n), phi(n')) / |n' - n|^(1/step)` over node pairs.
    pub holder_constant: f64,
    pub pairs: usize,
}

/// Solves `f(x_bar n phi(n)) = f(x_bar)` over `H` on a grid in `N = ker Df(x_bar)`.
pub fn implicit_function(map: &PDMap, x_bar: &[f64], grid: &GridSpec, newton_opts: &NewtonOptions) -> Result<ImplicitSolution, SolverError> {
    let g = &map.domain;
    let (l, source) = exact_differential(map, x_bar)?;
    let cls = classify_epimorphism(&l, &SearchOptions::default())?;
    if cls.verdict != EpiVerdict::HEpimorphism {
        return Err(SolverError::Differential(format!("differential is {}, not an h-epimorphism", cls.verdict)));
    }
    let h_sub = cls.witness.expect("h-epimorphism carries a witness");
    let n_sub = l.kernel_subalgebra()?;
    let nb: Vec<Vec<f64>> = n_sub.basis().iter().map(|v| g.to_float(v)).collect();
    let hb: Vec<Vec<f64>> = h_sub.basis().iter().map(|v| g.to_float(v)).collect();
    if grid.counts.len() != nb.len() {
        return Err(SolverError::Invalid(format!("grid has {} axes, the kernel has dimension {}", grid.counts.len(), nb.len())));
    }
    let fx = map.eval(x_bar)?;
    let combine = |basis: &[Vec<f64>], c: &[f64]| {
        let mut v = g.zero::<f64>();
        for (b, t) in basis.iter().zip(c) {
            linalg::axpy(&mut v, t, b);
        }
        v
    };
    // grid nodes and their offsets from the center node
    let mut idx: Vec<Vec<usize>> = vec![vec![]];
    for &cnt in &grid.counts {
        idx = idx
            .into_iter()
            .flat_map(|p| {
                (0..cnt.max(1)).map(move |k| {
                    let mut p = p.clone();
                    p.push(k);
                    p
                })
            })
            .collect();
    }
    let coord = |k: usize, cnt: usize| {
        if cnt <= 1 {
            0.0
        } else {
            -grid.radius + 2.0 * grid.radius * k as f64 / (cnt - 1) as f64
        }
    };
    let center: Vec<usize> = grid.counts.iter().map(|c| c.max(&1) / 2).collect();
    let l1 = |p: &[usize]| p.iter().zip(&center).map(|(a, b)| a.abs_diff(*b)).sum::<usize>();
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by_key(|&k| l1(&idx[k]));
    let pos: std::collections::HashMap<Vec<usize>, usize> = idx.iter().enumerate().map(|(k, p)| (p.clone(), k)).collect();

    let mut values: Vec<Option<Vec<f64>>> = vec![None; idx.len()];
    let mut hcoords: Vec<Vec<f64>> = vec![vec![0.0; hb.len()]; idx.len()];
    let mut residuals = vec![0.0; idx.len()];
    let nodes: Vec<Vec<f64>> = idx.iter().map(|p| p.iter().zip(&grid.counts).map(|(k, c)| coord(*k, *c)).collect()).collect();
    let node_points: Vec<Vec<f64>> = nodes.iter().map(|c| combine(&nb, c)).collect();
    let equations = |n: &[f64]| {
        let base = group_product(g, x_bar, n);
        let hb = hb.clone();
        let fx = fx.clone();
        move |h: &[f64]| {
            let mut v = g.zero::<f64>();
            for (b, t) in hb.iter().zip(h) {
                linalg::axpy(&mut v, t, b);
            }
            map.try_eval(&group_product(g, &base, &v)).map(|y| linalg::sub(&y, &fx))
        }
    };
    for &k in &order {
        // seed from a solved neighbour one step closer to the center
        let mut seed = vec![0.0; hb.len()];
        if let Some(a) = (0..center.len()).find(|&a| idx[k][a] != center[a]) {
            let mut p = idx[k].clone();
            p[a] = if p[a] > center[a] { p[a] - 1 } else { p[a] + 1 };
            seed = hcoords[pos[&p]].clone();
        }
        let eq = equations(&node_points[k]);
        let (h, res, _) = newton(&eq, &seed, newton_opts).map_err(|e| match e {
            SolverError::NoConvergence { iterations, residual, .. } => SolverError::NoConvergence {
                iterations,
                residual,
                at: nodes[k].clone(),
            },
            other => other,
        })?;
        values[k] = Some(combine(&hb, &h));
        hcoords[k] = h;
        residuals[k] = res;
    }
    let values: Vec<Vec<f64>> = values.into_iter().map(|v| v.unwrap()).collect();

    // uniqueness: restarts from random seeds in the complement box
    let mut r = rng(grid.seed);
    let mut agreement: f64 = 0.0;
    let mut failures = 0;
    for k in 0..idx.len() {
        let eq = equations(&node_points[k]);
        for _ in 0..grid.restarts {
            let s: Vec<f64> = random_cube(&mut r, hb.len()).iter().map(|v| v * grid.restart_radius).collect();
            match newton(&eq, &s, newton_opts) {
                Ok((h, _, _)) => {
                    agreement = agreement.max(norm(&linalg::sub(&h, &hcoords[k])));
                }
                Err(_) => failures += 1,
            }
        }
    }

    let metric = HomogeneousMetric::default_for(g);
    let step = g.step() as f64;
    let count = idx.len();
    let (kappa, holder) = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut kp: f64 = 0.0;
            let mut ho: f64 = 0.0;
            let ni = group_inverse(&node_points[i]);
            for j in i + 1..count {
                let lhs = metric.dist(g, &values[i], &values[j]);
                let t = group_product(g, &ni, &node_points[j]);
                let rhs = metric.gauge(g, &conjugate(g, &t, &values[j]));
                if rhs > 0.0 {
                    kp = kp.max(lhs / rhs);
                } else if lhs > 0.0 {
                    kp = f64::INFINITY;
                }
                let e = norm(&linalg::sub(&node_points[j], &node_points[i]));
                if e > 0.0 {
                    ho = ho.max(lhs / e.powf(1.0 / step));
                }
            }
            (kp, ho)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    Ok(ImplicitSolution {
        base: x_bar.to_vec(),
        kernel: nb,
        complement: hb,
        kernel_description: n_sub.describe(g),
        complement_description: h_sub.describe(g),
        source,
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        nodes,
        node_points,
        values,
        restart_agreement: agreement,
        restart_failures: failures,
        kappa,
        holder_constant: holder,
        pairs: count * (count - 1) / 2,
    })
}

/// Image of a map near a point written as a graph `{h phi(h)}` over `H = image Df(x_bar)`.
#[derive(Clone, Debug, Serialize)]
pub struct RankParametrization {
    pub base: Vec<f64>,
    pub image_description: String,
    pub complement_description: String,
    /// Parameters `g` in the domain; `h = Df(x_bar)(g)`.
    pub parameters: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    /// Max `|p(f(psi(g))) - g|`.
    pub inverse_residual: f64,
    /// Max distance of `phi(h)` from the complement.
    pub complement_residual: f64,
    /// `max |F(h) - F(h')| / d(h, h')` over sampled pairs.
    pub lipschitz_ratio: f64,
}

/// Local graph representation of `f(V)` when `Df(x_bar)` is an h-monomorphism.
pub fn rank_parametrization(map: &PDMap, x_bar: &[f64], radius: f64, samples: usize, seed: u64) -> Result<RankParametrization, SolverError> {
    let g = &map.domain;
    let m = &map.codomain;
    let (t, _) = exact_differential(map, x_bar)?;
    let cls = classify_monomorphism(&t, &SearchOptions::default())?;
    if cls.verdict != MonoVerdict::HMonomorphism {
        return Err(SolverError::Differential(format!("differential is {:?}, not an h-monomorphism", cls.verdict)));
    }
    let n_sub = cls.complement.expect("h-monomorphism carries a complement");
    let p = cls.projection.expect("h-monomorphism carries a projection");
    let pf = linalg::to_f64_matrix(p.matrix());
    let tf = linalg::to_f64_matrix(t.matrix());
    let n_span: Span = n_sub.span();
    let nbasis: Vec<Vec<f64>> = n_span.basis().iter().map(|v| m.to_float(v)).collect();
    let g0 = linalg::mat_vec(&pf, &map.eval(x_bar)?);
    let dg = HomogeneousMetric::default_for(g);
    let dm = HomogeneousMetric::default_for(m);
    let mut r = rng(seed);
    let mut params = Vec::new();
    let mut hs = Vec::new();
    let mut phis = Vec::new();
    let mut inv_res: f64 = 0.0;
    let mut comp_res: f64 = 0.0;
    let mut x_prev = x_bar.to_vec();
    let opts = NewtonOptions::default();
    while params.len() < samples {
        let Some(u) = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, radius) else {
            continue;
        };
        let target = group_product(g, &g0, &u);
        let eq = |x: &[f64]| map.try_eval(x).map(|y| linalg::sub(&linalg::mat_vec(&pf, &y), &target));
        let (x, res, _) = newton(&eq, &x_prev, &opts).or_else(|_| newton(&eq, x_bar, &opts))?;
        x_prev = x.clone();
        let y = map.eval(&x)?;
        let h = linalg::mat_vec(&tf, &target);
        let phi = left_difference(m, &h, &y);
        // distance of phi from N by least squares against its float basis
        let mut resid = phi.clone();
        for b in &gram_schmidt(&nbasis) {
            let c = linalg::dot(&resid, b);
            linalg::axpy(&mut resid, &-c, b);
        }
        comp_res = comp_res.max(norm(&resid));
        inv_res = inv_res.max(res);
        params.push(target);
        hs.push(h);
        phis.push(phi);
    }
    let mut lip: f64 = 0.0;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let d = dm.dist(m, &hs[i], &hs[j]);
            if d > 1e-12 {
                lip = lip.max(norm(&linalg::sub(&phis[i], &phis[j])) / d);
            }
        }
    }
    Ok(RankParametrization {
        base: x_bar.to_vec(),
        image_description: t.image_subalgebra()?.describe(m),
        complement_description: n_sub.describe(m),
        parameters: params,
        h: hs,
        phi: phis,
        inverse_residual: inv_res,
        complement_residual: comp_res,
        lipschitz_ratio: lip,
    })
}

fn gram_schmidt(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for b in &out {
            let c = linalg::dot(&w, b);
            linalg::axpy(&mut w, &-c, b);
        }
        let n = norm(&w);
        if n > 1e-12 {
            out.push(w.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Hausdorff distances of blow-ups against a candidate cone.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub scales: Vec<f64>,
    pub distances: Vec<f64>,
    pub radius: f64,
    /// Points of the set inside `D_R` at each scale.
    pub set_points: Vec<usize>,
    pub cone_points: usize,
    /// Each distance at most 1.1 times the previous one.
    pub decreasing: bool,
}

/// Symmetric Euclidean Hausdorff distance between the parts of two clouds in the
/// gauge ball `D_R`, each measured against the whole other cloud so that the
/// truncation at the boundary of `D_R` adds no spurious distance.
pub fn truncated_hausdorff(a: &[Vec<f64>], a_in: &[bool], b: &[Vec<f64>], b_in: &[bool]) -> Result<f64, SolverError> {
    if a.is_empty() || b.is_empty() {
        return Err(SolverError::Samples("empty point cloud".into()));
    }
    let dim = a[0].len();
    // a fixed rotation keeps clouds lying in coordinate subspaces from
    // producing degenerate splits; distances are unchanged
    let mut r = rng(0x5eed);
    let rot = gram_schmidt(&(0..dim).map(|_| random_gaussian(&mut r, dim)).collect::<Vec<_>>());
    let rotate = |pts: &[Vec<f64>]| pts.iter().map(|p| linalg::mat_vec(&rot, p)).collect::<Vec<_>>();
    let (a, b) = (rotate(a), rotate(b));
    let tree = |pts: &[Vec<f64>]| {
        let mut t: KdTree<f64, usize, Vec<f64>> = KdTree::with_capacity(dim, pts.len());
        for (k, p) in pts.iter().enumerate() {
            t.add(p.clone(), k).expect("finite point");
        }
        t
    };
    let (ta, tb) = (tree(&a), tree(&b));
    let directed = |from: &[Vec<f64>], mask: &[bool], to: &KdTree<f64, usize, Vec<f64>>| {
        from.par_iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| to.nearest(p, 1, &squared_euclidean).map(|v| v[0].0.sqrt()).unwrap_or(f64::INFINITY))
            .reduce(|| 0.0, f64::max)
    };
    Ok(directed(&a, a_in, &tb).max(directed(&b, b_in, &ta)))
}

/// Blow-ups `delta_(1/lambda)(x_bar^-1 S)` of a parametrized set against a cone.
///
/// `set_point(n)` maps a point `n` of the cone near `e` to the point of `S`
/// it parametrizes (for level sets `x_bar n phi(n)`). Cone points are drawn in
/// `D_(1.2 R)` until `samples` of them lie in `D_R`; the set cloud at scale `lambda` is the blow-up of the points
/// parametrized by `delta_lambda` of the same cone sample.
pub fn tangent_cone_samples(
    alg: &GradedAlgebra,
    base: &[f64],
    cone: &HomogeneousSubalgebra,
    set_point: &(dyn Fn(&[f64]) -> Option<Vec<f64>> + Sync),
    scales: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<BlowupReport, SolverError> {
    let metric = HomogeneousMetric::default_for(alg);
    let basis: Vec<Vec<f64>> = cone.basis().iter().map(|v| alg.to_float(v)).collect();
    let outer = 1.2 * radius;
    let bound = (0..alg.step()).map(|i| outer.powi(i as i32 + 1)).fold(0.0, f64::max) * 2.0;
    let mut r = rng(seed);
    let mut cloud = Vec::new();
    let mut inner = 0usize;
    let mut attempts = 0usize;
    while inner < samples {
        attempts += 1;
        if attempts > 1000 * samples {
            return Err(SolverError::Samples("cone sampling rejected too many points".into()));
        }
        let c: Vec<f64> = random_cube(&mut r, basis.len()).iter().map(|v| v * bound).collect();
        let mut p = alg.zero::<f64>();
        for (b, t) in basis.iter().zip(&c) {
            linalg::axpy(&mut p, t, b);
        }
        let n = metric.gauge(alg, &p);
        if n <= outer {
            inner += usize::from(n <= radius);
            cloud.push(p);
        }
    }
    let inside = |pts: &[Vec<f64>]| pts.iter().map(|p| metric.gauge(alg, p) <= radius).collect::<Vec<bool>>();
    let cone_in = inside(&cloud);
    let inv = group_inverse(base);
    let mut distances = Vec::new();
    let mut counts = Vec::new();
    for &lam in scales {
        let pts: Vec<Vec<f64>> = cloud
            .par_iter()
            .filter_map(|m| {
                let s = set_point(&alg.dilate(m, &lam))?;
                Some(alg.dilate(&group_product(alg, &inv, &s), &(1.0 / lam)))
            })
            .collect();
        let set_in = inside(&pts);
        let n_in = set_in.iter().filter(|b| **b).count();
        if n_in < samples / 2 {
            return Err(SolverError::Samples(format!("only {n_in} set points inside the ball at scale {lam}")));
        }
        distances.push(truncated_hausdorff(&pts, &set_in, &cloud, &cone_in)?);
        counts.push(n_in);
    }
    let decreasing = distances.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-12);
    Ok(BlowupReport {
        scales: scales.to_vec(),
        distances,
        radius,
        set_points: counts,
        cone_points: cone_in.iter().filter(|b| **b).count(),
        decreasing,
    })
}

/// Point `x_bar n phi(n)` of the level set through `x_bar`, solving for `phi(n)` over `H`.
pub fn level_set_point(map: &PDMap, x_bar: &[f64], complement: &[Vec<f64>], n: &[f64]) -> Option<Vec<f64>> {
    let g = &map.domain;
    let fx = map.try_eval(x_bar)?;
    let base = group_product(g, x_bar, n);
    let lift = |h: &[f64]| {
        let mut v = g.zero::<f64>();
        for (b, t) in complement.iter().zip(h) {
            linalg::axpy(&mut v, t, b);
        }
        v
    };
    let eq = |h: &[f64]| map.try_eval(&group_product(g, &base, &lift(h))).map(|y| linalg::sub(&y, &fx));
    let (h, _, _) = newton(&eq, &vec![0.0; complement.len()], &NewtonOptions::default()).ok()?;
    Some(group_product(g, &base, &lift(&h)))
}

/// Rank of the bracket space of a homogeneous subalgebra: 0 for commutative cones.
pub fn bracket_rank(alg: &GradedAlgebra, s: &HomogeneousSubalgebra) -> usize {
    let b = s.basis();
    let brackets: Vec<Vec<Rational>> = b
        .iter()
        .enumerate()
        .flat_map(|(i, x)| b[i + 1..].iter().map(move |y| alg.bracket(x, y)))
        .collect();
    linalg::rank(&brackets)
}

/// `Q(N) = Q(G) - Q(M)` for a level set.
#[derive(Clone, Debug, Serialize)]
pub struct TangentDimReport {
    pub ambient: usize,
    pub target: usize,
    pub kernel: usize,
    pub holds: bool,
}

pub fn tangent_dim_check(g: &GradedAlgebra, m: &GradedAlgebra, kernel: &HomogeneousSubalgebra) -> TangentDimReport {
    let (a, t, k) = (g.homogeneous_dimension(), m.homogeneous_dimension(), kernel.homogeneous_dimension());
    TangentDimReport {
        ambient: a,
        target: t,
        kernel: k,
        holds: a == k + t,
    }
}

/// Sampled `rho(f(x), f(y)) / d(x, y)` over pairs of a box, for local Lipschitz checks.
pub fn lipschitz_ratio(map: &PDMap, center: &[f64], radius: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let g = &map.domain;
    let m = &map.codomain;
    let dg = HomogeneousMetric::default_for(g);
    let dm = HomogeneousMetric::default_for(m);
    let mut r = rng(seed);
    let mut sup: f64 = 0.0;
    let mut used = 0;
    for _ in 0..samples {
        let a = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, radius);
        let b = dg.ball_point(g, &random_gaussian(&mut r, g.dim()), 2.0 * r.random::<f64>() - 1.0, radius);
        let (Some(a), Some(b)) = (a, b) else { continue };
        let (a, b) = (group_product(g, center, &a), group_product(g, center, &b));
        let (Some(fa), Some(fb)) = (map.try_eval(&a), map.try_eval(&b)) else {
            continue;
        };
        let d = dg.dist(g, &a, &b);
        if d > 1e-12 {
            sup = sup.max(dm.dist(m, &fa, &fb) / d);
            used += 1;
        }
    }
    EmpiricalConstant::new(format!("Lip({})", map.name), sup, used, Some(radius))
}

/// Float matrix of an exact morphism, for comparisons.
pub fn morphism_f64(l: &GradedMorphism) -> Matrix<f64> {
    l.matrix().iter().map(|r| r.iter().map(rational_to_f64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{abelian, heisenberg};
    use crate::scalar::qi;

    #[test]
    fn extension_of_identity_is_identity() {
        let h = heisenberg(2);
        let id: Matrix<Rational> = linalg::identity(4);
        assert_eq!(extend_first_layer(&h, &h, &id).unwrap(), linalg::identity::<Rational>(5));
        let two: Matrix<f64> = linalg::scale_matrix(&2.0, &linalg::identity(4));
        let m = extend_first_layer(&h, &h, &two).unwrap();
        assert_eq!(m[4][4], 4.0);
    }

    #[test]
    fn small_rational_rounding() {
        assert_eq!(small_rational(0.5, 64, 1e-12), Some(q(1, 2)));
        assert_eq!(small_rational(1.0 - 1e-13, 64, 1e-9), Some(qi(1)));
        assert_eq!(small_rational(std::f64::consts::PI, 64, 1e-9), None);
    }

    #[test]
    fn newton_on_a_circle() {
        let g = |x: &[f64]| Some(vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]]);
        let (x, res, _) = newton(&g, &[1.0, 0.5], &NewtonOptions::default()).unwrap();
        assert!(res < 1e-12);
        assert!((x[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn planar_radius_differential_at_xi() {
        let f = PDMap::planar_radius_h2();
        let xi = [0.0, 1.0, 0.0, 1.0, 0.0];
        let (l, src) = exact_differential(&f, &xi).unwrap();
        assert_eq!(src, DifferentialSource::Analytic);
        let k = l.kernel_subalgebra().unwrap();
        assert_eq!(k.describe(&f.domain), "span{X1, X2, Z}");
        assert_eq!(bracket_rank(&f.domain, &k), 0);
        let t = tangent_dim_check(&f.domain, &abelian(2), &k);
        assert!(t.holds && t.ambient == 6 && t.kernel == 4);
    }
}
