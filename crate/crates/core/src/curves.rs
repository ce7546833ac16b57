//! Horizontal curves in exponential coordinates.
//!
//! A curve `Gamma = exp(gamma)` is horizontal iff for every layer `i >= 2`
//! `gamma_i' = sum_(n=2..step) ((-1)^n / n!) pi_i([gamma, gamma']_(n-1))`.
//! The right side of layer `i` only involves lower layers of `gamma'`, so the
//! system is solved layer by layer.

use std::sync::Arc;

use serde::Serialize;

use crate::bch::{group_product, left_difference};
use crate::empirical::{fitted_order, EmpiricalConstant};
use crate::error::SolverError;
use crate::graded_algebra::GradedAlgebra;
use crate::linalg;
use crate::metric::HomogeneousMetric;
use crate::scalar::norm;

type ControlFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Regularity declared by a control; estimates are only sampled away from breaks.
#[derive(Clone, Debug, PartialEq)]
pub enum Smoothness {
    Smooth,
    PiecewiseSmooth { breaks: Vec<f64> },
    Sampled,
}

/// `t -> gamma_1'(t)` in first-layer coordinates on `[a, b]`.
#[derive(Clone)]
pub struct HorizontalControl {
    f: ControlFn,
    pub a: f64,
    pub b: f64,
    pub smoothness: Smoothness,
    pub name: String,
}

impl std::fmt::Debug for HorizontalControl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HorizontalControl")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl HorizontalControl {
    pub fn new(name: impl Into<String>, a: f64, b: f64, smoothness: Smoothness, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        HorizontalControl {
            f: Arc::new(f),
            a,
            b,
            smoothness,
            name: name.into(),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.f)(t)
    }

    /// Constant control `v` on `[0, len]`.
    pub fn line(v: Vec<f64>, len: f64) -> Self {
        Self::new("line", 0.0, len, Smoothness::Smooth, move |_| v.clone())
    }

    /// `r (-sin t, cos t)` in the first two coordinates of an `m`-dimensional first layer,
    /// one full turn on `[0, 2 pi]`.
    pub fn circle(m: usize, r: f64) -> Self {
        Self::new("circle", 0.0, 2.0 * std::f64::consts::PI, Smoothness::Smooth, move |t| {
            let mut v = vec![0.0; m];
            v[0] = -r * t.sin();
            v[1] = r * t.cos();
            v
        })
    }

    /// Counterclockwise unit square on `[0, 4]`: `+X, +Y, -X, -Y`.
    pub fn square(m: usize) -> Self {
        Self::new(
            "square",
            0.0,
            4.0,
            Smoothness::PiecewiseSmooth {
                breaks: vec![1.0, 2.0, 3.0],
            },
            move |t| {
                let mut v = vec![0.0; m];
                match (t.floor() as i64).clamp(0, 3) {
                    0 => v[0] = 1.0,
                    1 => v[1] = 1.0,
                    2 => v[0] = -1.0,
                    _ => v[1] = -1.0,
                }
                v
            },
        )
    }

    /// `(1, 2t)`, whose first layer is `(t, t^2)`, on `[0, len]`.
    pub fn parabola(m: usize, len: f64) -> Self {
        Self::new("parabola", 0.0, len, Smoothness::Smooth, move |t| {
            let mut v = vec![0.0; m];
            v[0] = 1.0;
            v[1] = 2.0 * t;
            v
        })
    }

    /// Piecewise linear interpolation of samples `(t_k, v_k)`.
    pub fn sampled(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, SolverError> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(SolverError::Samples(format!("{} times for {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::Invalid("control times must increase strictly".into()));
        }
        let (a, b) = (times[0], *times.last().unwrap());
        Ok(Self::new("sampled", a, b, Smoothness::Sampled, move |t| {
            let k = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                Ok(k) => return values[k].clone(),
                Err(0) => return values[0].clone(),
                Err(k) if k >= times.len() => return values[times.len() - 1].clone(),
                Err(k) => k - 1,
            };
            let s = (t - times[k]) / (times[k + 1] - times[k]);
            values[k].iter().zip(&values[k + 1]).map(|(x, y)| x + s * (y - x)).collect()
        }))
    }

    /// Same control on a shifted time interval.
    pub fn restricted(&self, a: f64, b: f64) -> Self {
        let mut c = self.clone();
        c.a = a;
        c.b = b;
        c
    }

    /// `s -> r u(s / r)`... in time, i.e. the control of `delta_r` of the lift, on `[r a, r b]`.
    pub fn dilated(&self, r: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{}*{}", self.name, r), self.a * r, self.b * r, self.smoothness.clone(), move |s| f(s / r))
    }

    fn is_break(&self, t: f64, h: f64) -> bool {
        match &self.smoothness {
            Smoothness::PiecewiseSmooth { breaks } => breaks.iter().any(|b| (t - b).abs() <= h.abs()),
            _ => false,
        }
    }
}

/// Velocity `gamma'` of a horizontal curve through `x` with first-layer velocity `u`.
pub fn horizontal_velocity(alg: &GradedAlgebra, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut v = alg.embed_layer(u, 1);
    let step = alg.step();
    let mut fact = 1.0;
    let coeff: Vec<f64> = (0..=step)
        .map(|n| {
            if n > 0 {
                fact *= n as f64;
            }
            if n % 2 == 0 {
                1.0 / fact
            } else {
                -1.0 / fact
            }
        })
        .collect();
    for i in 2..=step {
        let mut s = alg.zero::<f64>();
        let mut br = v.clone();
        for c in coeff.iter().take(step + 1).skip(2) {
            br = alg.bracket(x, &br);
            if linalg::is_zero_vec(&br) {
                break;
            }
            linalg::axpy(&mut s, c, &br);
        }
        for &k in alg.layer_indices(i) {
            v[k] = s[k];
        }
    }
    v
}

/// Curve sampled on a strictly increasing grid, optionally with velocities.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
}

impl SampledCurve {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, SolverError> {
        if times.len() != points.len() || times.is_empty() {
            return Err(SolverError::Samples(format!("{} times for {} points", times.len(), points.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::Invalid("curve times must increase strictly".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SolverError::Invalid("curve coordinates must be finite".into()));
        }
        Ok(SampledCurve {
            times,
            points,
            velocities: None,
        })
    }

    /// Samples `f` on `n + 1` equally spaced times of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let times: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        let points = times.iter().map(|&t| f(t)).collect();
        SampledCurve {
            times,
            points,
            velocities: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &[f64] {
        self.points.last().unwrap()
    }

    /// Cubic Hermite interpolation when velocities are stored, linear otherwise.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, SolverError> {
        let tol = 1e-12 * (self.end() - self.start()).abs().max(1.0);
        if t < self.start() - tol || t > self.end() + tol {
            return Err(SolverError::Domain(vec![t]));
        }
        let k = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(k) => return Ok(self.points[k].clone()),
            Err(0) => return Ok(self.points[0].clone()),
            Err(k) if k >= self.len() => return Ok(self.last().to_vec()),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (p0, p1) = (&self.points[k], &self.points[k + 1]);
        Ok(match &self.velocities {
            Some(v) => {
                let (m0, m1) = (&v[k], &v[k + 1]);
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                (0..p0.len())
                    .map(|i| h00 * p0[i] + h10 * h * m0[i] + h01 * p1[i] + h11 * h * m1[i])
                    .collect()
            }
            None => p0.iter().zip(p1).map(|(a, b)| a + s * (b - a)).collect(),
        })
    }

    /// Velocity by stored values or central differences.
    pub fn velocity(&self, k: usize) -> Vec<f64> {
        if let Some(v) = &self.velocities {
            return v[k].clone();
        }
        let n = self.len();
        let (i, j) = if k == 0 {
            (0, 1)
        } else if k + 1 == n {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        };
        let dt = self.times[j] - self.times[i];
        linalg::sub(&self.points[j], &self.points[i]).iter().map(|v| v / dt).collect()
    }
}

/// Lifted curve with the Richardson estimate of its integration error.
#[derive(Clone, Debug)]
pub struct Lift {
    pub curve: SampledCurve,
    /// `max |y_N - y_(2N)| / 15` over the output grid.
    pub error_estimate: f64,
    /// RK4 substeps per output interval.
    pub substeps: usize,
}

fn rk4_step(alg: &GradedAlgebra, control: &HorizontalControl, t: f64, h: f64, x: &[f64]) -> Vec<f64> {
    let f = |t: f64, y: &[f64]| horizontal_velocity(alg, y, &control.eval(t));
    // stage times nudged inside the step so piecewise controls are sampled on the right piece
    let eps = h.abs() * 1e-12;
    let k1 = f(t + eps, x);
    let y2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
    let k2 = f(t + 0.5 * h, &y2);
    let y3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
    let k3 = f(t + 0.5 * h, &y3);
    let y4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
    let k4 = f(t + h - eps, &y4);
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn integrate(alg: &GradedAlgebra, control: &HorizontalControl, start: &[f64], times: &[f64], sub: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut x = start.to_vec();
    out.push(x.clone());
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for s in 0..sub {
            x = rk4_step(alg, control, w[0] + s as f64 * h, h, &x);
        }
        out.push(x.clone());
    }
    out
}

/// Horizontal lift of `control` starting at `start`, on `steps` equal intervals.
///
/// RK4 substeps are doubled until the Richardson estimate drops below `tol`
/// (or 2^12 substeps are reached).
pub fn horizontal_lift(alg: &GradedAlgebra, control: &HorizontalControl, start: &[f64], steps: usize, tol: f64) -> Result<Lift, SolverError> {
    if steps < 2 {
        return Err(SolverError::Samples(format!("need at least 2 steps, got {steps}")));
    }
    alg.check_len(start)?;
    let m = alg.layer_dim(1);
    let probe = control.eval(control.a);
    if probe.len() != m {
        return Err(SolverError::Invalid(format!("control has {} components, the first layer has {m}", probe.len())));
    }
    let times: Vec<f64> = (0..=steps)
        .map(|k| control.a + (control.b - control.a) * k as f64 / steps as f64)
        .collect();
    let mut sub = 1;
    let mut coarse = integrate(alg, control, start, &times, sub);
    loop {
        let fine = integrate(alg, control, start, &times, 2 * sub);
        let err = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
            / 15.0;
        sub *= 2;
        if err <= tol || sub >= 4096 {
            let velocities = fine
                .iter()
                .zip(&times)
                .map(|(x, &t)| horizontal_velocity(alg, x, &control.eval(t)))
                .collect();
            return Ok(Lift {
                curve: SampledCurve {
                    times,
                    points: fine,
                    velocities: Some(velocities),
                },
                error_estimate: err,
                substeps: sub,
            });
        }
        coarse = fine;
    }
}

/// Left translate of `x` by the lift of `control` on `[t, t + h]` from the identity.
fn local_increment(alg: &GradedAlgebra, control: &HorizontalControl, t: f64, h: f64, sub: usize) -> Vec<f64> {
    let mut x = alg.zero::<f64>();
    let dt = h / sub as f64;
    for s in 0..sub {
        x = rk4_step(alg, control, t + s as f64 * dt, dt, &x);
    }
    x
}

/// Result of a horizontality check.
#[derive(Clone, Debug, Serialize)]
pub struct HorizontalityReport {
    /// `max |gamma_i' - sum ...|` over interior samples and layers `i >= 2`.
    pub max_residual: f64,
    pub worst_time: f64,
    pub passed: bool,
    pub tol: f64,
}

/// Residual of the horizontality system with central differences at interior samples.
pub fn is_horizontal(alg: &GradedAlgebra, curve: &SampledCurve, tol: f64) -> Result<HorizontalityReport, SolverError> {
    if curve.len() < 3 {
        return Err(SolverError::Samples(format!("need 3 samples, got {}", curve.len())));
    }
    let mut worst = (0.0, curve.times[1]);
    for k in 1..curve.len() - 1 {
        let dt = curve.times[k + 1] - curve.times[k - 1];
        let d: Vec<f64> = linalg::sub(&curve.points[k + 1], &curve.points[k - 1]).iter().map(|v| v / dt).collect();
        let u = alg.layer_coords(&d, 1);
        let v = horizontal_velocity(alg, &curve.points[k], &u);
        let r = alg.project_tail(&linalg::sub(&d, &v), 2);
        let e = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if e > worst.0 {
            worst = (e, curve.times[k]);
        }
    }
    Ok(HorizontalityReport {
        max_residual: worst.0,
        worst_time: worst.1,
        passed: worst.0 <= tol,
        tol,
    })
}

/// `delta_(1/h)(-h gamma_1'(t) o (-gamma(t)) o gamma(t + h))` for the lift of `control`.
///
/// `(-gamma(t)) o gamma(t + h)` is the lift of the control on `[t, t + h]` from
/// the identity, computed directly with `sub` RK4 steps to avoid cancellation.
pub fn pansu_quotient(alg: &GradedAlgebra, control: &HorizontalControl, t: f64, h: f64, sub: usize) -> Result<Vec<f64>, SolverError> {
    if h == 0.0 {
        return Err(SolverError::Invalid("h must be nonzero".into()));
    }
    let lo = control.a.min(control.b);
    let hi = control.a.max(control.b);
    if t < lo || t > hi || t + h < lo || t + h > hi {
        return Err(SolverError::Domain(vec![t, t + h]));
    }
    let theta = local_increment(alg, control, t, h, sub.max(1));
    let u: Vec<f64> = control.eval(t).iter().map(|v| -h * v).collect();
    let q = group_product(alg, &alg.embed_layer(&u, 1), &theta);
    Ok(alg.dilate(&q, &(1.0 / h)))
}

/// Same quotient from sampled curve values (Hermite interpolation) and a velocity.
pub fn pansu_quotient_sampled(alg: &GradedAlgebra, curve: &SampledCurve, u: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SolverError> {
    if h == 0.0 {
        return Err(SolverError::Invalid("h must be nonzero".into()));
    }
    let x = curve.eval(t)?;
    let y = curve.eval(t + h)?;
    let v: Vec<f64> = u.iter().map(|c| -h * c).collect();
    let q = group_product(alg, &alg.embed_layer(&v, 1), &left_difference(alg, &x, &y));
    Ok(alg.dilate(&q, &(1.0 / h)))
}

/// Decay of the Pansu quotient over a list of `h`.
#[derive(Clone, Debug, Serialize)]
pub struct PansuConvergence {
    pub t: f64,
    pub hs: Vec<f64>,
    pub norms: Vec<f64>,
    /// Slope of `log |quotient|` against `log h`.
    pub order: f64,
    /// `sup |quotient| / A_t^h(gamma_1' - gamma_1'(t))` over the `h` list.
    pub sup_average_ratio: f64,
}

pub fn pansu_convergence(alg: &GradedAlgebra, control: &HorizontalControl, t: f64, hs: &[f64], sub: usize) -> Result<PansuConvergence, SolverError> {
    let mut norms = Vec::new();
    let mut ratio: f64 = 0.0;
    let u0 = control.eval(t);
    for &h in hs {
        if control.is_break(t, h) {
            return Err(SolverError::Invalid(format!("t = {t} is within {h} of a break of the control")));
        }
        let qv = pansu_quotient(alg, control, t, h, sub)?;
        let nq = norm(&qv);
        norms.push(nq);
        let shifted = |s: f64| linalg::sub(&control.eval(s), &u0);
        let a = sup_average(&shifted, t, h, 256);
        if a > 0.0 {
            ratio = ratio.max(nq / a);
        }
    }
    Ok(PansuConvergence {
        t,
        hs: hs.to_vec(),
        order: fitted_order(hs, &norms),
        norms,
        sup_average_ratio: ratio,
    })
}

/// `sup_(0 <= tau <= lambda)` of the running means of `|f|` over `[t, t + tau]`
/// (or `[t + tau, t]` for negative `lambda`), trapezoid rule on `n` cells.
pub fn sup_average(f: &dyn Fn(f64) -> Vec<f64>, t: f64, lambda: f64, n: usize) -> f64 {
    let n = n.max(1);
    let dt = lambda / n as f64;
    let mut prev = norm(&f(t));
    let mut best = prev;
    let mut acc = 0.0;
    for k in 1..=n {
        let cur = norm(&f(t + k as f64 * dt));
        acc += 0.5 * (prev + cur) * dt.abs();
        best = best.max(acc / (k as f64 * dt.abs()));
        prev = cur;
    }
    best
}

/// Checked version of [`sup_average`] for a control.
pub fn control_sup_average(control: &HorizontalControl, t: f64, lambda: f64, n: usize) -> Result<f64, SolverError> {
    let lo = control.a.min(control.b);
    let hi = control.a.max(control.b);
    if lambda == 0.0 || t < lo || t > hi || t + lambda < lo || t + lambda > hi {
        return Err(SolverError::Domain(vec![t, t + lambda]));
    }
    Ok(sup_average(&|s| control.eval(s), t, lambda, n))
}

/// `sum_k (-gamma(t_k)) o gamma(t_(k+1))` as a vector sum.
pub fn group_riemann_sum(alg: &GradedAlgebra, values: &[Vec<f64>]) -> Result<Vec<f64>, SolverError> {
    if values.len() < 2 {
        return Err(SolverError::Samples("a partition needs two points".into()));
    }
    let mut s = alg.zero::<f64>();
    for w in values.windows(2) {
        s = linalg::add(&s, &left_difference(alg, &w[0], &w[1]));
    }
    Ok(s)
}

/// Riemann sum of `gamma` on the uniform partition of `[0, s]` into `n` cells.
pub fn riemann_sum_uniform(alg: &GradedAlgebra, gamma: &dyn Fn(f64) -> Vec<f64>, s: f64, n: usize) -> Result<Vec<f64>, SolverError> {
    if n == 0 {
        return Err(SolverError::Invalid("empty partition".into()));
    }
    let vals: Vec<Vec<f64>> = (0..=n).map(|k| gamma(s * k as f64 / n as f64)).collect();
    group_riemann_sum(alg, &vals)
}

/// `gamma(s) - gamma(0) + sum_n ((-1)^(n-1) / n!) int_0^s [gamma, gamma']_(n-1)`,
/// composite Simpson rule on `n` (even) cells.
pub fn riemann_limit(
    alg: &GradedAlgebra,
    gamma: &dyn Fn(f64) -> Vec<f64>,
    dgamma: &dyn Fn(f64) -> Vec<f64>,
    s: f64,
    n: usize,
) -> Vec<f64> {
    let n = n.max(2) + n % 2;
    let integrand = |t: f64| {
        let g = gamma(t);
        let dg = dgamma(t);
        let mut out = alg.zero::<f64>();
        let mut br = dg;
        let mut fact = 1.0;
        for k in 2..=alg.step() {
            fact *= k as f64;
            br = alg.bracket(&g, &br);
            let c = if k % 2 == 0 { -1.0 / fact } else { 1.0 / fact };
            linalg::axpy(&mut out, &c, &br);
        }
        out
    };
    let h = s / n as f64;
    let mut acc = alg.zero::<f64>();
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        linalg::axpy(&mut acc, &(w * h / 3.0), &integrand(k as f64 * h));
    }
    linalg::add(&linalg::sub(&gamma(s), &gamma(0.0)), &acc)
}

/// Riemann sums at dyadic meshes against the limit.
#[derive(Clone, Debug, Serialize)]
pub struct RiemannConvergence {
    pub meshes: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub limit: Vec<f64>,
}

pub fn riemann_convergence(
    alg: &GradedAlgebra,
    gamma: &dyn Fn(f64) -> Vec<f64>,
    dgamma: &dyn Fn(f64) -> Vec<f64>,
    s: f64,
    cells: &[usize],
) -> Result<RiemannConvergence, SolverError> {
    let limit = riemann_limit(alg, gamma, dgamma, s, 4096);
    let mut meshes = Vec::new();
    let mut errors = Vec::new();
    for &n in cells {
        let sum = riemann_sum_uniform(alg, gamma, s, n)?;
        meshes.push(s / n as f64);
        errors.push(norm(&linalg::sub(&sum, &limit)));
    }
    Ok(RiemannConvergence {
        order: fitted_order(&meshes, &errors),
        meshes,
        errors,
        limit,
    })
}

/// Variation by dyadic partition sums and by integrating `rho(exp gamma_1')`.
#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    /// Partition sum at each dyadic level.
    pub partition_sums: Vec<f64>,
    /// Largest partition sum.
    pub by_partitions: f64,
    pub by_quadrature: f64,
    pub relative_gap: f64,
    pub horizontal: bool,
}

/// Partition sums of `d(Gamma(t_k), Gamma(t_(k+1)))` over dyadic sub-grids of a
/// curve sampled on `2^L + 1` equally spaced times, `L <= 16`.
pub fn variation_by_partitions(alg: &GradedAlgebra, metric: &HomogeneousMetric, curve: &SampledCurve) -> Result<Vec<f64>, SolverError> {
    let n = curve.len() - 1;
    if n == 0 || !n.is_power_of_two() || n > 1 << 16 {
        return Err(SolverError::Samples(format!("need 2^L + 1 samples with L <= 16, got {}", curve.len())));
    }
    metric.check(alg)?;
    let levels = n.trailing_zeros() as usize;
    Ok((0..=levels)
        .map(|l| {
            let stride = n >> l;
            (0..(1usize << l))
                .map(|k| metric.dist(alg, &curve.points[k * stride], &curve.points[(k + 1) * stride]))
                .sum()
        })
        .collect())
}

/// Both variation methods for the lift of `control` from `start`.
pub fn variation(alg: &GradedAlgebra, metric: &HomogeneousMetric, control: &HorizontalControl, start: &[f64], level: u32) -> Result<VariationReport, SolverError> {
    let lift = horizontal_lift(alg, control, start, 1 << level, 1e-12)?;
    let sums = variation_by_partitions(alg, metric, &lift.curve)?;
    let a = sums.iter().cloned().fold(0.0, f64::max);
    let n = 1usize << level.max(10);
    let h = (control.b - control.a) / n as f64;
    let speed = |t: f64| metric.gauge(alg, &alg.embed_layer(&control.eval(t), 1));
    let mut b = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        b += w * speed(control.a + k as f64 * h);
    }
    b *= h / 3.0;
    let horizontal = is_horizontal(alg, &lift.curve, 1e-6)?.passed;
    Ok(VariationReport {
        partition_sums: sums,
        by_partitions: a,
        by_quadrature: b,
        relative_gap: (a - b).abs() / b.abs().max(1e-300),
        horizontal,
    })
}

/// Discrete Lipschitz constants of `gamma_1` and of `Gamma` under a metric.
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub lip_first_layer: f64,
    pub lip_group: f64,
    /// `Lip(Gamma) / Lip(gamma_1)`, meaningful when both are finite.
    pub ratio: f64,
    pub horizontality_residual: f64,
    /// Horizontal within `1e-6`, so both Lipschitz constants are comparable.
    pub comparable: bool,
    /// Largest `d(Gamma(t_j), Gamma(t_k)) / int_(t_j)^(t_k) |gamma_1'|` over sampled pairs.
    pub absolute_continuity_constant: f64,
}

pub fn verify_ac_lip_characterization(alg: &GradedAlgebra, metric: &HomogeneousMetric, curve: &SampledCurve) -> Result<LipschitzReport, SolverError> {
    metric.check(alg)?;
    let h = is_horizontal(alg, curve, 1e-6)?;
    let mut l1: f64 = 0.0;
    let mut lg: f64 = 0.0;
    for k in 0..curve.len() - 1 {
        let dt = curve.times[k + 1] - curve.times[k];
        let a = &curve.points[k];
        let b = &curve.points[k + 1];
        l1 = l1.max(norm(&alg.project_layer(&linalg::sub(b, a), 1)) / dt);
        lg = lg.max(metric.dist(alg, a, b) / dt);
    }
    // cumulative length of the first layer by the trapezoid rule on velocities
    let mut cum = vec![0.0];
    for k in 0..curve.len() - 1 {
        let dt = curve.times[k + 1] - curve.times[k];
        let s0 = norm(&alg.project_layer(&curve.velocity(k), 1));
        let s1 = norm(&alg.project_layer(&curve.velocity(k + 1), 1));
        cum.push(cum[k] + 0.5 * (s0 + s1) * dt);
    }
    let stride = (curve.len() / 64).max(1);
    let mut ac: f64 = 0.0;
    for j in (0..curve.len()).step_by(stride) {
        for k in (j + stride..curve.len()).step_by(stride) {
            let len = cum[k] - cum[j];
            let d = metric.dist(alg, &curve.points[j], &curve.points[k]);
            if len > 1e-12 {
                ac = ac.max(d / len);
            } else if d > 1e-9 {
                ac = f64::INFINITY;
            }
        }
    }
    Ok(LipschitzReport {
        lip_first_layer: l1,
        lip_group: lg,
        ratio: if l1 > 0.0 { lg / l1 } else { f64::INFINITY },
        horizontality_residual: h.max_residual,
        comparable: h.passed,
        absolute_continuity_constant: ac,
    })
}

/// Sampled ratios `|int_0^lambda |gamma_i'|| / (A_0^lambda(gamma_1' - X) |lambda|^i)` for the
/// lift of `control` from the identity at `t = 0`, over a list of `lambda`.
pub fn layer_lift_ratios(
    alg: &GradedAlgebra,
    control: &HorizontalControl,
    x: &[f64],
    lambdas: &[f64],
) -> Result<Vec<EmpiricalConstant>, SolverError> {
    let mut out = Vec::new();
    for i in 2..=alg.step() {
        let mut sup: f64 = 0.0;
        for &lam in lambdas {
            let c = control.restricted(0.0, lam);
            let lift = horizontal_lift(alg, &c, &alg.zero::<f64>(), 256, 1e-13)?;
            let vels = lift.curve.velocities.as_ref().unwrap();
            let dt = lam / 256.0;
            let mut integral = 0.0;
            for k in 0..256 {
                let a = norm(&alg.project_layer(&vels[k], i));
                let b = norm(&alg.project_layer(&vels[k + 1], i));
                integral += 0.5 * (a + b) * dt.abs();
            }
            let avg = sup_average(&|s| linalg::sub(&control.eval(s), x), 0.0, lam, 256);
            let den = avg * lam.abs().powi(i as i32);
            if den > 1e-300 {
                sup = sup.max(integral / den);
            }
        }
        out.push(EmpiricalConstant::new(format!("Upsilon_{i}"), sup, lambdas.len(), None));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{free_nilpotent, heisenberg};

    #[test]
    fn constant_control_is_a_one_parameter_subgroup() {
        let h = heisenberg(1);
        let c = HorizontalControl::line(vec![1.0, 0.5], 1.0);
        let lift = horizontal_lift(&h, &c, &h.zero(), 8, 1e-12).unwrap();
        for (t, p) in lift.curve.times.iter().zip(&lift.curve.points) {
            assert!((p[0] - t).abs() < 1e-14 && (p[1] - 0.5 * t).abs() < 1e-14 && p[2].abs() < 1e-14);
        }
    }

    #[test]
    fn square_loop_area() {
        let h = heisenberg(1);
        let lift = horizontal_lift(&h, &HorizontalControl::square(2), &h.zero(), 64, 1e-12).unwrap();
        let end = lift.curve.last();
        assert!(end[0].abs() < 1e-12 && end[1].abs() < 1e-12);
        assert!((end[2] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn parabola_vertical_component() {
        let h = heisenberg(1);
        let lift = horizontal_lift(&h, &HorizontalControl::parabola(2, 1.0), &h.zero(), 1024, 1e-12).unwrap();
        for (t, p) in lift.curve.times.iter().zip(&lift.curve.points) {
            assert!((p[2] - t * t * t / 6.0).abs() < 1e-8);
        }
        assert!(is_horizontal(&h, &lift.curve, 1e-6).unwrap().passed);
    }

    #[test]
    fn vertical_curve_is_not_horizontal() {
        let h = heisenberg(1);
        let c = SampledCurve::from_fn(0.0, 1.0, 10, |t| vec![0.0, 0.0, t]);
        let r = is_horizontal(&h, &c, 1e-6).unwrap();
        assert!(!r.passed);
        assert!((r.max_residual - 1.0).abs() < 1e-12);
        let line = SampledCurve::from_fn(0.0, 1.0, 10, |t| vec![t, 2.0 * t, 0.0]);
        assert_eq!(is_horizontal(&h, &line, 0.0).unwrap().max_residual, 0.0);
    }

    #[test]
    fn step_three_lift_is_horizontal() {
        let f = free_nilpotent(2, 3).unwrap();
        let lift = horizontal_lift(&f, &HorizontalControl::circle(2, 1.0), &f.zero(), 400, 1e-12).unwrap();
        assert!(is_horizontal(&f, &lift.curve, 1e-4).unwrap().passed);
    }

    #[test]
    fn sup_average_examples() {
        assert!((sup_average(&|_| vec![3.0, 4.0], 0.0, 0.5, 10) - 5.0).abs() < 1e-12);
        // increasing integrand: the full window mean
        let v = sup_average(&|t| vec![t], 0.0, 2.0, 1000);
        assert!((v - 1.0).abs() < 1e-9);
        let v = sup_average(&|t| vec![t], 0.0, -2.0, 1000);
        assert!((v - 1.0).abs() < 1e-9);
        let v = sup_average(&|t| vec![1.0 - t], 0.0, 1.0, 1000);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riemann_examples() {
        let h = heisenberg(1);
        let line = |t: f64| vec![t, t, 0.0];
        let dline = |_t: f64| vec![1.0, 1.0, 0.0];
        let lim = riemann_limit(&h, &line, &dline, 0.7, 100);
        assert!(norm(&linalg::sub(&lim, &[0.7, 0.7, 0.0])) < 1e-15);
        let one = riemann_sum_uniform(&h, &line, 0.7, 1).unwrap();
        assert_eq!(one, left_difference(&h, &line(0.0), &line(0.7)));
    }
}
