//! Group law in exponential coordinates.
//!
//! `X o Y = sum_n c_n(X, Y)` where `c_1 = X + Y` and
//!
//! `(n+1) c_{n+1} = 1/2 [X - Y, c_n]
//!     + sum_{p >= 1, 2p <= n} K_{2p} sum_{k_1 + .. + k_{2p} = n} [c_{k_1}, [.., [c_{k_{2p}}, X + Y]..]]`
//!
//! with `K_{2p} = B_{2p} / (2p)!`. The sum stops at the step of the algebra.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::empirical::{random_ball, rng, EmpiricalConstant};
use crate::error::AlgebraError;
use crate::free::{bch_series, FreeSeries};
use crate::graded_algebra::GradedAlgebra;
use crate::linalg::{self, Matrix};
use crate::scalar::{norm, q, qi, Rational, Scalar};

/// Bernoulli number `B_n` with `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> Rational {
    let mut b: Vec<Rational> = vec![Rational::one()];
    for m in 1..=n {
        let mut s = Rational::zero();
        for (k, bk) in b.iter().enumerate() {
            s += Rational::from_integer(binomial(m + 1, k)) * bk.clone();
        }
        b.push(-s / qi(m as i64 + 1));
    }
    b[n].clone()
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn factorial(n: usize) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * qi(k as i64))
}

/// `K_{2p} = B_{2p} / (2p)!`.
pub fn k_coefficient(p: usize) -> Rational {
    bernoulli(2 * p) / factorial(2 * p)
}

/// Compositions of `n` into `parts` positive integers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(parts - 1) {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn k_table(max_p: usize) -> Vec<Rational> {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let m = CACHE.get_or_init(|| Mutex::new(vec![Rational::zero()]));
    let mut g = m.lock().expect("coefficient cache");
    while g.len() <= max_p {
        let p = g.len();
        g.push(k_coefficient(p));
    }
    g[..=max_p].to_vec()
}

/// `c_1, .., c_n` evaluated at `(x, y)` by the recursion.
pub fn bch_terms<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S], n: usize) -> Vec<Vec<S>> {
    let s = linalg::add(x, y);
    let d = linalg::sub(x, y);
    let ks: Vec<S> = k_table(n / 2).iter().map(S::from_rational).collect();
    let half = S::from_rational(&q(1, 2));
    let mut c: Vec<Vec<S>> = vec![s.clone()];
    for m in 1..n {
        // computes c_{m+1}
        let mut acc = linalg::scale(&half, &alg.bracket(&d, &c[m - 1]));
        let mut p = 1;
        while 2 * p <= m {
            for comp in compositions(m, 2 * p) {
                let mut v = s.clone();
                for &k in comp.iter().rev() {
                    if linalg::is_zero_vec(&v) {
                        break;
                    }
                    v = alg.bracket(&c[k - 1], &v);
                }
                if !linalg::is_zero_vec(&v) {
                    linalg::axpy(&mut acc, &ks[p], &v);
                }
            }
            p += 1;
        }
        let inv = S::one() / S::from_i64(m as i64 + 1);
        c.push(linalg::scale(&inv, &acc));
    }
    c
}

/// `c_n(x, y)` for `1 <= n <= step`.
pub fn bch_term<S: Scalar>(alg: &GradedAlgebra, n: usize, x: &[S], y: &[S]) -> Result<Vec<S>, AlgebraError> {
    if n == 0 || n > alg.step() {
        return Err(AlgebraError::LayerRange { layer: n, step: alg.step() });
    }
    alg.check_len(x)?;
    alg.check_len(y)?;
    Ok(bch_terms(alg, x, y, n).pop().expect("at least one term"))
}

/// `x o y` in exponential coordinates.
pub fn group_product<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S]) -> Vec<S> {
    debug_assert_eq!(x.len(), alg.dim());
    debug_assert_eq!(y.len(), alg.dim());
    if alg.step() == 2 {
        // c_1 + c_2 without the general recursion
        let mut out = linalg::add(x, y);
        let b = alg.bracket(x, y);
        linalg::axpy(&mut out, &S::from_rational(&q(1, 2)), &b);
        return out;
    }
    bch_terms(alg, x, y, alg.step())
        .into_iter()
        .fold(alg.zero::<S>(), |acc, c| linalg::add(&acc, &c))
}

/// Checked version of [`group_product`].
pub fn try_group_product<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S]) -> Result<Vec<S>, AlgebraError> {
    alg.check_len(x)?;
    alg.check_len(y)?;
    Ok(group_product(alg, x, y))
}

/// Product of several elements from left to right.
pub fn group_product_all<S: Scalar>(alg: &GradedAlgebra, xs: &[Vec<S>]) -> Vec<S> {
    xs.iter().fold(alg.zero::<S>(), |acc, x| group_product(alg, &acc, x))
}

/// Inverse in exponential coordinates, `-x`.
pub fn group_inverse<S: Scalar>(x: &[S]) -> Vec<S> {
    linalg::neg(x)
}

/// `(-x) o y`.
pub fn left_difference<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S]) -> Vec<S> {
    group_product(alg, &group_inverse(x), y)
}

/// `(-y) o x o y`.
pub fn conjugate<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S]) -> Vec<S> {
    group_product(alg, &group_product(alg, &group_inverse(y), x), y)
}

/// Left-trivialized differential of `exp` at `x`:
/// `Id - sum_{n=2}^{step} ((-1)^n / n!) ad(x)^(n-1)`.
pub fn exp_differential<S: Scalar>(alg: &GradedAlgebra, x: &[S]) -> Matrix<S> {
    let n = alg.dim();
    let ad = alg.ad_matrix(x);
    let mut out: Matrix<S> = linalg::identity(n);
    let mut power: Matrix<S> = linalg::identity(n);
    for k in 2..=alg.step() {
        power = linalg::mat_mul(&power, &ad);
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let c = S::from_rational(&(qi(sign) / factorial(k)));
        for i in 0..n {
            for j in 0..n {
                out[i][j] = out[i][j].clone() - c.clone() * power[i][j].clone();
            }
        }
    }
    out
}

/// Exact derivative at `t = 0` of `t -> (-x) o (x + t y)`.
///
/// The map is polynomial of degree at most `step` in `t`, so forward
/// differences at `t = 0, 1, .., step` give the derivative exactly.
pub fn exp_differential_oracle(alg: &GradedAlgebra, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
    let deg = alg.step();
    let mut vals: Vec<Vec<Rational>> = (0..=deg)
        .map(|t| {
            let xt = linalg::add(x, &linalg::scale(&qi(t as i64), y));
            left_difference(alg, x, &xt)
        })
        .collect();
    let mut out = alg.zero::<Rational>();
    for k in 1..=deg {
        vals = vals.windows(2).map(|w| linalg::sub(&w[1], &w[0])).collect();
        let sign = if k % 2 == 1 { 1 } else { -1 };
        linalg::axpy(&mut out, &q(sign, k as i64), &vals[0]);
    }
    out
}

/// Coefficients `e_{n,alpha}` with `c_n(A1, A2) = sum_alpha e_{n,alpha} L_n(A_alpha, A1 + A2)`,
/// where `L_n(X_1, .., X_n) = [X_1, [X_2, [.., [X_{n-1}, X_n]..]]]`.
///
/// `alpha` is a word over `{1, 2}` of length `n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LnDecomposition {
    pub n: usize,
    pub coefficients: Vec<(Vec<u8>, Rational)>,
}

impl LnDecomposition {
    /// Right side of the identity evaluated in `alg`.
    pub fn evaluate<S: Scalar>(&self, alg: &GradedAlgebra, a1: &[S], a2: &[S]) -> Vec<S> {
        let s = linalg::add(a1, a2);
        let mut out = alg.zero::<S>();
        for (alpha, e) in &self.coefficients {
            if e.is_zero() {
                continue;
            }
            let mut v = s.clone();
            for &a in alpha.iter().rev() {
                v = alg.bracket(if a == 1 { a1 } else { a2 }, &v);
            }
            linalg::axpy(&mut out, &S::from_rational(e), &v);
        }
        out
    }

    pub fn coefficient(&self, alpha: &[u8]) -> Rational {
        self.coefficients
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, e)| e.clone())
            .unwrap_or_else(Rational::zero)
    }
}

fn all_alphas(len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                [1u8, 2u8].into_iter().map(move |a| {
                    let mut w2 = w.clone();
                    w2.push(a);
                    w2
                })
            })
            .collect();
    }
    out
}

/// `c_n(a, b)` as an element of the free associative algebra on two letters.
fn free_cn(n: usize) -> FreeSeries {
    let a = FreeSeries::letter(2, n, 0);
    let b = FreeSeries::letter(2, n, 1);
    let s = a.add(&b);
    let d = a.sub(&b);
    let mut c = vec![s.clone()];
    for m in 1..n {
        let mut acc = d.commutator(&c[m - 1]).scale(&q(1, 2));
        let mut p = 1;
        while 2 * p <= m {
            let kp = k_coefficient(p);
            for comp in compositions(m, 2 * p) {
                let mut v = s.clone();
                for &k in comp.iter().rev() {
                    v = c[k - 1].commutator(&v);
                }
                acc = acc.add(&v.scale(&kp));
            }
            p += 1;
        }
        c.push(acc.scale(&q(1, m as i64 + 1)));
    }
    c.pop().expect("n >= 1")
}

/// Solves for the coefficients of the `L_n` decomposition in the free algebra.
///
/// The system is underdetermined for `n >= 3`; the particular solution with
/// free unknowns set to zero is returned. Results are cached per `n`.
pub fn decompose_cn(n: usize, alg: &GradedAlgebra) -> Result<LnDecomposition, AlgebraError> {
    if n < 2 || n > alg.step() {
        return Err(AlgebraError::LayerRange { layer: n, step: alg.step() });
    }
    Ok(decompose_cn_free(n))
}

/// Same as [`decompose_cn`] without reference to an algebra.
pub fn decompose_cn_free(n: usize) -> LnDecomposition {
    static CACHE: OnceLock<Mutex<HashMap<usize, LnDecomposition>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(d) = cache.lock().expect("decomposition cache").get(&n) {
        return d.clone();
    }
    let target = free_cn(n);
    let a = FreeSeries::letter(2, n, 0);
    let b = FreeSeries::letter(2, n, 1);
    let s = a.add(&b);
    let alphas = all_alphas(n - 1);
    let cols: Vec<FreeSeries> = alphas
        .iter()
        .map(|alpha| {
            let mut v = s.clone();
            for &x in alpha.iter().rev() {
                v = (if x == 1 { &a } else { &b }).commutator(&v);
            }
            v
        })
        .collect();
    let words: Vec<Vec<u8>> = all_alphas(n)
        .into_iter()
        .map(|w| w.into_iter().map(|x| x - 1).collect())
        .collect();
    let m: Matrix<Rational> = words
        .iter()
        .map(|w| cols.iter().map(|c| c.coefficient(w)).collect())
        .collect();
    let rhs: Vec<Rational> = words.iter().map(|w| target.coefficient(w)).collect();
    let sol = linalg::solve(&m, &rhs).expect("c_n lies in the span of the L_n terms");
    let d = LnDecomposition {
        n,
        coefficients: alphas.into_iter().zip(sol).collect(),
    };
    cache.lock().expect("decomposition cache").insert(n, d.clone());
    d
}

/// `R_n(x, y) = c_n(x, y) - ((-1)^(n-1) / n!) [(y - x)/2, x + y]_{n-1}`.
pub fn cn_remainder<S: Scalar>(alg: &GradedAlgebra, n: usize, x: &[S], y: &[S]) -> Result<Vec<S>, AlgebraError> {
    let c = bch_term(alg, n, x, y)?;
    Ok(linalg::sub(&c, &cn_main_term(alg, n, x, y)))
}

/// `((-1)^(n-1) / n!) [(y - x)/2, x + y]_{n-1}`.
pub fn cn_main_term<S: Scalar>(alg: &GradedAlgebra, n: usize, x: &[S], y: &[S]) -> Vec<S> {
    let half = S::from_rational(&q(1, 2));
    let w = linalg::scale(&half, &linalg::sub(y, x));
    let it = alg.iterated_bracket(&w, &linalg::add(x, y), n - 1);
    let sign = if (n - 1).is_multiple_of(2) { 1 } else { -1 };
    linalg::scale(&S::from_rational(&(qi(sign) / factorial(n))), &it)
}

fn series(step: usize) -> FreeSeries {
    static CACHE: OnceLock<Mutex<HashMap<usize, FreeSeries>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().expect("series cache");
    g.entry(step).or_insert_with(|| bch_series(step)).clone()
}

/// `log(exp(x) exp(y))` computed in the truncated free associative algebra
/// on two letters and evaluated in `alg` through the left-normed bracketing map.
pub fn series_oracle_product<S: Scalar>(alg: &GradedAlgebra, x: &[S], y: &[S]) -> Vec<S> {
    series(alg.step()).eval_lie(alg, &[x.to_vec(), y.to_vec()])
}

/// `sup |c_n(X+D1, Y+D2) - c_n(X,Y)| / (nu^(n-1) max(|D1|, |D2|))` over samples.
pub fn cn_difference_bound(alg: &GradedAlgebra, n: usize, nu: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let mut r = rng(seed);
    let dim = alg.dim();
    let mut sup: f64 = 0.0;
    for _ in 0..samples {
        let x = random_ball(&mut r, dim, nu);
        let y = random_ball(&mut r, dim, nu);
        let mut d1 = random_ball(&mut r, dim, nu);
        let mut d2 = random_ball(&mut r, dim, nu);
        // keep |X + D1|, |Y + D2| within nu as well
        let shrink = |d: &mut Vec<f64>, base: &[f64]| {
            while norm(&linalg::add(base, d)) > nu {
                for v in d.iter_mut() {
                    *v *= 0.5;
                }
            }
        };
        shrink(&mut d1, &x);
        shrink(&mut d2, &y);
        let m = norm(&d1).max(norm(&d2));
        if m < 1e-12 {
            continue;
        }
        let a = bch_terms(alg, &linalg::add(&x, &d1), &linalg::add(&y, &d2), n).pop().unwrap();
        let b = bch_terms(alg, &x, &y, n).pop().unwrap();
        sup = sup.max(norm(&linalg::sub(&a, &b)) / (nu.powi(n as i32 - 1) * m));
    }
    EmpiricalConstant::new(format!("gamma_{n}"), sup, samples, Some(nu))
}

/// `sup |c_n(X,Y)| / |[X,Y]|` over samples with `|X|, |Y| <= nu`.
pub fn bilinear_bound(alg: &GradedAlgebra, n: usize, nu: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let mut r = rng(seed);
    let mut sup: f64 = 0.0;
    let mut counted = 0;
    for _ in 0..samples {
        let x = random_ball(&mut r, alg.dim(), nu);
        let y = random_ball(&mut r, alg.dim(), nu);
        let b = norm(&alg.bracket(&x, &y));
        if b < 1e-12 {
            continue;
        }
        counted += 1;
        let c = bch_terms(alg, &x, &y, n).pop().unwrap();
        sup = sup.max(norm(&c) / b);
    }
    EmpiricalConstant::new(format!("alpha_{n}"), sup, counted, Some(nu))
}

/// `sup |R_3(X,Y)| / |X+Y|^3` over samples with `|X|, |Y| <= nu`.
pub fn remainder_bound(alg: &GradedAlgebra, n: usize, nu: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let mut r = rng(seed);
    let mut sup: f64 = 0.0;
    let mut counted = 0;
    for _ in 0..samples {
        let x = random_ball(&mut r, alg.dim(), nu);
        let y = random_ball(&mut r, alg.dim(), nu);
        let s = norm(&linalg::add(&x, &y));
        if s < 1e-9 {
            continue;
        }
        counted += 1;
        let rem = cn_remainder(alg, n, &x, &y).expect("n within step");
        sup = sup.max(norm(&rem) / s.powi(3));
    }
    EmpiricalConstant::new(format!("C({n},{nu})"), sup, counted, Some(nu))
}

/// `sup |(-xi) o eta| / |xi - eta|` for `|xi|, |eta| <= nu`.
pub fn left_inverse_bound(alg: &GradedAlgebra, nu: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let mut r = rng(seed);
    let mut sup: f64 = 0.0;
    let mut counted = 0;
    for _ in 0..samples {
        let a = random_ball(&mut r, alg.dim(), nu);
        let b = random_ball(&mut r, alg.dim(), nu);
        let d = norm(&linalg::sub(&a, &b));
        if d < 1e-12 {
            continue;
        }
        counted += 1;
        sup = sup.max(norm(&left_difference(alg, &a, &b)) / d);
    }
    EmpiricalConstant::new("left_inverse", sup, counted, Some(nu))
}

/// Memo of `c_n` values keyed by exact arguments; safe to share between threads.
#[derive(Debug)]
pub struct BchTermCache<'a> {
    alg: &'a GradedAlgebra,
    memo: Mutex<HashMap<(usize, Vec<Rational>, Vec<Rational>), Vec<Rational>>>,
}

impl<'a> BchTermCache<'a> {
    pub fn new(alg: &'a GradedAlgebra) -> Self {
        BchTermCache {
            alg,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn term(&self, n: usize, x: &[Rational], y: &[Rational]) -> Result<Vec<Rational>, AlgebraError> {
        let key = (n, x.to_vec(), y.to_vec());
        if let Some(v) = self.memo.lock().expect("term cache").get(&key) {
            return Ok(v.clone());
        }
        let terms = {
            if n == 0 || n > self.alg.step() {
                return Err(AlgebraError::LayerRange { layer: n, step: self.alg.step() });
            }
            self.alg.check_len(x)?;
            self.alg.check_len(y)?;
            bch_terms(self.alg, x, y, n)
        };
        let mut g = self.memo.lock().expect("term cache");
        for (k, c) in terms.iter().enumerate() {
            g.insert((k + 1, x.to_vec(), y.to_vec()), c.clone());
        }
        Ok(terms[n - 1].clone())
    }

    pub fn len(&self) -> usize {
        self.memo.lock().expect("term cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{heisenberg, HeisenbergMatrixModel};

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(2), q(1, 6));
        assert_eq!(bernoulli(4), q(-1, 30));
        assert_eq!(bernoulli(3), qi(0));
        assert_eq!(k_coefficient(1), q(1, 12));
        assert_eq!(k_coefficient(2), q(-1, 720));
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 2).len(), 3);
        assert_eq!(compositions(5, 3).len(), 6);
        assert!(compositions(1, 2).is_empty());
    }

    #[test]
    fn h1_product() {
        let h = heisenberg(1);
        let x = vec![qi(1), qi(0), qi(0)];
        let y = vec![qi(0), qi(1), qi(0)];
        assert_eq!(group_product(&h, &x, &y), vec![qi(1), qi(1), q(1, 2)]);
        assert_eq!(series_oracle_product(&h, &x, &y), vec![qi(1), qi(1), q(1, 2)]);
        assert_eq!(HeisenbergMatrixModel::new(1).product(&x, &y), vec![qi(1), qi(1), q(1, 2)]);
    }

    #[test]
    fn exp_differential_sign() {
        let h = heisenberg(1);
        let x = h.unit::<Rational>(0);
        let y = h.unit::<Rational>(1);
        let m = exp_differential(&h, &x);
        assert_eq!(linalg::mat_vec(&m, &y), vec![qi(0), qi(1), q(-1, 2)]);
        assert_eq!(exp_differential_oracle(&h, &x, &y), vec![qi(0), qi(1), q(-1, 2)]);
    }

    #[test]
    fn decomposition_n2() {
        let d = decompose_cn_free(2);
        assert_eq!(d.coefficient(&[1]), q(1, 2));
        assert_eq!(d.coefficient(&[2]), qi(0));
    }

    #[test]
    fn cache_is_coherent() {
        let h = heisenberg(1);
        let c = BchTermCache::new(&h);
        let x = vec![qi(1), qi(2), qi(3)];
        let y = vec![q(1, 2), qi(-1), qi(0)];
        let a = c.term(2, &x, &y).unwrap();
        assert_eq!(a, bch_term(&h, 2, &x, &y).unwrap());
        assert_eq!(c.term(2, &x, &y).unwrap(), a);
        assert!(c.term(3, &x, &y).is_err());
    }
}
