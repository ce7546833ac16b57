//! Multivariate polynomials over the rationals and a budgeted Buchberger
//! algorithm, used to certify that bracket-closure systems have no solution.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Exponent vector ordered by degree reverse lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, o: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, o: &Monomial) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    fn div(&self, o: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    fn lcm(&self, o: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&o.0).map(|(a, b)| *a.max(b)).collect())
    }

    fn coprime(&self, o: &Monomial) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        match self.degree().cmp(&o.degree()) {
            Ordering::Equal => {}
            c => return c,
        }
        for (a, b) in self.0.iter().zip(&o.0).rev() {
            if a != b {
                return b.cmp(a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), Rational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Nonzero constant.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1 && self.terms.keys().next().unwrap().degree() == 0
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let v = self.terms.get(&m).cloned().unwrap_or_else(Rational::zero) + c;
        if v.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, v);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), -c.clone());
        }
        r
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        r
    }

    fn mul_term(&self, m: &Monomial, c: &Rational) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v.clone() * c.clone())).collect(),
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => {
                let inv = Rational::one() / c.clone();
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (e, v) in m.0.iter().zip(x) {
                for _ in 0..*e {
                    t *= v.clone();
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN);
                for (e, v) in m.0.iter().zip(x) {
                    t *= v.powi(*e as i32);
                }
                t
            })
            .sum()
    }

    /// Partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            if m.0[i] > 0 {
                let mut e = m.clone();
                e.0[i] -= 1;
                r.add_term(e, c.clone() * Rational::from_integer(m.0[i].into()));
            }
        }
        r
    }

    /// Remainder of full reduction by `g`.
    fn reduce(&self, g: &[Poly]) -> Poly {
        let mut p = self.clone();
        let mut r = Poly::zero(self.nvars);
        while let Some((lm, lc)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let div = g.iter().find(|q| q.leading().is_some_and(|(m, _)| m.divides(&lm)));
            match div {
                Some(q) => {
                    let (qm, qc) = q.leading().unwrap();
                    let f = lc / qc.clone();
                    p = p.sub(&q.mul_term(&lm.div(qm), &f));
                }
                None => {
                    r.add_term(lm.clone(), lc);
                    p.terms.remove(&lm);
                }
            }
        }
        r
    }
}

/// Outcome of a budgeted Gröbner basis computation.
#[derive(Clone, Debug, PartialEq)]
pub enum GroebnerOutcome {
    /// The ideal contains 1: no common zero over the complex numbers.
    Unit,
    /// Reduced basis of a proper ideal.
    Basis(Vec<Poly>),
    /// Pair budget exhausted.
    Budget,
}

/// Buchberger's algorithm with the coprime-leading-monomial criterion.
pub fn groebner(polys: &[Poly], max_pairs: usize) -> GroebnerOutcome {
    let mut g: Vec<Poly> = polys.iter().filter(|p| !p.is_zero()).map(|p| p.monic()).collect();
    if g.iter().any(|p| p.is_unit()) {
        return GroebnerOutcome::Unit;
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..g.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    let mut done = 0;
    while let Some((i, j)) = pairs.pop() {
        done += 1;
        if done > max_pairs {
            return GroebnerOutcome::Budget;
        }
        let (mi, _) = g[i].leading().unwrap();
        let (mj, _) = g[j].leading().unwrap();
        if mi.coprime(mj) {
            continue;
        }
        let l = mi.lcm(mj);
        let one = Rational::one();
        let s = g[i].mul_term(&l.div(mi), &one).sub(&g[j].mul_term(&l.div(mj), &one));
        let r = s.reduce(&g);
        if r.is_zero() {
            continue;
        }
        let r = r.monic();
        if r.is_unit() {
            return GroebnerOutcome::Unit;
        }
        g.push(r);
        let n = g.len() - 1;
        for k in 0..n {
            pairs.push((k, n));
        }
    }
    // interreduce
    let mut out: Vec<Poly> = Vec::new();
    for (k, p) in g.iter().enumerate() {
        let lm = p.leading().unwrap().0;
        let redundant = g.iter().enumerate().any(|(l, q)| {
            let qm = q.leading().unwrap().0;
            l != k && qm.divides(lm) && (qm != lm || l < k)
        });
        if !redundant {
            out.push(p.clone());
        }
    }
    let reduced: Vec<Poly> = (0..out.len())
        .map(|k| {
            let others: Vec<Poly> = out.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, q)| q.clone()).collect();
            let lead = out[k].leading().map(|(m, c)| (m.clone(), c.clone())).unwrap();
            let mut tail = out[k].clone();
            tail.terms.remove(&lead.0);
            let mut r = tail.reduce(&others);
            r.add_term(lead.0, lead.1);
            r.monic()
        })
        .collect();
    GroebnerOutcome::Basis(reduced)
}

/// Whether every coefficient is an integer of absolute value at most `bound`.
pub fn small_coefficients(p: &Poly, bound: i64) -> bool {
    p.terms.values().all(|c| c.is_integer() && c.abs() <= Rational::from_integer(bound.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qi;

    #[test]
    fn grevlex_order() {
        let x2 = Monomial(vec![2, 0]);
        let xy = Monomial(vec![1, 1]);
        let y2 = Monomial(vec![0, 2]);
        let x = Monomial(vec![1, 0]);
        assert!(x2 > xy && xy > y2 && y2 > x);
    }

    #[test]
    fn inconsistent_system_is_unit() {
        // x y = 1, x = 0
        let n = 2;
        let f = Poly::var(n, 0).mul(&Poly::var(n, 1)).sub(&Poly::constant(n, qi(1)));
        let g = Poly::var(n, 0);
        assert_eq!(groebner(&[f, g], 100), GroebnerOutcome::Unit);
    }

    #[test]
    fn consistent_system_is_proper() {
        // x^2 - y, x y - 1
        let n = 2;
        let x = Poly::var(n, 0);
        let y = Poly::var(n, 1);
        let f = x.mul(&x).sub(&y);
        let g = x.mul(&y).sub(&Poly::constant(n, qi(1)));
        match groebner(&[f.clone(), g.clone()], 100) {
            GroebnerOutcome::Basis(b) => {
                // the generators reduce to zero
                assert!(f.reduce(&b).is_zero());
                assert!(g.reduce(&b).is_zero());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derivative_and_eval() {
        let n = 2;
        let x = Poly::var(n, 0);
        let y = Poly::var(n, 1);
        let f = x.mul(&x).mul(&y).add(&y.scale(&qi(3)));
        assert_eq!(f.derivative(0), x.mul(&y).scale(&qi(2)));
        assert_eq!(f.eval(&[qi(2), qi(5)]), qi(35));
        assert_eq!(f.eval_f64(&[2.0, 5.0]), 35.0);
    }
}
