//! Truncated free associative algebra over a finite alphabet, with the
//! Hall basis of the free Lie algebra.
//!
//! Elements are finite sums of words with rational coefficients; products
//! drop every word longer than the truncation degree.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::graded_algebra::GradedAlgebra;
use crate::linalg::{self, Span};
use crate::scalar::{qi, Rational, Scalar};

pub type Word = Vec<u8>;

/// Element of the free associative algebra truncated at `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeSeries {
    pub letters: usize,
    pub degree: usize,
    terms: BTreeMap<Word, Rational>,
}

impl FreeSeries {
    pub fn zero(letters: usize, degree: usize) -> Self {
        FreeSeries {
            letters,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(letters: usize, degree: usize) -> Self {
        let mut s = Self::zero(letters, degree);
        s.terms.insert(Vec::new(), Rational::one());
        s
    }

    pub fn letter(letters: usize, degree: usize, a: u8) -> Self {
        let mut s = Self::zero(letters, degree);
        if degree >= 1 {
            s.terms.insert(vec![a], Rational::one());
        }
        s
    }

    /// Adds `c * word`, dropping words beyond the truncation.
    pub fn add_term(&mut self, w: Word, c: Rational) {
        if w.len() > self.degree || c.is_zero() {
            return;
        }
        let v = self.coefficient(&w) + c;
        if v.is_zero() {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, v);
        }
    }

    pub fn coefficient(&self, w: &[u8]) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FreeSeries) -> FreeSeries {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FreeSeries) -> FreeSeries {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> FreeSeries {
        let mut out = Self::zero(self.letters, self.degree);
        if c.is_zero() {
            return out;
        }
        for (w, v) in &self.terms {
            out.terms.insert(w.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &FreeSeries) -> FreeSeries {
        let mut out = Self::zero(self.letters, self.degree.min(other.degree));
        let mut acc: BTreeMap<Word, Rational> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.len() + b.len() > out.degree {
                    continue;
                }
                let mut w = a.clone();
                w.extend_from_slice(b);
                *acc.entry(w).or_insert_with(Rational::zero) += ca.clone() * cb.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        out.terms = acc;
        out
    }

    /// `ab - ba`.
    pub fn commutator(&self, other: &FreeSeries) -> FreeSeries {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&[])
    }

    /// Part of word length exactly `d`.
    pub fn homogeneous_part(&self, d: usize) -> FreeSeries {
        let mut out = Self::zero(self.letters, self.degree);
        for (w, c) in &self.terms {
            if w.len() == d {
                out.terms.insert(w.clone(), c.clone());
            }
        }
        out
    }

    /// `sum_k x^k / k!` for `x` without constant term.
    pub fn exp(&self) -> FreeSeries {
        assert!(self.constant_term().is_zero(), "exp needs a series without constant term");
        let mut out = Self::one(self.letters, self.degree);
        let mut power = Self::one(self.letters, self.degree);
        for k in 1..=self.degree {
            power = power.mul(self).scale(&Rational::new(1.into(), (k as i64).into()));
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
        }
        out
    }

    /// `log(1 + u) = sum_k (-1)^(k+1) u^k / k` for `self = 1 + u`.
    pub fn log(&self) -> FreeSeries {
        assert!(self.constant_term().is_one(), "log needs constant term 1");
        let u = self.sub(&Self::one(self.letters, self.degree));
        let mut out = Self::zero(self.letters, self.degree);
        let mut power = Self::one(self.letters, self.degree);
        for k in 1..=self.degree {
            power = power.mul(&u);
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            out = out.add(&power.scale(&Rational::new(sign.into(), (k as i64).into())));
        }
        out
    }

    /// Evaluates a Lie polynomial in a graded algebra, letter `a` mapped to `images[a]`.
    ///
    /// Each homogeneous part of degree `d` is sent through the left-normed
    /// bracketing map and divided by `d`, which is exact on Lie elements.
    pub fn eval_lie<S: Scalar>(&self, alg: &GradedAlgebra, images: &[Vec<S>]) -> Vec<S> {
        let mut out = alg.zero::<S>();
        for (w, c) in &self.terms {
            if w.is_empty() {
                continue;
            }
            let mut v = images[w[0] as usize].clone();
            for &a in &w[1..] {
                if linalg::is_zero_vec(&v) {
                    break;
                }
                v = alg.bracket(&v, &images[a as usize]);
            }
            if linalg::is_zero_vec(&v) {
                continue;
            }
            let f = S::from_rational(&(c.clone() / qi(w.len() as i64)));
            linalg::axpy(&mut out, &f, &v);
        }
        out
    }
}

/// Truncated `log(exp(a) exp(b))` in two letters.
pub fn bch_series(degree: usize) -> FreeSeries {
    let a = FreeSeries::letter(2, degree, 0);
    let b = FreeSeries::letter(2, degree, 1);
    a.exp().mul(&b.exp()).log()
}

/// Bracket tree over letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieTree {
    Letter(u8),
    Bracket(usize, usize),
}

/// Hall basis of the free Lie algebra on `letters` generators up to `degree`.
#[derive(Clone, Debug)]
pub struct HallBasis {
    pub letters: usize,
    pub degree: usize,
    pub trees: Vec<LieTree>,
    pub degrees: Vec<usize>,
    pub expansions: Vec<FreeSeries>,
}

/// `(1/d) sum_{k | d} mu(k) p^(d/k)`, the dimension of degree `d` in the free Lie algebra.
pub fn witt_dimension(p: usize, d: usize) -> usize {
    let mut total: i128 = 0;
    for k in 1..=d {
        if d.is_multiple_of(k) {
            total += mobius(k) as i128 * (p as i128).pow((d / k) as u32);
        }
    }
    (total / d as i128) as usize
}

fn mobius(n: usize) -> i32 {
    let mut m = n;
    let mut res = 1;
    let mut f = 2;
    while f * f <= m {
        if m.is_multiple_of(f) {
            m /= f;
            if m.is_multiple_of(f) {
                return 0;
            }
            res = -res;
        }
        f += 1;
    }
    if m > 1 {
        res = -res;
    }
    res
}

impl HallBasis {
    /// Basic commutators: ordered by degree then creation; `[u, v]` is kept
    /// when `u > v` and, if `u = [x, y]`, also `y <= v`.
    pub fn new(letters: usize, degree: usize) -> Self {
        let mut hb = HallBasis {
            letters,
            degree,
            trees: Vec::new(),
            degrees: Vec::new(),
            expansions: Vec::new(),
        };
        for a in 0..letters {
            hb.trees.push(LieTree::Letter(a as u8));
            hb.degrees.push(1);
            hb.expansions.push(FreeSeries::letter(letters, degree, a as u8));
        }
        for d in 2..=degree {
            let n = hb.trees.len();
            for u in 0..n {
                for v in 0..u {
                    if hb.degrees[u] + hb.degrees[v] != d {
                        continue;
                    }
                    if let LieTree::Bracket(_, y) = hb.trees[u] {
                        if y > v {
                            continue;
                        }
                    }
                    let e = hb.expansions[u].commutator(&hb.expansions[v]);
                    hb.trees.push(LieTree::Bracket(u, v));
                    hb.degrees.push(d);
                    hb.expansions.push(e);
                }
            }
        }
        hb
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Human readable bracket expression, letters named by `names`.
    pub fn label(&self, k: usize, names: &[String]) -> String {
        match self.trees[k] {
            LieTree::Letter(a) => names[a as usize].clone(),
            LieTree::Bracket(u, v) => format!("[{},{}]", self.label(u, names), self.label(v, names)),
        }
    }

    /// Coordinates of a homogeneous Lie polynomial of degree `d` in the basis elements of that degree.
    pub fn coordinates(&self, x: &FreeSeries, d: usize) -> Option<Vec<(usize, Rational)>> {
        let idx: Vec<usize> = (0..self.len()).filter(|&k| self.degrees[k] == d).collect();
        let mut words: Vec<Word> = Vec::new();
        for &k in &idx {
            for (w, _) in self.expansions[k].terms() {
                if !words.contains(w) {
                    words.push(w.clone());
                }
            }
        }
        for (w, _) in x.terms() {
            if !words.contains(w) {
                return if x.is_zero() { Some(Vec::new()) } else { None };
            }
        }
        let m: Vec<Vec<Rational>> = words
            .iter()
            .map(|w| idx.iter().map(|&k| self.expansions[k].coefficient(w)).collect())
            .collect();
        let b: Vec<Rational> = words.iter().map(|w| x.coefficient(w)).collect();
        let sol = linalg::solve(&m, &b)?;
        Some(
            idx.into_iter()
                .zip(sol)
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        )
    }

    /// Checks that the expansions of each degree are linearly independent.
    pub fn is_independent(&self) -> bool {
        for d in 1..=self.degree {
            let idx: Vec<usize> = (0..self.len()).filter(|&k| self.degrees[k] == d).collect();
            let mut words: Vec<Word> = Vec::new();
            for &k in &idx {
                for (w, _) in self.expansions[k].terms() {
                    if !words.contains(w) {
                        words.push(w.clone());
                    }
                }
            }
            let vs: Vec<Vec<Rational>> = idx
                .iter()
                .map(|&k| words.iter().map(|w| self.expansions[k].coefficient(w)).collect())
                .collect();
            if Span::new(words.len(), &vs).dim() != idx.len() {
                return false;
            }
        }
        true
    }
}
