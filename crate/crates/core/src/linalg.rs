//! Exact linear algebra over the rationals plus a few float helpers.
//!
//! Vectors are plain `Vec`s; matrices are row-major `Vec<Vec<_>>`.

use num_traits::{One, Zero};

use crate::scalar::{Rational, Scalar};

/// Row-major matrix.
pub type Matrix<S> = Vec<Vec<S>>;

pub fn zeros<S: Scalar>(rows: usize, cols: usize) -> Matrix<S> {
    vec![vec![S::zero(); cols]; rows]
}

pub fn identity<S: Scalar>(n: usize) -> Matrix<S> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::one();
    }
    m
}

pub fn unit<S: Scalar>(n: usize, k: usize) -> Vec<S> {
    let mut v = vec![S::zero(); n];
    v[k] = S::one();
    v
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn neg<S: Scalar>(a: &[S]) -> Vec<S> {
    a.iter().map(|x| -x.clone()).collect()
}

pub fn scale<S: Scalar>(c: &S, a: &[S]) -> Vec<S> {
    a.iter().map(|x| c.clone() * x.clone()).collect()
}

/// `a += c * b`.
pub fn scale_matrix<S: Scalar>(c: &S, m: &Matrix<S>) -> Matrix<S> {
    m.iter().map(|r| scale(c, r)).collect()
}

pub fn axpy<S: Scalar>(a: &mut [S], c: &S, b: &[S]) {
    if c.is_zero_value() {
        return;
    }
    for (x, y) in a.iter_mut().zip(b) {
        if !y.is_zero_value() {
            *x = x.clone() + c.clone() * y.clone();
        }
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn is_zero_vec<S: Scalar>(a: &[S]) -> bool {
    a.iter().all(|x| x.is_zero_value())
}

pub fn mat_vec<S: Scalar>(m: &Matrix<S>, v: &[S]) -> Vec<S> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn mat_mul<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    let cols = b.first().map_or(0, |r| r.len());
    let mut out: Matrix<S> = zeros(a.len(), cols);
    for (i, row) in a.iter().enumerate() {
        for (k, aik) in row.iter().enumerate() {
            if aik.is_zero_value() {
                continue;
            }
            for j in 0..cols {
                if !b[k][j].is_zero_value() {
                    out[i][j] = out[i][j].clone() + aik.clone() * b[k][j].clone();
                }
            }
        }
    }
    out
}

pub fn transpose<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| (0..rows).map(|i| m[i][j].clone()).collect())
        .collect()
}

/// Matrix whose columns are the given vectors.
pub fn from_columns<S: Scalar>(cols: &[Vec<S>], rows: usize) -> Matrix<S> {
    (0..rows)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect()
}

pub fn column<S: Scalar>(m: &Matrix<S>, j: usize) -> Vec<S> {
    m.iter().map(|r| r[j].clone()).collect()
}

pub fn to_f64_matrix(m: &Matrix<Rational>) -> Matrix<f64> {
    m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()
}

/// Reduced row echelon form. Returns the nonzero rows and their pivot columns.
pub fn rref(mut rows: Matrix<Rational>) -> (Matrix<Rational>, Vec<usize>) {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x = x.clone() - f.clone() * y.clone();
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

pub fn rank(vectors: &[Vec<Rational>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    rref(vectors.to_vec()).1.len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace(m: &Matrix<Rational>, ncols: usize) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(m.clone());
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = Rational::one();
            for (row, &p) in r.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Solves `m x = b`. Returns a particular solution with free variables set to zero.
pub fn solve(m: &Matrix<Rational>, b: &[Rational]) -> Option<Vec<Rational>> {
    let ncols = m.first().map_or(0, |r| r.len());
    let aug: Matrix<Rational> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (r, pivots) = rref(aug);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (row, &p) in r.iter().zip(&pivots) {
        x[p] = row[ncols].clone();
    }
    Some(x)
}

/// Determinant by fraction-free elimination over the rationals.
pub fn determinant(m: &Matrix<Rational>) -> Rational {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c].clone();
        let pivot_row = a[c].clone();
        for row in a.iter_mut().skip(c + 1) {
            if !row[c].is_zero() {
                let f = row[c].clone() / pivot_row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
    }
    det
}

/// Canonical subspace of `Q^n` stored as a reduced echelon basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Span {
    dim: usize,
    basis: Matrix<Rational>,
    pivots: Vec<usize>,
}

impl Span {
    pub fn new(ambient: usize, vectors: &[Vec<Rational>]) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient);
        }
        let (basis, pivots) = rref(vectors.to_vec());
        Span {
            dim: ambient,
            basis,
            pivots,
        }
    }

    pub fn zero(ambient: usize) -> Self {
        Span {
            dim: ambient,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn ambient(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Reduced echelon basis.
    pub fn basis(&self) -> &Matrix<Rational> {
        &self.basis
    }

    /// Remainder of `v` after elimination against the basis; zero iff `v` lies in the span.
    pub fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        let mut r = v.to_vec();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    if !y.is_zero() {
                        *x = x.clone() - f.clone() * y.clone();
                    }
                }
            }
        }
        r
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Coordinates of `v` in the echelon basis, if `v` lies in the span.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    pub fn sum(&self, other: &Span) -> Span {
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        Span::new(self.dim, &all)
    }

    pub fn intersection(&self, other: &Span) -> Span {
        // Solve a·A = b·B for the coefficient vectors.
        let k = self.dim();
        let l = other.dim();
        if k == 0 || l == 0 {
            return Span::zero(self.dim);
        }
        let mut m = zeros::<Rational>(self.dim, k + l);
        for i in 0..self.dim {
            for a in 0..k {
                m[i][a] = self.basis[a][i].clone();
            }
            for b in 0..l {
                m[i][k + b] = -other.basis[b][i].clone();
            }
        }
        let vs: Vec<Vec<Rational>> = nullspace(&m, k + l)
            .into_iter()
            .map(|c| {
                let mut v = vec![Rational::zero(); self.dim];
                for a in 0..k {
                    axpy(&mut v, &c[a], &self.basis[a]);
                }
                v
            })
            .collect();
        Span::new(self.dim, &vs)
    }

    /// Greedy completion: candidates not already in the span are appended in order.
    pub fn complete_with(&self, candidates: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
        let mut cur = self.clone();
        let mut picked = Vec::new();
        for c in candidates {
            if !cur.contains(c) {
                picked.push(c.clone());
                cur = cur.sum(&Span::new(self.dim, std::slice::from_ref(c)));
            }
        }
        picked
    }

    pub fn is_subspace_of(&self, other: &Span) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }
}

/// Vectors of `vs` expressed in the basis `basis` (columns), or `None` if some vector is outside the span.
pub fn coordinates_in(basis: &[Vec<Rational>], v: &[Rational]) -> Option<Vec<Rational>> {
    let m = from_columns(basis, v.len());
    let x = solve(&m, v)?;
    Some(x)
}

/// Solves a dense square float system by LU; `None` if singular.
pub fn solve_f64(a: &Matrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = nalgebra::DMatrix::from_fn(n, a.first().map_or(0, |r| r.len()), |i, j| a[i][j]);
    let rhs = nalgebra::DVector::from_column_slice(b);
    if m.nrows() == m.ncols() {
        let x = m.lu().solve(&rhs)?;
        if x.iter().all(|v| v.is_finite()) {
            return Some(x.iter().copied().collect());
        }
        return None;
    }
    let svd = m.svd(true, true);
    let x = svd.solve(&rhs, 1e-14).ok()?;
    Some(x.iter().copied().collect())
}

/// Numerical rank and null space of a float matrix with singular-value threshold `tol`.
pub fn nullspace_f64(a: &Matrix<f64>, ncols: usize, tol: f64) -> (usize, Vec<Vec<f64>>) {
    let rows = a.len().max(1);
    let m = nalgebra::DMatrix::from_fn(rows.max(ncols), ncols, |i, j| {
        if i < a.len() {
            a[i][j]
        } else {
            0.0
        }
    });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut rank = 0;
    let mut null = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > tol {
            rank += 1;
        } else {
            null.push(vt.row(k).iter().copied().collect());
        }
    }
    (rank, null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    #[test]
    fn rref_and_rank() {
        let m = vec![
            vec![qi(1), qi(2), qi(3)],
            vec![qi(2), qi(4), qi(6)],
            vec![qi(0), qi(1), qi(1)],
        ];
        assert_eq!(rank(&m), 2);
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 1);
        assert!(is_zero_vec(&mat_vec(&m, &ns[0])));
    }

    #[test]
    fn span_ops() {
        let a = Span::new(3, &[vec![qi(1), qi(0), qi(0)], vec![qi(0), qi(1), qi(0)]]);
        let b = Span::new(3, &[vec![qi(0), qi(1), qi(0)], vec![qi(0), qi(0), qi(1)]]);
        let i = a.intersection(&b);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&[qi(0), q(3, 2), qi(0)]));
        assert_eq!(a.sum(&b).dim(), 3);
        let c = a.complete_with(&[vec![qi(1), qi(1), qi(0)], vec![qi(0), qi(0), qi(1)]]);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn solve_and_det() {
        let m = vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]];
        let x = solve(&m, &[qi(3), qi(5)]).unwrap();
        assert_eq!(x, vec![q(4, 5), q(7, 5)]);
        assert_eq!(determinant(&m), qi(5));
        assert!(solve(&vec![vec![qi(1)], vec![qi(1)]], &[qi(1), qi(2)]).is_none());
    }

    #[test]
    fn float_nullspace() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let (r, ns) = nullspace_f64(&a, 3, 1e-10);
        assert_eq!(r, 2);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][2].abs() - 1.0).abs() < 1e-12);
    }
}
