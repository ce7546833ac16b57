//! Graded nilpotent Lie algebras given by rational structure constants.
//!
//! Coordinates refer to a fixed basis `b_0, .., b_{dim-1}`; every basis vector
//! sits in one layer `1..=step`. The same coordinates are read as exponential
//! coordinates of the group.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::empirical::{random_unit, rng, EmpiricalConstant};
use crate::error::AlgebraError;
use crate::linalg::{self, Matrix, Span};
use crate::scalar::{format_rational, Rational, Scalar};

/// Nonzero bracket `[b_i, b_j] = sum c_k b_k` with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketPair<S> {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<(usize, S)>,
}

/// Raw structure constants `c_{ij}^k` for all orientations, before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureTable {
    pub dim: usize,
    entries: BTreeMap<(usize, usize, usize), Rational>,
}

impl StructureTable {
    pub fn new(dim: usize) -> Self {
        StructureTable {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Sets one raw constant without touching the opposite orientation.
    pub fn set(&mut self, i: usize, j: usize, k: usize, c: Rational) {
        if c.is_zero() {
            self.entries.remove(&(i, j, k));
        } else {
            self.entries.insert((i, j, k), c);
        }
    }

    /// Sets `c_{ij}^k = c` and `c_{ji}^k = -c`.
    pub fn set_bracket(&mut self, i: usize, j: usize, k: usize, c: Rational) {
        self.set(j, i, k, -c.clone());
        self.set(i, j, k, c);
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Rational {
        self.entries.get(&(i, j, k)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Rational)> {
        self.entries.iter()
    }

    /// `[b_i, b_j]` read directly from the raw table.
    fn basis_bracket(&self, i: usize, j: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.dim];
        for ((_, _, k), c) in self.entries.range((i, j, 0)..=(i, j, usize::MAX)) {
            v[*k] = c.clone();
        }
        v
    }

    fn bracket(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for ((i, j, k), c) in &self.entries {
            if x[*i].is_zero() || y[*j].is_zero() {
                continue;
            }
            out[*k] += c.clone() * x[*i].clone() * y[*j].clone();
        }
        out
    }
}

/// One failed constraint of a structure table. Indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Antisymmetry { i: usize, j: usize, k: usize },
    Jacobi { i: usize, j: usize, l: usize, k: usize, value: Rational },
    Grading { i: usize, j: usize, k: usize },
    LayerRange { index: usize, layer: usize },
    IndexRange { i: usize, j: usize, k: usize },
    Shape(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { i, j, k } => write!(
                f,
                "antisymmetry violated at (i,j,k) = ({},{},{})",
                i + 1,
                j + 1,
                k + 1
            ),
            Violation::Jacobi { i, j, l, k, value } => write!(
                f,
                "Jacobi identity fails on ({},{},{}): component {} equals {}",
                i + 1,
                j + 1,
                l + 1,
                k + 1,
                format_rational(value)
            ),
            Violation::Grading { i, j, k } => write!(
                f,
                "grading violated at (i,j,k) = ({},{},{})",
                i + 1,
                j + 1,
                k + 1
            ),
            Violation::LayerRange { index, layer } => {
                write!(f, "basis vector {} has invalid layer {}", index + 1, layer)
            }
            Violation::IndexRange { i, j, k } => {
                write!(f, "index out of range in entry ({},{},{})", i + 1, j + 1, k + 1)
            }
            Violation::Shape(s) => write!(f, "{s}"),
        }
    }
}

/// List of violated constraints; empty for a valid graded Lie algebra.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks antisymmetry, grading and the Jacobi identity of a raw table.
pub fn validate_grading(table: &StructureTable, layers: &[usize]) -> ValidationReport {
    let mut out = Vec::new();
    let dim = table.dim;
    if layers.len() != dim {
        out.push(Violation::Shape(format!(
            "{} layer entries for dimension {}",
            layers.len(),
            dim
        )));
        return ValidationReport { violations: out };
    }
    for (index, &layer) in layers.iter().enumerate() {
        if layer == 0 {
            out.push(Violation::LayerRange { index, layer });
        }
    }
    let mut range_ok = true;
    for ((i, j, k), _) in table.entries() {
        if *i >= dim || *j >= dim || *k >= dim {
            out.push(Violation::IndexRange { i: *i, j: *j, k: *k });
            range_ok = false;
        }
    }
    if !range_ok {
        return ValidationReport { violations: out };
    }
    for ((i, j, k), c) in table.entries() {
        if i > j {
            continue;
        }
        if i == j || table.get(*j, *i, *k) != -c.clone() {
            out.push(Violation::Antisymmetry { i: *i, j: *j, k: *k });
        }
    }
    for ((i, j, k), c) in table.entries() {
        if i < j && table.get(*j, *i, *k).is_zero() && !c.is_zero() {
            // reported above
            continue;
        }
        if i > j && table.get(*j, *i, *k).is_zero() {
            out.push(Violation::Antisymmetry { i: *j, j: *i, k: *k });
        }
    }
    for ((i, j, k), _) in table.entries() {
        if i < j && layers[*k] != layers[*i] + layers[*j] {
            out.push(Violation::Grading { i: *i, j: *j, k: *k });
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            for l in j + 1..dim {
                let ei = linalg::unit::<Rational>(dim, i);
                let ej = linalg::unit::<Rational>(dim, j);
                let el = linalg::unit::<Rational>(dim, l);
                let a = table.bracket(&ei, &table.basis_bracket(j, l));
                let b = table.bracket(&ej, &table.basis_bracket(l, i));
                let c = table.bracket(&el, &table.basis_bracket(i, j));
                for k in 0..dim {
                    let v = a[k].clone() + b[k].clone() + c[k].clone();
                    if !v.is_zero() {
                        out.push(Violation::Jacobi { i, j, l, k, value: v });
                    }
                }
            }
        }
    }
    ValidationReport { violations: out }
}

/// Certified and sampled bounds for `|[X,Y]| <= beta |X| |Y|`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketNormBound {
    /// Upper bound valid for all vectors.
    pub certified: f64,
    /// Observed ratios on random unit vectors.
    pub sampled: EmpiricalConstant,
}

/// Finite-dimensional graded Lie algebra over the rationals.
#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    name: String,
    names: Vec<String>,
    layers: Vec<usize>,
    step: usize,
    exact: Vec<BracketPair<Rational>>,
    float: Vec<BracketPair<f64>>,
    layer_index: Vec<Vec<usize>>,
    stratified: bool,
}

impl PartialEq for GradedAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.layers == other.layers && self.exact == other.exact
    }
}

impl GradedAlgebra {
    /// Validates `table` and builds the algebra.
    pub fn new(
        name: impl Into<String>,
        names: Vec<String>,
        layers: Vec<usize>,
        table: &StructureTable,
    ) -> Result<Self, AlgebraError> {
        let report = validate_grading(table, &layers);
        if !report.is_valid() {
            return Err(AlgebraError::Invalid(report));
        }
        if names.len() != table.dim {
            return Err(AlgebraError::Dimension {
                expected: table.dim,
                got: names.len(),
            });
        }
        let mut grouped: BTreeMap<(usize, usize), Vec<(usize, Rational)>> = BTreeMap::new();
        for ((i, j, k), c) in table.entries() {
            if i < j {
                grouped.entry((*i, *j)).or_default().push((*k, c.clone()));
            }
        }
        let exact: Vec<BracketPair<Rational>> = grouped
            .into_iter()
            .map(|((i, j), terms)| BracketPair { i, j, terms })
            .collect();
        Ok(Self::from_parts(name.into(), names, layers, exact))
    }

    /// Builds from brackets `[b_i, b_j] = sum c_k b_k` listed with `i < j` (0-based).
    pub fn from_brackets(
        name: impl Into<String>,
        names: Vec<String>,
        layers: Vec<usize>,
        brackets: &[(usize, usize, Vec<(usize, Rational)>)],
    ) -> Result<Self, AlgebraError> {
        let mut t = StructureTable::new(layers.len());
        for (i, j, terms) in brackets {
            if i >= j {
                return Err(AlgebraError::Unsupported(format!(
                    "bracket ({},{}) must be listed with i < j",
                    i + 1,
                    j + 1
                )));
            }
            for (k, c) in terms {
                t.set_bracket(*i, *j, *k, c.clone());
            }
        }
        Self::new(name, names, layers, &t)
    }

    fn from_parts(name: String, names: Vec<String>, layers: Vec<usize>, exact: Vec<BracketPair<Rational>>) -> Self {
        let step = layers.iter().copied().max().unwrap_or(1).max(1);
        let float = exact
            .iter()
            .map(|p| BracketPair {
                i: p.i,
                j: p.j,
                terms: p.terms.iter().map(|(k, c)| (*k, c.to_f64())).collect(),
            })
            .collect();
        let mut layer_index = vec![Vec::new(); step];
        for (k, &l) in layers.iter().enumerate() {
            layer_index[l - 1].push(k);
        }
        let mut alg = GradedAlgebra {
            name,
            names,
            layers,
            step,
            exact,
            float,
            layer_index,
            stratified: false,
        };
        alg.stratified = alg.compute_stratified();
        alg
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Same algebra under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.layers.len()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn basis_names(&self) -> &[String] {
        &self.names
    }

    /// Layer (1-based) of each basis vector.
    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn layer_of(&self, k: usize) -> usize {
        self.layers[k]
    }

    /// Basis indices in layer `i` (1-based).
    pub fn layer_indices(&self, i: usize) -> &[usize] {
        if i == 0 || i > self.step {
            return &[];
        }
        &self.layer_index[i - 1]
    }

    pub fn layer_dim(&self, i: usize) -> usize {
        self.layer_indices(i).len()
    }

    /// Nonzero brackets of basis pairs with `i < j`.
    pub fn brackets(&self) -> &[BracketPair<Rational>] {
        &self.exact
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> Rational {
        let (a, b, sign) = if i < j { (i, j, Rational::one()) } else { (j, i, -Rational::one()) };
        for p in &self.exact {
            if p.i == a && p.j == b {
                for (kk, c) in &p.terms {
                    if *kk == k {
                        return sign * c.clone();
                    }
                }
            }
        }
        Rational::zero()
    }

    /// Full raw table, both orientations.
    pub fn structure_table(&self) -> StructureTable {
        let mut t = StructureTable::new(self.dim());
        for p in &self.exact {
            for (k, c) in &p.terms {
                t.set_bracket(p.i, p.j, *k, c.clone());
            }
        }
        t
    }

    /// Always empty for a constructed algebra; kept for symmetry with file input.
    pub fn validate(&self) -> ValidationReport {
        validate_grading(&self.structure_table(), &self.layers)
    }

    pub fn zero<S: Scalar>(&self) -> Vec<S> {
        vec![S::zero(); self.dim()]
    }

    pub fn unit<S: Scalar>(&self, k: usize) -> Vec<S> {
        linalg::unit(self.dim(), k)
    }

    pub fn check_len<S>(&self, x: &[S]) -> Result<(), AlgebraError> {
        if x.len() != self.dim() {
            return Err(AlgebraError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Lie bracket, bilinear extension of the structure constants.
    pub fn bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        let mut out = self.zero::<S>();
        for p in S::pick_table(&self.exact, &self.float) {
            let (xi, xj, yi, yj) = (&x[p.i], &x[p.j], &y[p.i], &y[p.j]);
            let a = !(xi.is_zero_value() || yj.is_zero_value());
            let b = !(xj.is_zero_value() || yi.is_zero_value());
            if !a && !b {
                continue;
            }
            let w = match (a, b) {
                (true, true) => xi.clone() * yj.clone() - xj.clone() * yi.clone(),
                (true, false) => xi.clone() * yj.clone(),
                _ => -(xj.clone() * yi.clone()),
            };
            if w.is_zero_value() {
                continue;
            }
            for (k, c) in &p.terms {
                out[*k] = out[*k].clone() + c.clone() * w.clone();
            }
        }
        out
    }

    /// `[X,Y]_k = [X,[X,...,[X,Y]...]]` with `k` copies of `X`; `[X,Y]_0 = Y`.
    pub fn iterated_bracket<S: Scalar>(&self, x: &[S], y: &[S], k: usize) -> Vec<S> {
        let mut v = y.to_vec();
        for _ in 0..k {
            if linalg::is_zero_vec(&v) {
                break;
            }
            v = self.bracket(x, &v);
        }
        v
    }

    /// Matrix of `ad X`; column `b` holds `[X, b_b]`.
    pub fn ad_matrix<S: Scalar>(&self, x: &[S]) -> Matrix<S> {
        let n = self.dim();
        let cols: Vec<Vec<S>> = (0..n).map(|b| self.bracket(x, &self.unit::<S>(b))).collect();
        linalg::from_columns(&cols, n)
    }

    /// Dilation: coordinates of layer `i` are multiplied by `r^i`.
    pub fn dilate<S: Scalar>(&self, x: &[S], r: &S) -> Vec<S> {
        let mut pw = vec![S::one(); self.step + 1];
        for i in 1..=self.step {
            pw[i] = pw[i - 1].clone() * r.clone();
        }
        x.iter()
            .zip(&self.layers)
            .map(|(v, l)| v.clone() * pw[*l].clone())
            .collect()
    }

    /// Dilation with a check that `r > 0`.
    pub fn dilate_checked(&self, x: &[Rational], r: &Rational) -> Result<Vec<Rational>, AlgebraError> {
        if !r.is_positive() {
            return Err(AlgebraError::NonPositiveDilation);
        }
        Ok(self.dilate(x, r))
    }

    /// Keeps only the coordinates of layer `i`.
    pub fn project_layer<S: Scalar>(&self, x: &[S], i: usize) -> Vec<S> {
        x.iter()
            .zip(&self.layers)
            .map(|(v, l)| if *l == i { v.clone() } else { S::zero() })
            .collect()
    }

    /// Zeroes all layers below `i`.
    pub fn project_tail<S: Scalar>(&self, x: &[S], i: usize) -> Vec<S> {
        x.iter()
            .zip(&self.layers)
            .map(|(v, l)| if *l >= i { v.clone() } else { S::zero() })
            .collect()
    }

    pub fn check_layer(&self, i: usize) -> Result<(), AlgebraError> {
        if i == 0 || i > self.step {
            return Err(AlgebraError::LayerRange { layer: i, step: self.step });
        }
        Ok(())
    }

    /// Coordinates of layer `i` only, in basis order.
    pub fn layer_coords<S: Scalar>(&self, x: &[S], i: usize) -> Vec<S> {
        self.layer_indices(i).iter().map(|&k| x[k].clone()).collect()
    }

    /// Vector of the algebra with the given layer `i` coordinates and zeros elsewhere.
    pub fn embed_layer<S: Scalar>(&self, coords: &[S], i: usize) -> Vec<S> {
        let mut v = self.zero::<S>();
        for (c, &k) in coords.iter().zip(self.layer_indices(i)) {
            v[k] = c.clone();
        }
        v
    }

    /// The layer all nonzero coordinates of `x` belong to, if there is one.
    pub fn homogeneous_layer<S: Scalar>(&self, x: &[S]) -> Option<usize> {
        let mut layer = None;
        for (v, l) in x.iter().zip(&self.layers) {
            if !v.is_zero_value() {
                match layer {
                    None => layer = Some(*l),
                    Some(m) if m != *l => return None,
                    _ => {}
                }
            }
        }
        layer
    }

    /// `sum_i i * dim V_i`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layers.iter().sum()
    }

    pub fn is_stratified(&self) -> bool {
        self.stratified
    }

    fn compute_stratified(&self) -> bool {
        for i in 1..self.step {
            let mut vs = Vec::new();
            for &a in self.layer_indices(1) {
                for &b in self.layer_indices(i) {
                    vs.push(self.bracket(&self.unit::<Rational>(a), &self.unit::<Rational>(b)));
                }
            }
            if linalg::rank(&vs) != self.layer_dim(i + 1) {
                return false;
            }
        }
        // An empty first layer cannot generate anything.
        self.layer_dim(1) > 0 || self.dim() == 0
    }

    pub fn is_abelian(&self) -> bool {
        self.exact.is_empty()
    }

    /// Certified bound `sqrt(sum_{i,j,k} c_{ij}^k^2)` and a sampled check of it.
    pub fn bracket_norm_bound(&self, samples: usize, seed: u64) -> BracketNormBound {
        let mut s = Rational::zero();
        for p in &self.exact {
            for (_, c) in &p.terms {
                s += c.clone() * c.clone();
            }
        }
        // Both orientations contribute.
        let total = (s * Rational::from_integer(2.into())).to_f64();
        let certified = if total == 0.0 { 0.0 } else { total.sqrt().next_up() };
        let mut r = rng(seed);
        let mut sup: f64 = 0.0;
        for _ in 0..samples {
            let x = random_unit(&mut r, self.dim());
            let y = random_unit(&mut r, self.dim());
            sup = sup.max(crate::scalar::norm(&self.bracket(&x, &y)));
        }
        BracketNormBound {
            certified,
            sampled: EmpiricalConstant::new("beta", sup, samples, None),
        }
    }

    /// Same basis, names and layers with all structure constants multiplied by `c`.
    pub fn scaled_brackets(&self, c: &Rational) -> GradedAlgebra {
        let exact = self
            .exact
            .iter()
            .map(|p| BracketPair {
                i: p.i,
                j: p.j,
                terms: p.terms.iter().map(|(k, v)| (*k, v.clone() * c.clone())).collect(),
            })
            .filter(|p| p.terms.iter().any(|(_, v)| !v.is_zero()))
            .collect();
        Self::from_parts(self.name.clone(), self.names.clone(), self.layers.clone(), exact)
    }

    /// Float copy of an exact vector.
    pub fn to_float(&self, x: &[Rational]) -> Vec<f64> {
        x.iter().map(|v| v.to_f64()).collect()
    }

    /// Span of all brackets of two subspaces given by spanning vectors.
    pub fn bracket_span(&self, a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Span {
        let mut vs = Vec::new();
        for x in a {
            for y in b {
                let z = self.bracket(x, y);
                if !linalg::is_zero_vec(&z) {
                    vs.push(z);
                }
            }
        }
        Span::new(self.dim(), &vs)
    }
}
