//! Homogeneous subalgebras, graded morphisms, quotients and the search for
//! complementary subgroups.
//!
//! Everything here is exact. Subalgebras are stored layer by layer in reduced
//! echelon form, so two subalgebras are equal iff their layer bases are.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::bch::group_product;
use crate::catalog::{is_h_type, j_operator};
use crate::empirical::rng;
use crate::error::{AlgebraError, SubgroupError};
use crate::graded_algebra::GradedAlgebra;
use crate::linalg::{self, Matrix, Span};
use crate::poly::{groebner, GroebnerOutcome, Poly};
use crate::scalar::{format_rational, format_rational_vector, q, qi, Rational};

fn fmt_vec(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

/// `c_1 X + c_2 Y + ...` using the basis names of `alg`.
pub fn format_combination(alg: &GradedAlgebra, v: &[Rational]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (c, name) in v.iter().zip(alg.basis_names()) {
        if c.is_zero() {
            continue;
        }
        let s = if c.is_one() {
            name.clone()
        } else if *c == -Rational::one() {
            format!("-{name}")
        } else {
            format!("{} {name}", format_rational(c))
        };
        parts.push(s);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ").replace("+ -", "- ")
    }
}

/// Homogeneous subalgebra `a = (V_1 n a) + (V_2 n a) + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSubalgebra {
    ambient: usize,
    layers: Vec<Span>,
}

impl HomogeneousSubalgebra {
    /// Validates that `vectors` span a dilation invariant, bracket closed subspace.
    pub fn layered_decomposition(alg: &GradedAlgebra, vectors: &[Vec<Rational>]) -> Result<Self, SubgroupError> {
        for v in vectors {
            alg.check_len(v)?;
        }
        let dim = alg.dim();
        let span = Span::new(dim, vectors);
        let mut per_layer: Vec<Vec<Vec<Rational>>> = vec![Vec::new(); alg.step()];
        for v in span.basis() {
            for i in 1..=alg.step() {
                let p = alg.project_layer(v, i);
                if linalg::is_zero_vec(&p) {
                    continue;
                }
                if !span.contains(&p) {
                    return Err(SubgroupError::NotHomogeneous { projection: fmt_vec(&p) });
                }
                per_layer[i - 1].push(p);
            }
        }
        let layers: Vec<Span> = per_layer.iter().map(|vs| Span::new(dim, vs)).collect();
        let basis: Vec<Vec<Rational>> = layers.iter().flat_map(|s| s.basis().iter().cloned()).collect();
        for (a, x) in basis.iter().enumerate() {
            for y in &basis[a + 1..] {
                let b = alg.bracket(x, y);
                if !span.contains(&b) {
                    return Err(SubgroupError::NotSubalgebra { bracket: fmt_vec(&b) });
                }
            }
        }
        Ok(HomogeneousSubalgebra { ambient: dim, layers })
    }

    /// Smallest homogeneous subalgebra containing `vectors`.
    pub fn generated_by(alg: &GradedAlgebra, vectors: &[Vec<Rational>]) -> Result<Self, SubgroupError> {
        Self::closure(alg, vectors, false)
    }

    /// Smallest homogeneous ideal containing `vectors`.
    pub fn ideal_generated_by(alg: &GradedAlgebra, vectors: &[Vec<Rational>]) -> Result<Self, SubgroupError> {
        Self::closure(alg, vectors, true)
    }

    fn closure(alg: &GradedAlgebra, vectors: &[Vec<Rational>], ideal: bool) -> Result<Self, SubgroupError> {
        let dim = alg.dim();
        let mut gens = Vec::new();
        for v in vectors {
            alg.check_len(v)?;
            for i in 1..=alg.step() {
                let p = alg.project_layer(v, i);
                if !linalg::is_zero_vec(&p) {
                    gens.push(p);
                }
            }
        }
        let mut span = Span::new(dim, &gens);
        loop {
            let basis = span.basis().clone();
            let mut new = Vec::new();
            if ideal {
                for x in &basis {
                    for k in 0..dim {
                        new.push(alg.bracket(&alg.unit::<Rational>(k), x));
                    }
                }
            } else {
                for (a, x) in basis.iter().enumerate() {
                    for y in &basis[a + 1..] {
                        new.push(alg.bracket(x, y));
                    }
                }
            }
            let mut all = basis.clone();
            all.extend(new.into_iter().filter(|v| !linalg::is_zero_vec(v)));
            let next = Span::new(dim, &all);
            if next.dim() == span.dim() {
                break;
            }
            span = next;
        }
        // brackets of homogeneous vectors are homogeneous, so layer projections stay inside
        let homogeneous: Vec<Vec<Rational>> = span
            .basis()
            .iter()
            .flat_map(|v| (1..=alg.step()).map(move |i| alg.project_layer(v, i)))
            .filter(|v| !linalg::is_zero_vec(v))
            .collect();
        Self::layered_decomposition(alg, &homogeneous)
    }

    pub fn whole(alg: &GradedAlgebra) -> Self {
        let vs: Vec<Vec<Rational>> = (0..alg.dim()).map(|k| alg.unit(k)).collect();
        Self::layered_decomposition(alg, &vs).expect("the whole algebra is a subalgebra")
    }

    pub fn trivial(alg: &GradedAlgebra) -> Self {
        HomogeneousSubalgebra {
            ambient: alg.dim(),
            layers: vec![Span::zero(alg.dim()); alg.step()],
        }
    }

    /// `V_i + V_(i+1) + ...`, always an ideal.
    pub fn tail(alg: &GradedAlgebra, i: usize) -> Self {
        let vs: Vec<Vec<Rational>> = (0..alg.dim()).filter(|&k| alg.layer_of(k) >= i).map(|k| alg.unit(k)).collect();
        Self::layered_decomposition(alg, &vs).expect("layer tails are ideals")
    }

    pub fn dim(&self) -> usize {
        self.layers.iter().map(|s| s.dim()).sum()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn step(&self) -> usize {
        self.layers.len()
    }

    /// `sum_i i * dim(V_i n a)`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layers.iter().enumerate().map(|(i, s)| (i + 1) * s.dim()).sum()
    }

    /// `V_i n a` (1-based layer).
    pub fn layer(&self, i: usize) -> &Span {
        &self.layers[i - 1]
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|s| s.dim()).collect()
    }

    /// Layer bases concatenated in layer order.
    pub fn basis(&self) -> Vec<Vec<Rational>> {
        self.layers.iter().flat_map(|s| s.basis().iter().cloned()).collect()
    }

    pub fn span(&self) -> Span {
        Span::new(self.ambient, &self.basis())
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.span().contains(v)
    }

    /// Contained in the first layer.
    pub fn is_horizontal(&self) -> bool {
        self.layers.iter().skip(1).all(|s| s.dim() == 0)
    }

    /// Contains all of `V_i`.
    pub fn contains_layer(&self, alg: &GradedAlgebra, i: usize) -> bool {
        i <= alg.step() && self.layers[i - 1].dim() == alg.layer_dim(i)
    }

    pub fn is_commutative(&self, alg: &GradedAlgebra) -> bool {
        let b = self.basis();
        b.iter()
            .enumerate()
            .all(|(a, x)| b[a + 1..].iter().all(|y| linalg::is_zero_vec(&alg.bracket(x, y))))
    }

    /// `[G, a] c a`, checked on basis pairs.
    pub fn is_ideal(&self, alg: &GradedAlgebra) -> bool {
        let span = self.span();
        self.basis()
            .iter()
            .all(|x| (0..alg.dim()).all(|k| span.contains(&alg.bracket(&alg.unit::<Rational>(k), x))))
    }

    pub fn is_subalgebra_of(&self, other: &HomogeneousSubalgebra) -> bool {
        self.layers.iter().zip(&other.layers).all(|(a, b)| a.is_subspace_of(b))
    }

    /// `span{...}` with basis names.
    pub fn describe(&self, alg: &GradedAlgebra) -> String {
        let parts: Vec<String> = self.basis().iter().map(|v| format_combination(alg, v)).collect();
        format!("span{{{}}}", parts.join(", "))
    }
}

/// Layer-wise direct sum `a + b = G`.
pub fn is_complementary(alg: &GradedAlgebra, a: &HomogeneousSubalgebra, b: &HomogeneousSubalgebra) -> bool {
    (1..=alg.step()).all(|i| {
        let (x, y) = (a.layer(i), b.layer(i));
        x.dim() + y.dim() == alg.layer_dim(i) && x.sum(y).dim() == alg.layer_dim(i)
    })
}

/// Position of a subalgebra of a step-2 algebra relative to its layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerPosition {
    /// Contained in the first layer.
    Horizontal,
    /// Contains the second layer.
    Vertical,
    Neither,
}

pub fn horizontal_vertical_classify(alg: &GradedAlgebra, sub: &HomogeneousSubalgebra) -> Result<LayerPosition, SubgroupError> {
    if alg.step() != 2 || sub.ambient() != alg.dim() || sub.step() != 2 {
        return Err(SubgroupError::Hypothesis(format!(
            "horizontal/vertical classification needs a step-2 algebra, got {}",
            alg.name()
        )));
    }
    Ok(if sub.is_horizontal() {
        LayerPosition::Horizontal
    } else if sub.contains_layer(alg, 2) {
        LayerPosition::Vertical
    } else {
        LayerPosition::Neither
    })
}

/// Linear map between graded algebras; `matrix` has one column per domain basis vector.
#[derive(Clone, Debug)]
pub struct GradedMorphism {
    domain: GradedAlgebra,
    codomain: GradedAlgebra,
    matrix: Matrix<Rational>,
}

/// Diagnostic flags of a graded morphism.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorphismReport {
    pub is_lie_hom: bool,
    pub is_layer_preserving: bool,
    pub is_h_homomorphism: bool,
    pub is_surjective: bool,
    pub is_injective: bool,
    pub failures: Vec<String>,
}

impl GradedMorphism {
    pub fn new(domain: GradedAlgebra, codomain: GradedAlgebra, matrix: Matrix<Rational>) -> Result<Self, SubgroupError> {
        if matrix.len() != codomain.dim() {
            return Err(AlgebraError::Dimension {
                expected: codomain.dim(),
                got: matrix.len(),
            }
            .into());
        }
        for row in &matrix {
            if row.len() != domain.dim() {
                return Err(AlgebraError::Dimension {
                    expected: domain.dim(),
                    got: row.len(),
                }
                .into());
            }
        }
        Ok(GradedMorphism { domain, codomain, matrix })
    }

    /// Map given by the images of the domain basis.
    pub fn from_images(domain: GradedAlgebra, codomain: GradedAlgebra, images: &[Vec<Rational>]) -> Result<Self, SubgroupError> {
        if images.len() != domain.dim() {
            return Err(AlgebraError::Dimension {
                expected: domain.dim(),
                got: images.len(),
            }
            .into());
        }
        let m = linalg::from_columns(images, codomain.dim());
        Self::new(domain, codomain, m)
    }

    /// `x -> (x_(i_1), ..., x_(i_k))`.
    pub fn coordinate_projection(domain: GradedAlgebra, codomain: GradedAlgebra, indices: &[usize]) -> Result<Self, SubgroupError> {
        let mut m = linalg::zeros(codomain.dim(), domain.dim());
        if indices.len() != codomain.dim() {
            return Err(AlgebraError::Dimension {
                expected: codomain.dim(),
                got: indices.len(),
            }
            .into());
        }
        for (r, &c) in indices.iter().enumerate() {
            if c >= domain.dim() {
                return Err(AlgebraError::Index(c).into());
            }
            m[r][c] = Rational::one();
        }
        Self::new(domain, codomain, m)
    }

    pub fn identity(alg: &GradedAlgebra) -> Self {
        GradedMorphism {
            domain: alg.clone(),
            codomain: alg.clone(),
            matrix: linalg::identity(alg.dim()),
        }
    }

    pub fn domain(&self) -> &GradedAlgebra {
        &self.domain
    }

    pub fn codomain(&self) -> &GradedAlgebra {
        &self.codomain
    }

    pub fn matrix(&self) -> &Matrix<Rational> {
        &self.matrix
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        linalg::mat_vec(&self.matrix, x)
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&linalg::to_f64_matrix(&self.matrix), x)
    }

    /// `self o other`.
    pub fn compose(&self, other: &GradedMorphism) -> Result<GradedMorphism, SubgroupError> {
        if other.codomain != self.domain {
            return Err(AlgebraError::Mismatch("composition of incompatible maps".into()).into());
        }
        Ok(GradedMorphism {
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: linalg::mat_mul(&self.matrix, &other.matrix),
        })
    }

    fn lie_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.domain.dim();
        for i in 0..n {
            for j in i + 1..n {
                let ei = self.domain.unit::<Rational>(i);
                let ej = self.domain.unit::<Rational>(j);
                let lhs = self.apply(&self.domain.bracket(&ei, &ej));
                let rhs = self.codomain.bracket(&self.apply(&ei), &self.apply(&ej));
                if lhs != rhs {
                    let nm = self.domain.basis_names();
                    out.push(format!("L[{},{}] != [L{},L{}]", nm[i], nm[j], nm[i], nm[j]));
                }
            }
        }
        out
    }

    fn layer_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (r, row) in self.matrix.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if !v.is_zero() && self.codomain.layer_of(r) != self.domain.layer_of(c) {
                    out.push(format!(
                        "{} in layer {} has a component along {} in layer {}",
                        self.domain.basis_names()[c],
                        self.domain.layer_of(c),
                        self.codomain.basis_names()[r],
                        self.codomain.layer_of(r)
                    ));
                }
            }
        }
        out
    }

    pub fn is_lie_hom(&self) -> bool {
        self.lie_failures().is_empty()
    }

    /// Block structure along the layers, equivalent to commuting with dilations.
    pub fn is_layer_preserving(&self) -> bool {
        self.layer_failures().is_empty()
    }

    pub fn is_h_homomorphism(&self) -> bool {
        self.is_layer_preserving() && self.is_lie_hom()
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.matrix)
    }

    pub fn is_surjective(&self) -> bool {
        self.rank() == self.codomain.dim()
    }

    pub fn is_injective(&self) -> bool {
        self.rank() == self.domain.dim()
    }

    pub fn kernel(&self) -> Span {
        Span::new(self.domain.dim(), &linalg::nullspace(&self.matrix, self.domain.dim()))
    }

    pub fn image(&self) -> Span {
        let cols: Vec<Vec<Rational>> = (0..self.domain.dim()).map(|c| linalg::column(&self.matrix, c)).collect();
        Span::new(self.codomain.dim(), &cols)
    }

    pub fn kernel_subalgebra(&self) -> Result<HomogeneousSubalgebra, SubgroupError> {
        HomogeneousSubalgebra::layered_decomposition(&self.domain, self.kernel().basis())
    }

    pub fn image_subalgebra(&self) -> Result<HomogeneousSubalgebra, SubgroupError> {
        HomogeneousSubalgebra::layered_decomposition(&self.codomain, self.image().basis())
    }

    pub fn report(&self) -> MorphismReport {
        let lie = self.lie_failures();
        let layer = self.layer_failures();
        let is_lie_hom = lie.is_empty();
        let is_layer_preserving = layer.is_empty();
        let mut failures = layer;
        failures.extend(lie);
        MorphismReport {
            is_lie_hom,
            is_layer_preserving,
            is_h_homomorphism: is_lie_hom && is_layer_preserving,
            is_surjective: self.is_surjective(),
            is_injective: self.is_injective(),
            failures,
        }
    }

    fn require_h_hom(&self) -> Result<(), SubgroupError> {
        let r = self.report();
        if !r.is_h_homomorphism {
            return Err(SubgroupError::NotHHomomorphism(r.failures.join("; ")));
        }
        Ok(())
    }

    /// Whether `L` restricted to `h` is a bijection onto the codomain.
    pub fn restricts_to_isomorphism(&self, h: &HomogeneousSubalgebra) -> bool {
        let imgs: Vec<Vec<Rational>> = h.basis().iter().map(|v| self.apply(v)).collect();
        h.dim() == self.codomain.dim() && linalg::rank(&imgs) == h.dim()
    }
}

/// Exact h-homomorphism check; see [`GradedMorphism::report`].
pub fn check_h_homomorphism(l: &GradedMorphism) -> MorphismReport {
    l.report()
}

/// Quotient graded algebra `G / n` and the projection onto it.
///
/// Each quotient layer is represented by the basis vectors of `V_i` that
/// complete `n_i`, picked greedily in basis order.
pub fn quotient(alg: &GradedAlgebra, ideal: &HomogeneousSubalgebra) -> Result<(GradedAlgebra, GradedMorphism), SubgroupError> {
    if !ideal.is_ideal(alg) {
        return Err(SubgroupError::NotIdeal);
    }
    let dim = alg.dim();
    let mut reps: Vec<(Vec<Rational>, usize)> = Vec::new();
    for i in 1..=alg.step() {
        let units: Vec<Vec<Rational>> = alg.layer_indices(i).iter().map(|&k| alg.unit(k)).collect();
        for v in ideal.layer(i).complete_with(&units) {
            reps.push((v, i));
        }
    }
    let m = reps.len();
    let mut decomp: Vec<Vec<Rational>> = reps.iter().map(|(v, _)| v.clone()).collect();
    decomp.extend(ideal.basis());
    let mut proj = linalg::zeros::<Rational>(m, dim);
    for j in 0..dim {
        let c = linalg::coordinates_in(&decomp, &alg.unit::<Rational>(j)).expect("representatives and ideal span the algebra");
        for (r, row) in proj.iter_mut().enumerate() {
            row[j] = c[r].clone();
        }
    }
    let mut brackets = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let v = linalg::mat_vec(&proj, &alg.bracket(&reps[a].0, &reps[b].0));
            let terms: Vec<(usize, Rational)> = v.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
            if !terms.is_empty() {
                brackets.push((a, b, terms));
            }
        }
    }
    let names: Vec<String> = reps
        .iter()
        .enumerate()
        .map(|(a, (v, _))| match v.iter().position(|c| !c.is_zero()) {
            Some(k) if v.iter().filter(|c| !c.is_zero()).count() == 1 => alg.basis_names()[k].clone(),
            _ => format!("W{}", a + 1),
        })
        .collect();
    let layers: Vec<usize> = reps.iter().map(|(_, l)| *l).collect();
    let qalg = GradedAlgebra::from_brackets(format!("{}/n", alg.name()), names, layers, &brackets)?;
    let pi = GradedMorphism::new(alg.clone(), qalg.clone(), proj)?;
    Ok((qalg, pi))
}

/// Right inverse of `l` with image `h`, assuming `l` restricts to an isomorphism on `h`.
pub fn right_inverse(l: &GradedMorphism, h: &HomogeneousSubalgebra) -> Result<GradedMorphism, SubgroupError> {
    if !l.restricts_to_isomorphism(h) {
        return Err(SubgroupError::Hypothesis("map does not restrict to an isomorphism".into()));
    }
    let hb = h.basis();
    let imgs: Vec<Vec<Rational>> = hb.iter().map(|v| l.apply(v)).collect();
    let m = linalg::from_columns(&imgs, l.codomain().dim());
    let cols: Vec<Vec<Rational>> = (0..l.codomain().dim())
        .map(|j| {
            let c = linalg::solve(&m, &l.codomain().unit::<Rational>(j)).expect("isomorphism");
            let mut v = l.domain().zero::<Rational>();
            for (ci, b) in c.iter().zip(&hb) {
                linalg::axpy(&mut v, ci, b);
            }
            v
        })
        .collect();
    GradedMorphism::from_images(l.codomain().clone(), l.domain().clone(), &cols)
}

/// `x = p o h` with `p` in `exp a` and `h` in `exp b`, solved layer by layer.
pub fn split(
    alg: &GradedAlgebra,
    a: &HomogeneousSubalgebra,
    b: &HomogeneousSubalgebra,
    x: &[Rational],
) -> Result<(Vec<Rational>, Vec<Rational>), SubgroupError> {
    alg.check_len(x)?;
    if !is_complementary(alg, a, b) {
        return Err(SubgroupError::Hypothesis("subalgebras are not complementary".into()));
    }
    let mut p = alg.zero::<Rational>();
    let mut h = alg.zero::<Rational>();
    for i in 1..=alg.step() {
        let cur = group_product(alg, &p, &h);
        let rest = alg.project_layer(&linalg::sub(x, &cur), i);
        let ab = a.layer(i).basis().clone();
        let bb = b.layer(i).basis().clone();
        let mut all = ab.clone();
        all.extend(bb.iter().cloned());
        if all.is_empty() {
            continue;
        }
        let c = linalg::coordinates_in(&all, &rest).expect("complementary layers span");
        for (k, v) in ab.iter().enumerate() {
            linalg::axpy(&mut p, &c[k], v);
        }
        for (k, v) in bb.iter().enumerate() {
            linalg::axpy(&mut h, &c[ab.len() + k], v);
        }
    }
    debug_assert_eq!(group_product(alg, &p, &h), x);
    Ok((p, h))
}

/// Knobs for the complement searches.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Random trials before giving up.
    pub budget: usize,
    pub seed: u64,
    /// S-pair budget of the Gröbner certificate.
    pub groebner_pairs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 10_000,
            seed: 0,
            groebner_pairs: 2_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpiVerdict {
    HEpimorphism,
    SurjectiveNotEpi,
    NotSurjective,
    /// Search budget exhausted without a witness or a certificate.
    Undecided,
}

impl fmt::Display for EpiVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        write!(f, "{}", s.as_str().unwrap())
    }
}

#[derive(Clone, Debug)]
pub struct EpiClassification {
    pub verdict: EpiVerdict,
    /// Homogeneous subalgebra complementary to the kernel.
    pub witness: Option<HomogeneousSubalgebra>,
    /// Reason no complement exists, or why the map is not surjective.
    pub certificate: Option<String>,
    /// Trials spent when the search ran out of budget.
    pub trials: Option<usize>,
    pub method: String,
}

impl EpiClassification {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "verdict": self.verdict,
            "witness_basis": self.witness.as_ref().map(|w| w.basis().iter().map(|v| format_rational_vector(v)).collect::<Vec<_>>()),
            "certificate": self.certificate,
            "trials": self.trials,
            "method": self.method,
        })
    }
}

fn verified_witness(l: &GradedMorphism, n: &HomogeneousSubalgebra, h: &HomogeneousSubalgebra) -> bool {
    is_complementary(l.domain(), n, h) && l.restricts_to_isomorphism(h)
}

fn sparse_int_vector<R: Rng>(rng: &mut R, len: usize, max: i64) -> Vec<Rational> {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.5) {
                Rational::zero()
            } else {
                qi(rng.random_range(-max..=max))
            }
        })
        .collect()
}

/// Setup shared by the complement searches: `L R0 = Id` on the first layer of
/// `M`, the kernel basis, and preimages of the parts of `M` not generated by
/// its first layer.
struct LiftData {
    r0: Vec<Vec<Rational>>,
    kernel1: Vec<Vec<Rational>>,
    extra: Vec<Vec<Rational>>,
}

fn solve_in_layer(l: &GradedMorphism, target: &[Rational], layer: usize) -> Option<Vec<Rational>> {
    let g = l.domain();
    if layer > g.step() {
        return None;
    }
    let idx = g.layer_indices(layer);
    let cols: Vec<Vec<Rational>> = idx.iter().map(|&k| linalg::column(l.matrix(), k)).collect();
    let m = linalg::from_columns(&cols, l.codomain().dim());
    let y = linalg::solve(&m, target)?;
    Some(g.embed_layer(&y, layer))
}

fn lift_data(l: &GradedMorphism, n: &HomogeneousSubalgebra) -> Result<LiftData, SubgroupError> {
    let m = l.codomain();
    let m1 = m.layer_indices(1).to_vec();
    let mut r0 = Vec::new();
    for &a in &m1 {
        r0.push(solve_in_layer(l, &m.unit::<Rational>(a), 1).ok_or_else(|| SubgroupError::Hypothesis("first layer is not onto".into()))?);
    }
    let gens: Vec<Vec<Rational>> = m1.iter().map(|&a| m.unit(a)).collect();
    let generated = HomogeneousSubalgebra::generated_by(m, &gens)?;
    let mut extra = Vec::new();
    for i in 2..=m.step() {
        let units: Vec<Vec<Rational>> = m.layer_indices(i).iter().map(|&k| m.unit(k)).collect();
        for c in generated.layer(i).complete_with(&units) {
            extra.push(solve_in_layer(l, &c, i).ok_or_else(|| SubgroupError::Hypothesis(format!("layer {i} is not onto")))?);
        }
    }
    Ok(LiftData {
        r0,
        kernel1: n.layer(1).basis().clone(),
        extra,
    })
}

impl LiftData {
    fn unknowns(&self) -> usize {
        self.r0.len() * self.kernel1.len()
    }

    fn lift(&self, k: &[Rational]) -> Vec<Vec<Rational>> {
        let t = self.kernel1.len();
        self.r0
            .iter()
            .enumerate()
            .map(|(a, r)| {
                let mut v = r.clone();
                for (s, nb) in self.kernel1.iter().enumerate() {
                    linalg::axpy(&mut v, &k[a * t + s], nb);
                }
                v
            })
            .collect()
    }

    fn candidate(&self, l: &GradedMorphism, n: &HomogeneousSubalgebra, k: &[Rational]) -> Option<HomogeneousSubalgebra> {
        let mut gens = self.lift(k);
        gens.extend(self.extra.iter().cloned());
        let h = HomogeneousSubalgebra::generated_by(l.domain(), &gens).ok()?;
        verified_witness(l, n, &h).then_some(h)
    }
}

/// Polynomial equations in the entries of `K` saying that the first-layer lift
/// `R0 + K` respects every relation among brackets in the first layer of `M`.
fn bracket_equations(l: &GradedMorphism, data: &LiftData) -> Vec<Poly> {
    let g = l.domain();
    let m = l.codomain();
    let nv = data.unknowns();
    let t = data.kernel1.len();
    let lifts: Vec<Vec<Poly>> = data
        .r0
        .iter()
        .enumerate()
        .map(|(a, r)| {
            (0..g.dim())
                .map(|k| {
                    let mut p = Poly::constant(nv, r[k].clone());
                    for (s, nb) in data.kernel1.iter().enumerate() {
                        if !nb[k].is_zero() {
                            p = p.add(&Poly::var(nv, a * t + s).scale(&nb[k]));
                        }
                    }
                    p
                })
                .collect()
        })
        .collect();
    let m1 = m.layer_indices(1).to_vec();
    let mut pairs = Vec::new();
    let mut cols = Vec::new();
    for a in 0..m1.len() {
        for b in a + 1..m1.len() {
            pairs.push((a, b));
            cols.push(m.bracket(&m.unit::<Rational>(m1[a]), &m.unit::<Rational>(m1[b])));
        }
    }
    if pairs.is_empty() {
        return Vec::new();
    }
    let rel = linalg::nullspace(&linalg::from_columns(&cols, m.dim()), pairs.len());
    let poly_bracket = |u: &[Poly], v: &[Poly]| -> Vec<Poly> {
        let mut out = vec![Poly::zero(nv); g.dim()];
        for bp in g.brackets() {
            let w = u[bp.i].mul(&v[bp.j]).sub(&u[bp.j].mul(&v[bp.i]));
            if w.is_zero() {
                continue;
            }
            for (k, c) in &bp.terms {
                out[*k] = out[*k].add(&w.scale(c));
            }
        }
        out
    };
    let brs: Vec<Vec<Poly>> = pairs.iter().map(|&(a, b)| poly_bracket(&lifts[a], &lifts[b])).collect();
    let mut eqs = Vec::new();
    for r in rel {
        for k in 0..g.dim() {
            let mut e = Poly::zero(nv);
            for (p, c) in r.iter().enumerate() {
                if !c.is_zero() {
                    e = e.add(&brs[p][k].scale(c));
                }
            }
            if !e.is_zero() {
                eqs.push(e);
            }
        }
    }
    eqs
}

/// Levenberg-Marquardt on a polynomial system from a random start, rounded to
/// nearby small rationals.
fn newton_rational<R: Rng>(eqs: &[Poly], jac: &[Vec<Poly>], nv: usize, rng: &mut R) -> Option<Vec<Rational>> {
    let mut x: Vec<f64> = (0..nv).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut mu = 1e-3;
    let res = |x: &[f64]| -> Vec<f64> { eqs.iter().map(|e| e.eval_f64(x)).collect() };
    let mut f = res(&x);
    let mut fn2: f64 = f.iter().map(|v| v * v).sum();
    for _ in 0..200 {
        if fn2 < 1e-26 {
            break;
        }
        let j = DMatrix::from_fn(eqs.len(), nv, |r, c| jac[r][c].eval_f64(&x));
        let fv = DVector::from_column_slice(&f);
        let jt = j.transpose();
        let a = &jt * &j + DMatrix::identity(nv, nv) * mu;
        let Some(step) = a.lu().solve(&(-(&jt * &fv))) else {
            break;
        };
        let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let fnew = res(&xn);
        let n2: f64 = fnew.iter().map(|v| v * v).sum();
        if n2 < fn2 {
            x = xn;
            f = fnew;
            fn2 = n2;
            mu = (mu * 0.3).max(1e-12);
        } else {
            mu *= 10.0;
        }
    }
    if fn2 > 1e-16 {
        return None;
    }
    x.iter()
        .map(|v| {
            let r = Ratio::<i64>::approximate_float(*v)?;
            if r.denom().abs() > 10_000 {
                return None;
            }
            Some(q(*r.numer(), *r.denom()))
        })
        .collect()
}

/// Classifies a surjective h-homomorphism by looking for a homogeneous
/// subalgebra complementary to its kernel.
///
/// Tiers: closed forms for Heisenberg and complexified Heisenberg kernels, the
/// bracket-closure polynomial system for step at most 2 (witnesses are checked
/// exactly, nonexistence is certified by a Gröbner basis equal to `{1}`), and a
/// randomized search otherwise. Only the exact tiers report nonexistence.
pub fn classify_epimorphism(l: &GradedMorphism, opts: &SearchOptions) -> Result<EpiClassification, SubgroupError> {
    l.require_h_hom()?;
    let g = l.domain();
    let m = l.codomain();
    if !l.is_surjective() {
        return Ok(EpiClassification {
            verdict: EpiVerdict::NotSurjective,
            witness: None,
            certificate: Some(format!("rank {} < dim {}", l.rank(), m.dim())),
            trials: None,
            method: "rank".into(),
        });
    }
    let n = l.kernel_subalgebra()?;
    let found = |h: HomogeneousSubalgebra, method: &str| EpiClassification {
        verdict: EpiVerdict::HEpimorphism,
        witness: Some(h),
        certificate: None,
        trials: None,
        method: method.into(),
    };
    if n.dim() == 0 {
        return Ok(found(HomogeneousSubalgebra::whole(g), "injective"));
    }
    let target_abelian = m.is_abelian() && m.step() == 1;
    if target_abelian && g.step() == 2 && is_h_type(g) && n.contains_layer(g, 2) {
        if g.layer_dim(2) == 1 {
            if let Ok(h) = heisenberg_complement(g, n.layer(1)) {
                if verified_witness(l, &n, &h) {
                    return Ok(found(h, "heisenberg_symplectic"));
                }
            }
        } else if g.layer_dim(2) == 2 && g.layer_dim(1) == 4 && n.layer(1).dim() == 2 {
            if let Ok(h) = h21_complement(g, &n) {
                if verified_witness(l, &n, &h) {
                    return Ok(found(h, "complexified_heisenberg"));
                }
            }
        }
    }
    let data = lift_data(l, &n)?;
    let nv = data.unknowns();
    let zero = vec![Rational::zero(); nv];
    if let Some(h) = data.candidate(l, &n, &zero) {
        return Ok(found(h, "direct_lift"));
    }
    let mut r = rng(opts.seed);
    if g.step() <= 2 && m.step() <= 2 {
        let eqs = bracket_equations(l, &data);
        match groebner(&eqs, opts.groebner_pairs) {
            GroebnerOutcome::Unit => {
                return Ok(EpiClassification {
                    verdict: EpiVerdict::SurjectiveNotEpi,
                    witness: None,
                    certificate: Some(format!(
                        "the {} bracket-closure equations in {} unknowns generate the unit ideal",
                        eqs.len(),
                        nv
                    )),
                    trials: None,
                    method: "bracket_equations".into(),
                })
            }
            GroebnerOutcome::Basis(_) | GroebnerOutcome::Budget => {}
        }
        let jac: Vec<Vec<Poly>> = eqs.iter().map(|e| (0..nv).map(|i| e.derivative(i)).collect()).collect();
        for trial in 0..opts.budget {
            let k = if trial % 100 == 99 {
                match newton_rational(&eqs, &jac, nv, &mut r) {
                    Some(k) => k,
                    None => continue,
                }
            } else {
                sparse_int_vector(&mut r, nv, 2)
            };
            if eqs.iter().all(|e| e.eval(&k).is_zero()) {
                if let Some(h) = data.candidate(l, &n, &k) {
                    return Ok(found(h, "bracket_equations"));
                }
            }
        }
    } else {
        // a complement is isomorphic to M, so for stratified M it is generated by its
        // first layer, and with no unknowns that layer is the direct lift
        if nv == 0 && m.is_stratified() {
            return Ok(EpiClassification {
                verdict: EpiVerdict::SurjectiveNotEpi,
                witness: None,
                certificate: Some("the first layer of a complement is forced and the subalgebra it generates is not complementary".into()),
                trials: None,
                method: "forced_first_layer".into(),
            });
        }
        for _ in 0..opts.budget {
            let k = sparse_int_vector(&mut r, nv, 2);
            if let Some(h) = data.candidate(l, &n, &k) {
                return Ok(found(h, "random_lift"));
            }
        }
    }
    Ok(EpiClassification {
        verdict: EpiVerdict::Undecided,
        witness: None,
        certificate: None,
        trials: Some(opts.budget),
        method: "budget_exhausted".into(),
    })
}

/// Whether the homogeneous ideal `n` admits a complementary homogeneous subgroup,
/// decided on the quotient projection.
pub fn complement_of_ideal(alg: &GradedAlgebra, n: &HomogeneousSubalgebra, opts: &SearchOptions) -> Result<EpiClassification, SubgroupError> {
    let (_, pi) = quotient(alg, n)?;
    classify_epimorphism(&pi, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonoVerdict {
    HMonomorphism,
    NotInjective,
    /// Search budget exhausted without a complementary ideal.
    Undecided,
}

impl fmt::Display for MonoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        write!(f, "{}", s.as_str().unwrap())
    }
}

#[derive(Clone, Debug)]
pub struct MonoClassification {
    pub verdict: MonoVerdict,
    /// Homogeneous ideal complementary to the image.
    pub complement: Option<HomogeneousSubalgebra>,
    /// h-epimorphism `p` with `p o T = Id`.
    pub projection: Option<GradedMorphism>,
    pub trials: Option<usize>,
    pub method: String,
}

impl MonoClassification {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "verdict": self.verdict,
            "witness_basis": self.complement.as_ref().map(|w| w.basis().iter().map(|v| format_rational_vector(v)).collect::<Vec<_>>()),
            "trials": self.trials,
            "method": self.method,
        })
    }
}

/// Projection onto `h` along `n`, followed by the inverse of `t` on its image.
fn left_inverse_along(t: &GradedMorphism, h: &HomogeneousSubalgebra, n: &HomogeneousSubalgebra) -> Result<GradedMorphism, SubgroupError> {
    let g = t.codomain();
    let hb = h.basis();
    let mut all = hb.clone();
    all.extend(n.basis());
    let tm = t.matrix().clone();
    let pre: Vec<Vec<Rational>> = hb
        .iter()
        .map(|v| linalg::solve(&tm, v).expect("image vector"))
        .collect();
    let cols: Vec<Vec<Rational>> = (0..g.dim())
        .map(|j| {
            let c = linalg::coordinates_in(&all, &g.unit::<Rational>(j)).expect("complementary");
            let mut v = t.domain().zero::<Rational>();
            for (ci, p) in c.iter().zip(&pre) {
                linalg::axpy(&mut v, ci, p);
            }
            v
        })
        .collect();
    GradedMorphism::from_images(g.clone(), t.domain().clone(), &cols)
}

/// Classifies an injective h-homomorphism by looking for a homogeneous ideal
/// complementary to its image.
pub fn classify_monomorphism(t: &GradedMorphism, opts: &SearchOptions) -> Result<MonoClassification, SubgroupError> {
    t.require_h_hom()?;
    if !t.is_injective() {
        return Ok(MonoClassification {
            verdict: MonoVerdict::NotInjective,
            complement: None,
            projection: None,
            trials: None,
            method: "rank".into(),
        });
    }
    let g = t.codomain();
    let h = t.image_subalgebra()?;
    let done = |n: HomogeneousSubalgebra, method: &str| -> Result<MonoClassification, SubgroupError> {
        let p = left_inverse_along(t, &h, &n)?;
        Ok(MonoClassification {
            verdict: MonoVerdict::HMonomorphism,
            complement: Some(n),
            projection: Some(p),
            trials: None,
            method: method.into(),
        })
    };
    let complements: Vec<Vec<Vec<Rational>>> = (1..=g.step())
        .map(|i| {
            let units: Vec<Vec<Rational>> = g.layer_indices(i).iter().map(|&k| g.unit(k)).collect();
            h.layer(i).complete_with(&units)
        })
        .collect();
    if h.dim() == g.dim() {
        return done(HomogeneousSubalgebra::trivial(g), "surjective");
    }
    if h.is_horizontal() {
        let mut vs = complements[0].clone();
        vs.extend(HomogeneousSubalgebra::tail(g, 2).basis());
        let n = HomogeneousSubalgebra::layered_decomposition(g, &vs)?;
        if n.is_ideal(g) && is_complementary(g, &n, &h) {
            return done(n, "horizontal_image");
        }
    }
    let mut r = rng(opts.seed);
    for trial in 0..opts.budget {
        let mut vs = Vec::new();
        for (i, comp) in complements.iter().enumerate() {
            let hb = h.layer(i + 1).basis();
            for c in comp {
                let mut v = c.clone();
                if trial > 0 {
                    for b in hb {
                        let s = sparse_int_vector(&mut r, 1, 2);
                        linalg::axpy(&mut v, &s[0], b);
                    }
                }
                vs.push(v);
            }
        }
        let Ok(n) = HomogeneousSubalgebra::ideal_generated_by(g, &vs) else {
            continue;
        };
        if is_complementary(g, &n, &h) {
            return done(n, "random_ideal");
        }
    }
    Ok(MonoClassification {
        verdict: MonoVerdict::Undecided,
        complement: None,
        projection: None,
        trials: Some(opts.budget),
        method: "budget_exhausted".into(),
    })
}

fn perp(vs: &[Vec<Rational>], m: usize) -> Vec<Vec<Rational>> {
    if vs.is_empty() {
        return (0..m).map(|k| linalg::unit(m, k)).collect();
    }
    linalg::nullspace(&vs.to_vec(), m)
}

fn gram_schmidt(vs: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for u in &out {
            let c = linalg::dot(&w, u) / linalg::dot(u, u);
            linalg::axpy(&mut w, &-c, u);
        }
        if !linalg::is_zero_vec(&w) {
            out.push(w);
        }
    }
    out
}

/// Which construction produced a Heisenberg complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementPath {
    /// Symplectic basis adapted to `n_1`.
    Symplectic,
    /// Greedy random isotropic subspace, used when `n_1 n w^perp` is not isotropic.
    IsotropicSearch,
}

/// Commutative horizontal `s` with `s + n_1 = v` in `h^n`, for `n_1` of
/// codimension `k <= n` in the first layer.
pub fn heisenberg_complement(alg: &GradedAlgebra, n1: &Span) -> Result<HomogeneousSubalgebra, SubgroupError> {
    heisenberg_complement_traced(alg, n1).map(|(s, _)| s)
}

pub fn heisenberg_complement_traced(alg: &GradedAlgebra, n1: &Span) -> Result<(HomogeneousSubalgebra, ComplementPath), SubgroupError> {
    if alg.step() != 2 || alg.layer_dim(2) != 1 || !is_h_type(alg) {
        return Err(SubgroupError::Hypothesis(format!("{} is not a Heisenberg algebra", alg.name())));
    }
    let m = alg.layer_dim(1);
    let n = m / 2;
    let mut nb = Vec::new();
    for v in n1.basis() {
        if alg.homogeneous_layer(v) != Some(1) {
            return Err(SubgroupError::Hypothesis("n_1 is not horizontal".into()));
        }
        nb.push(alg.layer_coords(v, 1));
    }
    let p = nb.len();
    let k = m - p;
    if k == 0 || k > n {
        return Err(SubgroupError::Hypothesis(format!("codimension {k} of n_1 is not in 1..={n}")));
    }
    let jz = j_operator(alg, &alg.unit::<Rational>(alg.layer_indices(2)[0]));
    let jm = |x: &[Rational]| linalg::mat_vec(&jz, x);
    let omega = |x: &[Rational], y: &[Rational]| linalg::dot(&jm(x), y);
    let nspan = Span::new(m, &nb);
    let embed = |vs: &[Vec<Rational>]| -> Vec<Vec<Rational>> { vs.iter().map(|v| alg.embed_layer(v, 1)).collect() };
    let accept = |s: &[Vec<Rational>]| -> bool {
        s.len() == k
            && linalg::rank(&[s.to_vec(), nb.clone()].concat()) == m
            && s.iter().enumerate().all(|(a, x)| s[a + 1..].iter().all(|y| omega(x, y).is_zero()))
    };

    // symplectic construction
    let jn: Vec<Vec<Rational>> = nb.iter().map(|v| jm(v)).collect();
    let w = nspan.intersection(&Span::new(m, &jn));
    let mut es: Vec<Vec<Rational>> = Vec::new();
    loop {
        let mut used: Vec<Vec<Rational>> = es.clone();
        used.extend(es.iter().map(|e| jm(e)));
        let cand = w.intersection(&Span::new(m, &perp(&used, m)));
        match cand.basis().first() {
            Some(e) => es.push(e.clone()),
            None => break,
        }
    }
    let l = es.len();
    let w_basis: Vec<Vec<Rational>> = w.basis().clone();
    let u_space = nspan.intersection(&Span::new(m, &perp(&w_basis, m)));
    let us = gram_schmidt(u_space.basis());
    let isotropic = us.iter().enumerate().all(|(a, x)| us[a + 1..].iter().all(|y| omega(x, y).is_zero()));
    if isotropic && p >= n {
        let r = n + l - p;
        let mut taken: Vec<Vec<Rational>> = w_basis.clone();
        taken.extend(us.iter().cloned());
        taken.extend(us.iter().map(|u| jm(u)));
        let mut ws: Vec<Vec<Rational>> = Vec::new();
        while ws.len() < r {
            let mut used = taken.clone();
            used.extend(ws.iter().cloned());
            used.extend(ws.iter().map(|x| jm(x)));
            match perp(&used, m).first() {
                Some(x) => ws.push(x.clone()),
                None => break,
            }
        }
        if ws.len() == r && r <= l {
            let mut s: Vec<Vec<Rational>> = us.iter().map(|u| jm(u)).collect();
            for (wv, e) in ws.iter().zip(&es) {
                let c = linalg::dot(wv, wv) / linalg::dot(e, e);
                s.push(linalg::add(wv, e));
                s.push(linalg::sub(&jm(wv), &linalg::scale(&c, &jm(e))));
            }
            if accept(&s) {
                let sub = HomogeneousSubalgebra::layered_decomposition(alg, &embed(&s))?;
                return Ok((sub, ComplementPath::Symplectic));
            }
        }
    }

    // isotropic search
    let mut r = rng(0x5eed);
    for _ in 0..200 {
        let mut s: Vec<Vec<Rational>> = Vec::new();
        while s.len() < k {
            let rows: Vec<Vec<Rational>> = s.iter().map(|x| jm(x)).collect();
            let comm = perp(&rows, m);
            let coef = sparse_int_vector(&mut r, comm.len(), 3);
            let mut v = vec![Rational::zero(); m];
            for (c, b) in coef.iter().zip(&comm) {
                linalg::axpy(&mut v, c, b);
            }
            let mut trial = nb.clone();
            trial.extend(s.iter().cloned());
            let before = linalg::rank(&trial);
            trial.push(v.clone());
            if linalg::rank(&trial) > before {
                s.push(v);
            } else if comm.len() <= s.len() {
                break;
            }
        }
        if accept(&s) {
            let sub = HomogeneousSubalgebra::layered_decomposition(alg, &embed(&s))?;
            return Ok((sub, ComplementPath::IsotropicSearch));
        }
    }
    Err(SubgroupError::Hypothesis("no isotropic complement found".into()))
}

/// Order in which the free parameter of the non-commutative case is tried.
fn parameter_candidates() -> Vec<Rational> {
    let mut out = Vec::new();
    for d in 1..=4i64 {
        for nmr in 1..=4i64 {
            for s in [1, -1] {
                let v = q(s * nmr, d);
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Commutative horizontal complement of an ideal `n = n_1 + z` of the
/// complexified Heisenberg algebra with `dim n_1 = 2`.
pub fn h21_complement(alg: &GradedAlgebra, n: &HomogeneousSubalgebra) -> Result<HomogeneousSubalgebra, SubgroupError> {
    if alg.step() != 2 || alg.layer_dim(1) != 4 || alg.layer_dim(2) != 2 || !is_h_type(alg) {
        return Err(SubgroupError::Hypothesis(format!("{} is not the complexified Heisenberg algebra", alg.name())));
    }
    if !n.contains_layer(alg, 2) || n.layer(1).dim() != 2 {
        return Err(SubgroupError::Hypothesis("need n_2 = z and dim n_1 = 2".into()));
    }
    let nb: Vec<Vec<Rational>> = n.layer(1).basis().iter().map(|v| alg.layer_coords(v, 1)).collect();
    let jz = |zc: &[Rational]| j_operator(alg, &alg.embed_layer(zc, 2));
    let x = nb[0].clone();
    let y = nb[1].clone();
    let z = alg.layer_coords(&alg.bracket(&alg.embed_layer(&x, 1), &alg.embed_layer(&y, 1)), 2);
    let n1 = Span::new(4, &nb);
    let check = |h: &[Vec<Rational>]| -> Option<HomogeneousSubalgebra> {
        let emb: Vec<Vec<Rational>> = h.iter().map(|v| alg.embed_layer(v, 1)).collect();
        let sub = HomogeneousSubalgebra::layered_decomposition(alg, &emb).ok()?;
        (sub.dim() == 2 && sub.is_commutative(alg) && is_complementary(alg, &sub, n)).then_some(sub)
    };
    if linalg::is_zero_vec(&z) {
        let j1 = jz(&[qi(1), qi(0)]);
        let j2 = jz(&[qi(0), qi(1)]);
        let j12x = linalg::mat_vec(&j1, &linalg::mat_vec(&j2, &x));
        if !n1.contains(&j12x) {
            return Err(SubgroupError::Hypothesis("commutative n_1 is not of the form span{X, J1 J2 X}".into()));
        }
        return check(&[linalg::mat_vec(&j1, &x), linalg::mat_vec(&j2, &x)])
            .ok_or_else(|| SubgroupError::Hypothesis("commutative case produced no complement".into()));
    }
    let t1 = z.clone();
    let t2 = vec![-z[1].clone(), z[0].clone()];
    let c2 = linalg::dot(&z, &z);
    let j1 = jz(&t1);
    let j2 = jz(&t2);
    let j2x = linalg::mat_vec(&j2, &x);
    let j1x = linalg::mat_vec(&j1, &x);
    let j12x = linalg::mat_vec(&j1, &j2x);
    for mu in parameter_candidates() {
        let a = linalg::sub(&x, &linalg::scale(&mu, &j2x));
        let b = linalg::add(&linalg::scale(&(mu.clone() * c2.clone()), &j1x), &j12x);
        if let Some(h) = check(&[a, b]) {
            return Ok(h);
        }
    }
    Err(SubgroupError::Hypothesis("no admissible parameter found".into()))
}

/// Largest commutative subalgebra of the first layer found, with an upper bound
/// when one is known in closed form.
#[derive(Clone, Debug, Serialize)]
pub struct CommutativeSearch {
    pub dim: usize,
    pub witness: Vec<Vec<String>>,
    pub upper_bound: Option<usize>,
    /// `dim == upper_bound`.
    pub exact: bool,
}

/// Maximal dimension of a commutative subspace of `V_1`.
///
/// Upper bounds: `dim V_1` for abelian brackets, `dim V_1 - rank(w)/2` when the
/// first-layer brackets span a line with form `w`, `dim V_1 - dim V_2` for
/// H-type algebras (`ad X` is onto the center). The lower bound comes from
/// greedy random extension inside commutants.
pub fn max_commutative_horizontal_dim(alg: &GradedAlgebra, attempts: usize, seed: u64) -> Result<CommutativeSearch, SubgroupError> {
    let v1 = alg.layer_indices(1).to_vec();
    let m = v1.len();
    let units: Vec<Vec<Rational>> = v1.iter().map(|&k| alg.unit(k)).collect();
    let brs = alg.bracket_span(&units, &units);
    let upper = if brs.dim() == 0 {
        Some(m)
    } else if brs.dim() == 1 {
        let dir = brs.basis()[0].clone();
        let piv = dir.iter().position(|c| !c.is_zero()).unwrap();
        let form: Matrix<Rational> = units
            .iter()
            .map(|a| units.iter().map(|b| alg.bracket(a, b)[piv].clone() / dir[piv].clone()).collect())
            .collect();
        Some(m - linalg::rank(&form) / 2)
    } else if is_h_type(alg) {
        Some(m - alg.layer_dim(2))
    } else {
        None
    };
    if upper.is_none() && m > 8 {
        return Err(SubgroupError::Hypothesis(format!("first layer of dimension {m} exceeds the search bound 8")));
    }
    let mut r = rng(seed);
    let mut best: Vec<Vec<Rational>> = Vec::new();
    for _ in 0..attempts.max(1) {
        let mut s: Vec<Vec<Rational>> = Vec::new();
        loop {
            // commutant of s inside V_1: sum_a c_a [e_a, s_j] = 0
            let mut rows: Vec<Vec<Rational>> = Vec::new();
            for x in &s {
                let cols: Vec<Vec<Rational>> = units.iter().map(|u| alg.bracket(u, x)).collect();
                rows.extend(linalg::from_columns(&cols, alg.dim()));
            }
            let comm: Vec<Vec<Rational>> = if rows.is_empty() {
                (0..m).map(|k| linalg::unit(m, k)).collect()
            } else {
                linalg::nullspace(&rows, m)
            };
            let cur = Span::new(alg.dim(), &s);
            let fresh: Vec<Vec<Rational>> = comm
                .iter()
                .map(|c| {
                    let mut v = alg.zero::<Rational>();
                    for (ci, u) in c.iter().zip(&units) {
                        linalg::axpy(&mut v, ci, u);
                    }
                    v
                })
                .filter(|v| !cur.contains(v))
                .collect();
            if fresh.is_empty() {
                break;
            }
            let mut v = alg.zero::<Rational>();
            for _ in 0..8 {
                let coef = sparse_int_vector(&mut r, fresh.len(), 3);
                v = alg.zero::<Rational>();
                for (c, f) in coef.iter().zip(&fresh) {
                    linalg::axpy(&mut v, c, f);
                }
                if !cur.contains(&v) {
                    break;
                }
            }
            if cur.contains(&v) {
                v = fresh[0].clone();
            }
            s.push(v);
        }
        if s.len() > best.len() {
            best = s;
        }
        if Some(best.len()) == upper {
            break;
        }
    }
    Ok(CommutativeSearch {
        dim: best.len(),
        witness: best.iter().map(|v| fmt_vec(v)).collect(),
        upper_bound: upper,
        exact: Some(best.len()) == upper,
    })
}

/// Result of a numerical membership test for `g` in `exp(a) exp(b)`.
#[derive(Clone, Debug)]
pub struct ProductMembership {
    pub member: bool,
    /// Smallest residual `|exp(a) o exp(b) - g|` reached.
    pub residual: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Damped Gauss-Newton on `(s, t) -> (sum s_i a_i) o (sum t_j b_j) - g` from
/// several random starts.
pub fn product_set_membership(
    alg: &GradedAlgebra,
    a: &[Vec<Rational>],
    b: &[Vec<Rational>],
    g: &[f64],
    starts: usize,
    seed: u64,
) -> ProductMembership {
    let af: Vec<Vec<f64>> = a.iter().map(|v| alg.to_float(v)).collect();
    let bf: Vec<Vec<f64>> = b.iter().map(|v| alg.to_float(v)).collect();
    let na = af.len();
    let nv = na + bf.len();
    let combo = |c: &[f64], basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v = vec![0.0; alg.dim()];
        for (ci, bi) in c.iter().zip(basis) {
            linalg::axpy(&mut v, ci, bi);
        }
        v
    };
    let resid = |x: &[f64]| -> Vec<f64> {
        let p = group_product(alg, &combo(&x[..na], &af), &combo(&x[na..], &bf));
        linalg::sub(&p, g)
    };
    let mut r = rng(seed);
    let mut best = (f64::INFINITY, vec![0.0; nv]);
    for _ in 0..starts.max(1) {
        let mut x: Vec<f64> = (0..nv).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut f = resid(&x);
        let mut fn2: f64 = f.iter().map(|v| v * v).sum();
        let mut mu = 1e-3;
        for _ in 0..200 {
            if fn2 < 1e-28 {
                break;
            }
            let h = 1e-7;
            let mut jac = DMatrix::zeros(alg.dim(), nv);
            for c in 0..nv {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let (fp, fm) = (resid(&xp), resid(&xm));
                for rr in 0..alg.dim() {
                    jac[(rr, c)] = (fp[rr] - fm[rr]) / (2.0 * h);
                }
            }
            let fv = DVector::from_column_slice(&f);
            let jt = jac.transpose();
            let lhs = &jt * &jac + DMatrix::identity(nv, nv) * mu;
            let Some(step) = lhs.lu().solve(&(-(&jt * &fv))) else {
                break;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let fnew = resid(&xn);
            let n2: f64 = fnew.iter().map(|v| v * v).sum();
            if n2 < fn2 {
                x = xn;
                f = fnew;
                fn2 = n2;
                mu = (mu * 0.3).max(1e-14);
            } else {
                mu *= 10.0;
                if mu > 1e12 {
                    break;
                }
            }
        }
        if fn2.sqrt() < best.0 {
            best = (fn2.sqrt(), x);
        }
        if best.0 < 1e-12 {
            break;
        }
    }
    ProductMembership {
        member: best.0 < 1e-10,
        residual: best.0,
        a: best.1[..na].to_vec(),
        b: best.1[na..].to_vec(),
    }
}

/// Random pairs of complementary homogeneous subalgebras, both nontrivial,
/// found by rejection sampling of sparse integer layer bases.
pub fn search_complementary_pairs(
    alg: &GradedAlgebra,
    count: usize,
    max_trials: usize,
    seed: u64,
) -> Vec<(HomogeneousSubalgebra, HomogeneousSubalgebra)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for _ in 0..max_trials {
        if out.len() >= count {
            break;
        }
        let mut av = Vec::new();
        let mut bv = Vec::new();
        for i in 1..=alg.step() {
            let idx = alg.layer_indices(i);
            let d = idx.len();
            let da = r.random_range(0..=d);
            for _ in 0..da {
                av.push(alg.embed_layer(&sparse_int_vector(&mut r, d, 2), i));
            }
            for _ in da..d {
                bv.push(alg.embed_layer(&sparse_int_vector(&mut r, d, 2), i));
            }
        }
        let (Ok(a), Ok(b)) = (
            HomogeneousSubalgebra::layered_decomposition(alg, &av),
            HomogeneousSubalgebra::layered_decomposition(alg, &bv),
        ) else {
            continue;
        };
        if a.dim() > 0 && b.dim() > 0 && is_complementary(alg, &a, &b) {
            out.push((a, b));
        }
    }
    out
}
