//! Named graded algebras: Heisenberg, complexified Heisenberg, H-type
//! algebras from J-data, free nilpotent algebras, direct products and a
//! small 2-step example with a 3-dimensional second layer.

use num_traits::{One, Zero};

use crate::error::AlgebraError;
use crate::free::{witt_dimension, HallBasis, LieTree};
use crate::graded_algebra::{GradedAlgebra, StructureTable};
use crate::linalg::{self, Matrix};
use crate::scalar::{qi, Rational};

/// Largest dimension accepted by [`free_nilpotent`].
pub const FREE_DIM_BUDGET: usize = 200;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// `R^k` with trivial brackets.
pub fn abelian(k: usize) -> GradedAlgebra {
    let n = (1..=k).map(|i| format!("E{i}")).collect();
    GradedAlgebra::new(format!("r{k}"), n, vec![1; k], &StructureTable::new(k)).expect("abelian algebra")
}

/// Heisenberg algebra with basis `X1, Y1, .., Xn, Yn, Z` and `[Xi, Yi] = Z`.
pub fn heisenberg(n: usize) -> GradedAlgebra {
    let dim = 2 * n + 1;
    let mut nm = Vec::with_capacity(dim);
    for i in 1..=n {
        nm.push(if n == 1 { "X".to_string() } else { format!("X{i}") });
        nm.push(if n == 1 { "Y".to_string() } else { format!("Y{i}") });
    }
    nm.push("Z".to_string());
    let mut layers = vec![1; 2 * n];
    layers.push(2);
    let mut t = StructureTable::new(dim);
    for i in 0..n {
        t.set_bracket(2 * i, 2 * i + 1, 2 * n, qi(1));
    }
    GradedAlgebra::new(format!("h{n}"), nm, layers, &t).expect("heisenberg algebra")
}

/// J-maps of an H-type algebra on orthonormal bases of the two layers.
///
/// `j[k]` is the matrix of `J_{Z_k}` acting on first-layer coordinates;
/// column `b` holds `J_{Z_k} e_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct HTypeData {
    pub name: String,
    pub v_names: Vec<String>,
    pub z_names: Vec<String>,
    pub j: Vec<Matrix<Rational>>,
}

/// Checks skewness, `J_Z^T J_Z = |Z|^2 Id` and `J_Z J_W + J_W J_Z = -2 <Z,W> Id` on the basis.
pub fn check_h_type(j: &[Matrix<Rational>], m: usize) -> Result<(), AlgebraError> {
    let id: Matrix<Rational> = linalg::identity(m);
    for (k, jk) in j.iter().enumerate() {
        if jk.len() != m || jk.iter().any(|r| r.len() != m) {
            return Err(AlgebraError::Dimension {
                expected: m,
                got: jk.len(),
            });
        }
        let jt = linalg::transpose(jk);
        for a in 0..m {
            for b in 0..m {
                if jt[a][b] != -jk[a][b].clone() {
                    return Err(AlgebraError::Unsupported(format!(
                        "J_{} is not skew: entries ({},{}) and ({},{})",
                        k + 1,
                        a + 1,
                        b + 1,
                        b + 1,
                        a + 1
                    )));
                }
            }
        }
        let g = linalg::mat_mul(&jt, jk);
        for b in 0..m {
            let col = linalg::column(&g, b);
            if col != id[b] {
                let img = linalg::column(jk, b);
                return Err(AlgebraError::Unsupported(format!(
                    "|J_Z X| != |Z||X| for Z = Z{}, X = e{}: |J_Z X|^2 = {}",
                    k + 1,
                    b + 1,
                    crate::scalar::format_rational(&crate::scalar::norm_sq(&img))
                )));
            }
        }
        for (l, jl) in j.iter().enumerate().skip(k + 1) {
            let s = linalg::mat_mul(jk, jl);
            let t = linalg::mat_mul(jl, jk);
            for a in 0..m {
                for b in 0..m {
                    if !(s[a][b].clone() + t[a][b].clone()).is_zero() {
                        return Err(AlgebraError::Unsupported(format!(
                            "J_{} J_{} + J_{} J_{} is not zero at ({},{})",
                            k + 1,
                            l + 1,
                            l + 1,
                            k + 1,
                            a + 1,
                            b + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Builds the 2-step algebra with `<J_Z X, Y> = <Z, [X, Y]>`, rejecting non H-type data.
pub fn h_type_from_j(data: &HTypeData) -> Result<GradedAlgebra, AlgebraError> {
    let m = data.v_names.len();
    let d = data.z_names.len();
    if data.j.len() != d {
        return Err(AlgebraError::Dimension {
            expected: d,
            got: data.j.len(),
        });
    }
    check_h_type(&data.j, m)?;
    let mut t = StructureTable::new(m + d);
    for a in 0..m {
        for b in a + 1..m {
            for (k, jk) in data.j.iter().enumerate() {
                // <J_k e_a, e_b> is row b of column a
                let c = jk[b][a].clone();
                if !c.is_zero() {
                    t.set_bracket(a, b, m + k, c);
                }
            }
        }
    }
    let mut nm = data.v_names.clone();
    nm.extend(data.z_names.iter().cloned());
    let mut layers = vec![1; m];
    layers.extend(vec![2; d]);
    GradedAlgebra::new(data.name.clone(), nm, layers, &t)
}

/// J-data of the complexified Heisenberg algebra on `R0..R3`, `Z1, Z2`.
pub fn complexified_heisenberg_data() -> HTypeData {
    let z = Rational::zero;
    let one = || qi(1);
    let neg = || qi(-1);
    // J_{Z1}: R0 -> R1, R1 -> -R0, R2 -> R3, R3 -> -R2
    let mut j1: Matrix<Rational> = vec![vec![z(), z(), z(), z()]; 4];
    j1[1][0] = one();
    j1[0][1] = neg();
    j1[3][2] = one();
    j1[2][3] = neg();
    // J_{Z2}: R0 -> R2, R2 -> -R0, R1 -> -R3, R3 -> R1
    let mut j2: Matrix<Rational> = vec![vec![z(), z(), z(), z()]; 4];
    j2[2][0] = one();
    j2[0][2] = neg();
    j2[3][1] = neg();
    j2[1][3] = one();
    HTypeData {
        name: "h2_1".into(),
        v_names: names(&["R0", "R1", "R2", "R3"]),
        z_names: names(&["Z1", "Z2"]),
        j: vec![j1, j2],
    }
}

/// Complexified Heisenberg algebra: `[R0,R1] = [R2,R3] = Z1`, `[R0,R2] = -[R1,R3] = Z2`.
pub fn complexified_heisenberg() -> GradedAlgebra {
    h_type_from_j(&complexified_heisenberg_data()).expect("complexified heisenberg is H-type")
}

/// J-data of `h^n`: `J_Z X_i = Y_i`, `J_Z Y_i = -X_i`.
pub fn heisenberg_data(n: usize) -> HTypeData {
    let m = 2 * n;
    let mut j: Matrix<Rational> = linalg::zeros(m, m);
    for i in 0..n {
        j[2 * i + 1][2 * i] = qi(1);
        j[2 * i][2 * i + 1] = qi(-1);
    }
    let h = heisenberg(n);
    HTypeData {
        name: format!("h{n}"),
        v_names: h.basis_names()[..m].to_vec(),
        z_names: vec!["Z".into()],
        j: vec![j],
    }
}

/// Matrix of `J_Z` on first-layer coordinates of a 2-step algebra, for the
/// coordinate inner product: `<J_Z X, Y> = <Z, [X, Y]>`.
pub fn j_operator(alg: &GradedAlgebra, z: &[Rational]) -> Matrix<Rational> {
    let v1 = alg.layer_indices(1);
    let m = v1.len();
    let mut j = linalg::zeros(m, m);
    for (a, &ia) in v1.iter().enumerate() {
        for (b, &ib) in v1.iter().enumerate() {
            let br = alg.bracket(&alg.unit::<Rational>(ia), &alg.unit::<Rational>(ib));
            j[b][a] = linalg::dot(z, &br);
        }
    }
    j
}

/// J-data read back from a 2-step algebra with the coordinate inner product.
pub fn j_data_of(alg: &GradedAlgebra) -> HTypeData {
    let nm = alg.basis_names();
    HTypeData {
        name: alg.name().to_string(),
        v_names: alg.layer_indices(1).iter().map(|&k| nm[k].clone()).collect(),
        z_names: alg.layer_indices(2).iter().map(|&k| nm[k].clone()).collect(),
        j: alg
            .layer_indices(2)
            .iter()
            .map(|&k| j_operator(alg, &alg.unit::<Rational>(k)))
            .collect(),
    }
}

/// Whether a 2-step algebra with its coordinate inner product is of H-type.
pub fn is_h_type(alg: &GradedAlgebra) -> bool {
    if alg.step() != 2 || alg.layer_dim(2) == 0 {
        return false;
    }
    let d = j_data_of(alg);
    check_h_type(&d.j, d.v_names.len()).is_ok()
}

/// Free nilpotent algebra together with its Hall basis.
#[derive(Clone, Debug)]
pub struct FreeNilpotent {
    pub algebra: GradedAlgebra,
    pub hall: HallBasis,
}

impl FreeNilpotent {
    /// Extends a map of the generators into `target` to a Lie homomorphism,
    /// returned as a matrix (column `k` is the image of basis element `k`).
    pub fn extend(&self, target: &GradedAlgebra, images: &[Vec<Rational>]) -> Result<Matrix<Rational>, AlgebraError> {
        if images.len() != self.hall.letters {
            return Err(AlgebraError::Dimension {
                expected: self.hall.letters,
                got: images.len(),
            });
        }
        let mut cols: Vec<Vec<Rational>> = Vec::with_capacity(self.hall.len());
        for k in 0..self.hall.len() {
            let v = match self.hall.trees[k] {
                LieTree::Letter(a) => {
                    target.check_len(&images[a as usize])?;
                    images[a as usize].clone()
                }
                LieTree::Bracket(u, v) => target.bracket(&cols[u], &cols[v]),
            };
            cols.push(v);
        }
        Ok(linalg::from_columns(&cols, target.dim()))
    }
}

/// Free `step`-step nilpotent algebra on `p` generators in a Hall basis.
pub fn free_nilpotent_with_basis(p: usize, step: usize) -> Result<FreeNilpotent, AlgebraError> {
    if p == 0 || step == 0 {
        return Err(AlgebraError::Unsupported("free nilpotent algebra needs p >= 1 and step >= 1".into()));
    }
    let total: usize = (1..=step).map(|d| witt_dimension(p, d)).sum();
    if total > FREE_DIM_BUDGET {
        return Err(AlgebraError::Unsupported(format!(
            "free nilpotent algebra on {p} generators of step {step} has dimension {total}, above the budget {FREE_DIM_BUDGET}"
        )));
    }
    let hall = HallBasis::new(p, step);
    let letter_names: Vec<String> = (1..=p).map(|i| format!("X{i}")).collect();
    let nm: Vec<String> = (0..hall.len()).map(|k| hall.label(k, &letter_names)).collect();
    let layers = hall.degrees.clone();
    let mut t = StructureTable::new(hall.len());
    for a in 0..hall.len() {
        for b in a + 1..hall.len() {
            let d = hall.degrees[a] + hall.degrees[b];
            if d > step {
                continue;
            }
            let e = hall.expansions[a].commutator(&hall.expansions[b]);
            let coords = hall.coordinates(&e, d).ok_or_else(|| {
                AlgebraError::Unsupported(format!("bracket of Hall elements {} and {} not in span", a + 1, b + 1))
            })?;
            for (k, c) in coords {
                t.set_bracket(a, b, k, c);
            }
        }
    }
    let algebra = GradedAlgebra::new(format!("free_{p}_{step}"), nm, layers, &t)?;
    Ok(FreeNilpotent { algebra, hall })
}

pub fn free_nilpotent(p: usize, step: usize) -> Result<GradedAlgebra, AlgebraError> {
    Ok(free_nilpotent_with_basis(p, step)?.algebra)
}

/// Direct product of Lie algebras; basis of `a` first, then `b`.
pub fn direct_product(a: &GradedAlgebra, b: &GradedAlgebra) -> GradedAlgebra {
    let na = a.dim();
    let mut nm: Vec<String> = a.basis_names().to_vec();
    for s in b.basis_names() {
        if nm.contains(s) {
            nm.push(format!("{s}'"));
        } else {
            nm.push(s.clone());
        }
    }
    let mut layers = a.layers().to_vec();
    layers.extend_from_slice(b.layers());
    let mut t = StructureTable::new(na + b.dim());
    for p in a.brackets() {
        for (k, c) in &p.terms {
            t.set_bracket(p.i, p.j, *k, c.clone());
        }
    }
    for p in b.brackets() {
        for (k, c) in &p.terms {
            t.set_bracket(na + p.i, na + p.j, na + *k, c.clone());
        }
    }
    GradedAlgebra::new(format!("{}x{}", a.name(), b.name()), nm, layers, &t).expect("direct product of valid algebras")
}

/// Surjective h-homomorphism `g_(r,step) + a -> g_(p,step)`, `p <= r`, sending the
/// generators `X_1..X_p` to their namesakes and the remaining generators and `a` to zero.
pub fn free_projection(
    p: usize,
    r: usize,
    step: usize,
    a: &GradedAlgebra,
) -> Result<crate::subgroups::GradedMorphism, crate::error::SolverError> {
    if p > r {
        return Err(AlgebraError::Unsupported(format!("need p <= r, got p = {p}, r = {r}")).into());
    }
    let big = free_nilpotent(r, step)?;
    let small = free_nilpotent(p, step)?;
    let domain = direct_product(&big, a);
    let cols = domain.layer_dim(1);
    let first: Matrix<Rational> = (0..p)
        .map(|i| (0..cols).map(|j| if i == j { qi(1) } else { Rational::zero() }).collect())
        .collect();
    let mat = crate::pdiff::extend_first_layer(&domain, &small, &first)?;
    Ok(crate::subgroups::GradedMorphism::new(domain, small, mat)?)
}

/// 2-step algebra on `X1..X4`, `Z23, Z24, Z34` with `[X2,X3] = Z23`,
/// `[X2,X4] = Z24`, `[X3,X4] = Z34`.
pub fn example_g42() -> GradedAlgebra {
    GradedAlgebra::from_brackets(
        "g42",
        names(&["X1", "X2", "X3", "X4", "Z23", "Z24", "Z34"]),
        vec![1, 1, 1, 1, 2, 2, 2],
        &[
            (1, 2, vec![(4, qi(1))]),
            (1, 3, vec![(5, qi(1))]),
            (2, 3, vec![(6, qi(1))]),
        ],
    )
    .expect("g42 algebra")
}

/// Names understood by [`by_name`].
pub fn list() -> Vec<&'static str> {
    vec!["h1", "h2", "h3", "h4", "h2_1", "g42", "free_2_2", "free_2_3", "free_3_2", "r1", "r2", "r3"]
}

/// Looks up `h<n>`, `h2_1`, `g42`, `r<k>` and `free_<p>_<step>`.
pub fn by_name(name: &str) -> Option<GradedAlgebra> {
    match name {
        "h2_1" | "complexified_heisenberg" => return Some(complexified_heisenberg()),
        "g42" => return Some(example_g42()),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("free_") {
        let mut it = rest.split('_');
        let p: usize = it.next()?.parse().ok()?;
        let s: usize = it.next()?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        return free_nilpotent(p, s).ok();
    }
    if let Some(n) = name.strip_prefix('h').and_then(|s| s.parse::<usize>().ok()) {
        return (n >= 1).then(|| heisenberg(n));
    }
    if let Some(k) = name.strip_prefix('r').and_then(|s| s.parse::<usize>().ok()) {
        return (k >= 1).then(|| abelian(k));
    }
    None
}

/// Unipotent `(n+2) x (n+2)` model of `h^n`:
/// `X_i -> E_{0,i}`, `Y_i -> E_{i,n+1}`, `Z -> E_{0,n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergMatrixModel {
    pub n: usize,
}

impl HeisenbergMatrixModel {
    pub fn new(n: usize) -> Self {
        HeisenbergMatrixModel { n }
    }

    fn size(&self) -> usize {
        self.n + 2
    }

    /// Strictly upper triangular matrix of an algebra vector.
    pub fn to_matrix(&self, x: &[Rational]) -> Matrix<Rational> {
        let n = self.n;
        let mut m = linalg::zeros(self.size(), self.size());
        for i in 0..n {
            m[0][i + 1] = x[2 * i].clone();
            m[i + 1][n + 1] = x[2 * i + 1].clone();
        }
        m[0][n + 1] = x[2 * n].clone();
        m
    }

    pub fn from_matrix(&self, m: &Matrix<Rational>) -> Vec<Rational> {
        let n = self.n;
        let mut x = vec![Rational::zero(); 2 * n + 1];
        for i in 0..n {
            x[2 * i] = m[0][i + 1].clone();
            x[2 * i + 1] = m[i + 1][n + 1].clone();
        }
        x[2 * n] = m[0][n + 1].clone();
        x
    }

    /// `I + M + M^2/2`; exact since `M^3 = 0`.
    pub fn exp(&self, m: &Matrix<Rational>) -> Matrix<Rational> {
        let m2 = linalg::mat_mul(m, m);
        let mut out: Matrix<Rational> = linalg::identity(self.size());
        let half = Rational::new(1.into(), 2.into());
        for i in 0..self.size() {
            for j in 0..self.size() {
                out[i][j] = out[i][j].clone() + m[i][j].clone() + half.clone() * m2[i][j].clone();
            }
        }
        out
    }

    /// `N - N^2/2` with `N = g - I`.
    pub fn log(&self, g: &Matrix<Rational>) -> Matrix<Rational> {
        let s = self.size();
        let mut nm = g.clone();
        for (i, row) in nm.iter_mut().enumerate() {
            row[i] = row[i].clone() - Rational::one();
        }
        let n2 = linalg::mat_mul(&nm, &nm);
        let half = Rational::new(1.into(), 2.into());
        let mut out = linalg::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                out[i][j] = nm[i][j].clone() - half.clone() * n2[i][j].clone();
            }
        }
        out
    }

    /// Group product computed with matrices.
    pub fn product(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let g = linalg::mat_mul(&self.exp(&self.to_matrix(x)), &self.exp(&self.to_matrix(y)));
        self.from_matrix(&self.log(&g))
    }
}
