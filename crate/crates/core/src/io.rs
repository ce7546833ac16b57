//! Text formats: group definition JSON, morphism and subalgebra JSON, curve CSV.
//!
//! Group files use 1-based indices, list each bracket once with `i < j`, and
//! store rationals as `num`/`den` integer pairs.

use std::io::{Read, Write};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::curves::SampledCurve;
use crate::error::{AlgebraError, ParseError};
use crate::graded_algebra::GradedAlgebra;
use crate::metric::HomogeneousMetric;
use crate::scalar::{format_f64, format_rational_vector, parse_rational_vector, Rational};
use crate::subgroups::{GradedMorphism, HomogeneousSubalgebra};

/// Version tag written into every emitted file.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub k: usize,
    pub num: i64,
    pub den: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<TermEntry>,
}

/// On-disk group definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub name: String,
    pub dim: usize,
    pub step: usize,
    pub layers: Vec<usize>,
    pub basis_names: Vec<String>,
    pub brackets: Vec<BracketEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<HomogeneousMetric>,
}

/// Problems found while checking a group file, with 1-based indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileReport {
    pub problems: Vec<String>,
}

impl FileReport {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

fn small(x: &BigInt, what: &str) -> Result<i64, ParseError> {
    x.to_i64()
        .ok_or_else(|| ParseError::Invalid(format!("{what} {x} does not fit in a 64-bit integer")))
}

impl GroupFile {
    /// Canonical form: brackets sorted by `(i, j)`, terms by `k`, reduced fractions
    /// with positive denominators.
    pub fn from_algebra(alg: &GradedAlgebra, metric: Option<HomogeneousMetric>) -> Result<Self, ParseError> {
        let mut brackets = Vec::new();
        let mut pairs: Vec<_> = alg.brackets().to_vec();
        pairs.sort_by_key(|p| (p.i, p.j));
        for p in pairs {
            let mut terms = Vec::new();
            let mut ts = p.terms.clone();
            ts.sort_by_key(|(k, _)| *k);
            for (k, c) in ts {
                terms.push(TermEntry {
                    k: k + 1,
                    num: small(c.numer(), "numerator")?,
                    den: small(c.denom(), "denominator")?,
                });
            }
            if !terms.is_empty() {
                brackets.push(BracketEntry { i: p.i + 1, j: p.j + 1, terms });
            }
        }
        Ok(GroupFile {
            version: Some(FORMAT_VERSION),
            name: alg.name().to_string(),
            dim: alg.dim(),
            step: alg.step(),
            layers: alg.layers().to_vec(),
            basis_names: alg.basis_names().to_vec(),
            brackets,
            metric,
        })
    }

    /// Shape checks that do not need the algebra.
    pub fn check(&self) -> FileReport {
        let mut p = Vec::new();
        if let Some(v) = self.version {
            if v != FORMAT_VERSION {
                p.push(format!("unsupported format version {v}"));
            }
        }
        if self.layers.len() != self.dim {
            p.push(format!("layers has {} entries, dim is {}", self.layers.len(), self.dim));
        }
        if self.basis_names.len() != self.dim {
            p.push(format!("basis_names has {} entries, dim is {}", self.basis_names.len(), self.dim));
        }
        let max_layer = self.layers.iter().copied().max().unwrap_or(0);
        if max_layer != self.step {
            p.push(format!("step is {}, the largest layer is {max_layer}", self.step));
        }
        for (n, b) in self.brackets.iter().enumerate() {
            if b.i == 0 || b.j == 0 || b.i > self.dim || b.j > self.dim {
                p.push(format!("bracket {}: index out of range 1..={}", n + 1, self.dim));
            }
            if b.i >= b.j {
                p.push(format!("bracket {}: ({}, {}) must have i < j", n + 1, b.i, b.j));
            }
            for t in &b.terms {
                if t.k == 0 || t.k > self.dim {
                    p.push(format!("bracket ({}, {}): term index {} out of range", b.i, b.j, t.k));
                }
                if t.den == 0 {
                    p.push(format!("bracket ({}, {}): zero denominator", b.i, b.j));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.brackets {
            if !seen.insert((b.i, b.j)) {
                p.push(format!("bracket ({}, {}) listed twice", b.i, b.j));
            }
        }
        FileReport { problems: p }
    }

    /// Builds and validates the algebra.
    pub fn to_algebra(&self) -> Result<GradedAlgebra, ParseError> {
        let report = self.check();
        if !report.is_valid() {
            return Err(ParseError::Invalid(report.problems.join("; ")));
        }
        let brackets: Vec<(usize, usize, Vec<(usize, Rational)>)> = self
            .brackets
            .iter()
            .map(|b| {
                (
                    b.i - 1,
                    b.j - 1,
                    b.terms
                        .iter()
                        .map(|t| (t.k - 1, Rational::new(BigInt::from(t.num), BigInt::from(t.den))))
                        .collect(),
                )
            })
            .collect();
        let alg = GradedAlgebra::from_brackets(self.name.clone(), self.basis_names.clone(), self.layers.clone(), &brackets)?;
        if let Some(m) = &self.metric {
            m.check(&alg)?;
        }
        Ok(alg)
    }
}

/// Parses a group file; JSON errors carry line and column.
pub fn parse_group(text: &str) -> Result<GroupFile, ParseError> {
    Ok(serde_json::from_str(text)?)
}

/// Parses and validates in one go.
pub fn load_group(text: &str) -> Result<(GradedAlgebra, Option<HomogeneousMetric>), ParseError> {
    let f = parse_group(text)?;
    let alg = f.to_algebra()?;
    Ok((alg, f.metric))
}

/// Canonical JSON text of an algebra, newline terminated.
pub fn emit_group(alg: &GradedAlgebra, metric: Option<HomogeneousMetric>) -> Result<String, ParseError> {
    let f = GroupFile::from_algebra(alg, metric)?;
    Ok(serde_json::to_string_pretty(&f).expect("group file serializes") + "\n")
}

/// A group given inline or by catalog name.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    Name(String),
    Inline(Box<GroupFile>),
}

impl GroupRef {
    pub fn resolve(&self) -> Result<GradedAlgebra, ParseError> {
        match self {
            GroupRef::Name(n) => crate::catalog::by_name(n).ok_or_else(|| ParseError::Invalid(format!("unknown catalog group `{n}`"))),
            GroupRef::Inline(f) => f.to_algebra(),
        }
    }
}

/// Morphism file: images of the domain basis vectors as rational vector strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismFile {
    pub domain: GroupRef,
    pub codomain: GroupRef,
    /// `images[k]` is the image of the `k`-th basis vector, e.g. `"1,0,1/2"`.
    pub images: Vec<String>,
}

impl MorphismFile {
    pub fn from_morphism(l: &GradedMorphism, domain: GroupRef, codomain: GroupRef) -> Self {
        let m = l.matrix();
        let images = (0..l.domain().dim())
            .map(|c| format_rational_vector(&m.iter().map(|r| r[c].clone()).collect::<Vec<_>>()))
            .collect();
        MorphismFile { domain, codomain, images }
    }

    pub fn to_morphism(&self) -> Result<GradedMorphism, ParseError> {
        let g = self.domain.resolve()?;
        let m = self.codomain.resolve()?;
        let images: Vec<Vec<Rational>> = self.images.iter().map(|s| parse_rational_vector(s)).collect::<Result<_, _>>()?;
        GradedMorphism::from_images(g, m, &images).map_err(|e| ParseError::Invalid(e.to_string()))
    }
}

/// Subalgebra file: spanning vectors as rational vector strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubalgebraFile {
    pub group: GroupRef,
    pub vectors: Vec<String>,
}

impl SubalgebraFile {
    pub fn load(&self) -> Result<(GradedAlgebra, HomogeneousSubalgebra), ParseError> {
        let g = self.group.resolve()?;
        let v: Vec<Vec<Rational>> = self.vectors.iter().map(|s| parse_rational_vector(s)).collect::<Result<_, _>>()?;
        let s = HomogeneousSubalgebra::layered_decomposition(&g, &v).map_err(|e| ParseError::Invalid(e.to_string()))?;
        Ok((g, s))
    }
}

/// Writes `t` and one column per basis coordinate, 17 significant digits.
pub fn write_curve_csv<W: Write>(out: W, alg: &GradedAlgebra, curve: &SampledCurve) -> Result<(), ParseError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(alg.basis_names().iter().cloned());
    w.write_record(&header)?;
    for (t, p) in curve.times.iter().zip(&curve.points) {
        let mut row = vec![format_f64(*t)];
        row.extend(p.iter().map(|v| format_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_columns<R: Read>(input: R, names: &[String]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ParseError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut expected = vec!["t".to_string()];
    expected.extend(names.iter().cloned());
    if header != expected {
        return Err(ParseError::Invalid(format!("expected columns {:?}, found {:?}", expected, header)));
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ParseError::Invalid(format!("row {}: {e}", n + 2)))?;
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    Ok((times, rows))
}

/// Reads a curve written by [`write_curve_csv`].
pub fn read_curve_csv<R: Read>(input: R, alg: &GradedAlgebra) -> Result<SampledCurve, ParseError> {
    let (times, points) = read_columns(input, alg.basis_names())?;
    SampledCurve::new(times, points).map_err(|e| ParseError::Invalid(e.to_string()))
}

/// Reads a sampled control: `t` and the first-layer basis names.
pub fn read_control_csv<R: Read>(input: R, alg: &GradedAlgebra) -> Result<crate::curves::HorizontalControl, ParseError> {
    let names: Vec<String> = alg.layer_indices(1).iter().map(|&k| alg.basis_names()[k].clone()).collect();
    let (times, values) = read_columns(input, &names)?;
    crate::curves::HorizontalControl::sampled(times, values).map_err(|e| ParseError::Invalid(e.to_string()))
}

/// Rational written as `num/den` object, used by reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPair {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalPair {
    fn from(x: &Rational) -> Self {
        RationalPair {
            num: x.numer().to_string(),
            den: if x.denom().is_one() { "1".into() } else { x.denom().to_string() },
        }
    }
}

impl From<AlgebraError> for ParseError {
    fn from(e: AlgebraError) -> Self {
        ParseError::Validation(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{complexified_heisenberg, heisenberg};

    #[test]
    fn heisenberg_file_is_one_based() {
        let f = GroupFile::from_algebra(&heisenberg(1), None).unwrap();
        assert_eq!(f.brackets.len(), 1);
        assert_eq!(f.brackets[0], BracketEntry { i: 1, j: 2, terms: vec![TermEntry { k: 3, num: 1, den: 1 }] });
    }

    #[test]
    fn emit_round_trip_is_bit_exact() {
        let g = complexified_heisenberg();
        let text = emit_group(&g, Some(HomogeneousMetric::Koranyi)).unwrap();
        let (back, metric) = load_group(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(metric, Some(HomogeneousMetric::Koranyi));
        assert_eq!(emit_group(&back, metric).unwrap(), text);
    }

    #[test]
    fn json_errors_have_positions() {
        match parse_group("{\n  \"name\": 3\n}") {
            Err(ParseError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
