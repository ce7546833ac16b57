use std::path::Path;

use carnot::bch::{bch_term, decompose_cn, group_product, series_oracle_product};
use carnot::catalog::{self, is_h_type};
use carnot::empirical::{random_rational_vector, rng};
use carnot::io::{emit_group, parse_group, GroupFile, MorphismFile, SubalgebraFile};
use carnot::scalar::{format_rational, format_rational_vector, parse_rational_vector};
use carnot::subgroups::{
    classify_epimorphism, classify_monomorphism, complement_of_ideal, h21_complement, heisenberg_complement_traced, is_complementary, quotient,
    EpiVerdict, GradedMorphism, HomogeneousSubalgebra, MonoVerdict, SearchOptions,
};
use carnot::{GradedAlgebra, Rational};
use serde_json::json;

use crate::context::{to_pretty, CliError, CliResult, Context, EXIT_EXHAUSTED};

pub fn group_validate(ctx: &mut Context, file: &Path) -> CliResult<u8> {
    let text = ctx.read(file)?;
    let parsed = parse_group(&text).map_err(|e| CliError::Validation(format!("{}: {e}", file.display())))?;
    let report = parsed.check();
    if !report.is_valid() {
        let list: Vec<String> = report.problems.iter().map(|p| format!("  - {p}")).collect();
        return Err(CliError::Validation(format!("{} is invalid:\n{}", file.display(), list.join("\n"))));
    }
    let g = parsed.to_algebra().map_err(|e| CliError::Validation(format!("{} is invalid: {e}", file.display())))?;
    ctx.print(format!("{}: valid ({}, dim {}, step {})", file.display(), g.name(), g.dim(), g.step()));
    Ok(0)
}

pub fn group_emit(ctx: &mut Context, reference: &str) -> CliResult<u8> {
    let (g, metric) = ctx.group(reference)?;
    ctx.print(emit_group(&g, metric)?);
    Ok(0)
}

pub fn group_info(ctx: &mut Context, reference: &str) -> CliResult<u8> {
    let (g, metric) = ctx.group(reference)?;
    let layers: Vec<String> = (1..=g.step()).map(|i| g.layer_dim(i).to_string()).collect();
    let metric = metric.unwrap_or_else(|| carnot::metric::HomogeneousMetric::default_for(&g));
    ctx.print(format!(
        "name: {}\ndim: {}\nstep: {}\nlayers: {}\nhomogeneous dimension: {}\nstratified: {}\nh-type: {}\nmetric: {}",
        g.name(),
        g.dim(),
        g.step(),
        layers.join(" "),
        g.homogeneous_dimension(),
        g.is_stratified(),
        is_h_type(&g),
        serde_json::to_string(&metric)?,
    ));
    Ok(0)
}

pub fn catalog_list(ctx: &mut Context) -> CliResult<u8> {
    for name in catalog::list() {
        let g = catalog::by_name(name).expect("listed");
        ctx.print(format!("{name}\tdim {}\tstep {}", g.dim(), g.step()));
    }
    if let Some(dir) = ctx.catalog_dir.clone() {
        let mut names: Vec<String> = std::fs::read_dir(&dir)
            .map_err(|e| CliError::Validation(format!("cannot list {}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(String::from)).flatten()
            })
            .collect();
        names.sort();
        for n in names {
            ctx.print(format!("{n}\t({})", dir.display()));
        }
    }
    Ok(0)
}

fn vector(g: &GradedAlgebra, s: &str) -> CliResult<Vec<Rational>> {
    let v = parse_rational_vector(s)?;
    g.check_len(&v)?;
    Ok(v)
}

pub fn algebra_product(ctx: &mut Context, group: &str, x: &str, y: &str) -> CliResult<u8> {
    let g = ctx.algebra(group)?;
    let (x, y) = (vector(&g, x)?, vector(&g, y)?);
    ctx.print(format_rational_vector(&group_product(&g, &x, &y)));
    Ok(0)
}

pub fn algebra_term(ctx: &mut Context, group: &str, n: usize, x: &str, y: &str) -> CliResult<u8> {
    let g = ctx.algebra(group)?;
    let (x, y) = (vector(&g, x)?, vector(&g, y)?);
    ctx.print(format_rational_vector(&bch_term(&g, n, &x, &y)?));
    Ok(0)
}

/// One line per word `alpha` over {1, 2}: the word and its coefficient.
pub fn algebra_decompose(ctx: &mut Context, group: &str, n: usize) -> CliResult<u8> {
    let g = ctx.algebra(group)?;
    let d = decompose_cn(n, &g)?;
    for (alpha, e) in &d.coefficients {
        if *e == carnot::qi(0) {
            continue;
        }
        let word: String = alpha.iter().map(|a| a.to_string()).collect();
        ctx.print(format!("{word}\t{}", format_rational(e)));
    }
    Ok(0)
}

/// Product against the truncated series and associativity on random pairs.
pub fn algebra_oracle(ctx: &mut Context, group: &str, trials: usize) -> CliResult<u8> {
    let g = ctx.algebra(group)?;
    let mut r = rng(ctx.seed);
    for k in 0..trials {
        let x = random_rational_vector(&mut r, g.dim(), 9, 7);
        let y = random_rational_vector(&mut r, g.dim(), 9, 7);
        let z = random_rational_vector(&mut r, g.dim(), 9, 7);
        let p = group_product(&g, &x, &y);
        if p != series_oracle_product(&g, &x, &y) {
            return Err(CliError::Validation(format!(
                "trial {k}: product and series disagree at x = {}, y = {}",
                format_rational_vector(&x),
                format_rational_vector(&y)
            )));
        }
        if group_product(&g, &p, &z) != group_product(&g, &x, &group_product(&g, &y, &z)) {
            return Err(CliError::Validation(format!("trial {k}: associativity fails")));
        }
    }
    ctx.print(format!("OK {trials} trials in {}", g.name()));
    Ok(0)
}

fn morphism(ctx: &mut Context, file: &Path) -> CliResult<GradedMorphism> {
    let mf: MorphismFile = ctx.read_json(file)?;
    let g = ctx.group_ref(&mf.domain)?;
    let m = ctx.group_ref(&mf.codomain)?;
    let images: Vec<Vec<Rational>> = mf.images.iter().map(|s| parse_rational_vector(s)).collect::<Result<_, _>>()?;
    Ok(GradedMorphism::from_images(g, m, &images)?)
}

/// With `with_center` the layers above the first are added to the spanning vectors.
fn subalgebra(ctx: &mut Context, file: &Path, with_center: bool) -> CliResult<(GradedAlgebra, HomogeneousSubalgebra)> {
    let sf: SubalgebraFile = ctx.read_json(file)?;
    let g = ctx.group_ref(&sf.group)?;
    let mut v: Vec<Vec<Rational>> = sf.vectors.iter().map(|s| parse_rational_vector(s)).collect::<Result<_, _>>()?;
    if with_center {
        v.extend(HomogeneousSubalgebra::tail(&g, 2).basis());
    }
    let s = HomogeneousSubalgebra::layered_decomposition(&g, &v)?;
    Ok((g, s))
}

fn basis_json(s: &HomogeneousSubalgebra) -> Vec<String> {
    s.basis().iter().map(|v| format_rational_vector(v)).collect()
}

pub fn classify_epi(ctx: &mut Context, file: &Path, opts: &SearchOptions) -> CliResult<u8> {
    let l = morphism(ctx, file)?;
    let c = classify_epimorphism(&l, opts)?;
    ctx.print(to_pretty(&c.to_json()));
    Ok(if c.verdict == EpiVerdict::Undecided { EXIT_EXHAUSTED } else { 0 })
}

pub fn classify_mono(ctx: &mut Context, file: &Path, opts: &SearchOptions) -> CliResult<u8> {
    let t = morphism(ctx, file)?;
    let c = classify_monomorphism(&t, opts)?;
    let mut v = c.to_json();
    if let Some(p) = &c.projection {
        v["projection_images"] = json!((0..p.domain().dim())
            .map(|j| format_rational_vector(&p.matrix().iter().map(|r| r[j].clone()).collect::<Vec<_>>()))
            .collect::<Vec<_>>());
    }
    ctx.print(to_pretty(&v));
    Ok(if c.verdict == MonoVerdict::Undecided { EXIT_EXHAUSTED } else { 0 })
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum ComplementMethod {
    /// Complement of a homogeneous ideal by search and certificate.
    Ideal,
    /// Commutative horizontal complement of `n_1 + V_2` in `h^n`.
    Heisenberg,
    /// Commutative complement of an ideal of `h2_1` with two-dimensional horizontal part.
    H21,
}

pub fn complement(ctx: &mut Context, file: &Path, method: ComplementMethod, opts: &SearchOptions) -> CliResult<u8> {
    // the horizontal methods complete `n` by the center
    let (g, n) = subalgebra(ctx, file, !matches!(method, ComplementMethod::Ideal))?;
    let (witness, detail) = match method {
        ComplementMethod::Ideal => {
            let c = complement_of_ideal(&g, &n, opts)?;
            ctx.print(to_pretty(&c.to_json()));
            return Ok(if c.verdict == EpiVerdict::Undecided { EXIT_EXHAUSTED } else { 0 });
        }
        ComplementMethod::Heisenberg => {
            let (s, path) = heisenberg_complement_traced(&g, n.layer(1))?;
            (s, json!(path))
        }
        ComplementMethod::H21 => (h21_complement(&g, &n)?, json!("h21")),
    };
    ctx.print(to_pretty(&json!({
        "method": detail,
        "witness_basis": basis_json(&witness),
        "witness": witness.describe(&g),
        "commutative": witness.is_commutative(&g),
        "horizontal": witness.is_horizontal(),
        "complementary": is_complementary(&g, &n, &witness),
    })));
    Ok(0)
}

pub fn quotient_cmd(ctx: &mut Context, file: &Path) -> CliResult<u8> {
    let (g, n) = subalgebra(ctx, file, false)?;
    let (q, pi) = quotient(&g, &n)?;
    let projection = MorphismFile::from_morphism(&pi, carnot::io::GroupRef::Name(g.name().into()), carnot::io::GroupRef::Name(q.name().into()));
    ctx.print(to_pretty(&json!({
        "quotient": GroupFile::from_algebra(&q, None)?,
        "projection_images": projection.images,
        "abelian": q.is_abelian(),
        "stratified": q.is_stratified(),
        "homogeneous_dimensions": {
            "group": g.homogeneous_dimension(),
            "ideal": n.homogeneous_dimension(),
            "quotient": q.homogeneous_dimension(),
        },
    })));
    Ok(0)
}
