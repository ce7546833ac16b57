use std::path::{Path, PathBuf};

use carnot::curves::{horizontal_lift, is_horizontal, pansu_convergence, HorizontalControl};
use carnot::empirical::{EmpiricalConstant, SupSearch};
use carnot::io::{read_control_csv, write_curve_csv, MorphismFile};
use carnot::metric::{self, ConjugationForm, HomogeneousMetric};
use carnot::pdiff::{
    bracket_rank, exact_differential, implicit_function, level_set_point, mean_value_ratio, rank_parametrization, tangent_cone_samples, tangent_dim_check,
    GridSpec, MviOptions, NewtonOptions, PDMap,
};
use carnot::scalar::{format_f64, parse_rational_vector};
use carnot::subgroups::{classify_epimorphism, EpiVerdict, GradedMorphism, SearchOptions};
use carnot::{GradedAlgebra, Rational};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::context::{to_pretty, CliError, CliResult, Context, EXIT_EXHAUSTED};

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum Kind {
    Lift,
    Pansu,
    Mvi,
    Implicit,
    Rank,
    Blowup,
    VerifyEstimates,
}

/// Built-in maps; user maps are h-homomorphisms given by a morphism file.
#[derive(Debug, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
enum MapSpec {
    PlanarRadiusH2 {},
    VerticalShearH1 {},
    CoordinateSwapH1 {},
    ContactShearH1 { e: f64 },
    CornerH1 {},
    PerturbedLegendrian { e: f64 },
    Identity { group: String, radius: f64 },
    Dilation { group: String, r: f64, radius: f64 },
    HHomomorphism { morphism: PathBuf, radius: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ControlSpec {
    Square {},
    Circle { radius: f64 },
    Parabola { len: f64 },
    Line { direction: Vec<f64>, len: f64 },
    /// CSV with a `t` column and one column per first-layer basis name.
    Samples { csv: PathBuf },
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn build_map(ctx: &mut Context, dir: &Path, spec: &MapSpec) -> CliResult<PDMap> {
    Ok(match spec {
        MapSpec::PlanarRadiusH2 {} => PDMap::planar_radius_h2(),
        MapSpec::VerticalShearH1 {} => PDMap::vertical_shear_h1(),
        MapSpec::CoordinateSwapH1 {} => PDMap::coordinate_swap_h1(),
        MapSpec::ContactShearH1 { e } => PDMap::contact_shear_h1(*e),
        MapSpec::CornerH1 {} => PDMap::corner_h1(),
        MapSpec::PerturbedLegendrian { e } => PDMap::perturbed_legendrian(*e),
        MapSpec::Identity { group, radius } => PDMap::identity(&ctx.algebra(group)?, *radius),
        MapSpec::Dilation { group, r, radius } => PDMap::dilation(&ctx.algebra(group)?, *r, *radius),
        MapSpec::HHomomorphism { morphism, radius } => {
            let mf: MorphismFile = ctx.read_json(&resolve(dir, morphism))?;
            let g = ctx.group_ref(&mf.domain)?;
            let m = ctx.group_ref(&mf.codomain)?;
            let images: Vec<Vec<Rational>> = mf.images.iter().map(|s| parse_rational_vector(s)).collect::<Result<_, _>>()?;
            PDMap::h_homomorphism(&GradedMorphism::from_images(g, m, &images)?, *radius)
        }
    })
}

fn build_control(ctx: &mut Context, dir: &Path, g: &GradedAlgebra, spec: &ControlSpec) -> CliResult<HorizontalControl> {
    let m = g.layer_dim(1);
    Ok(match spec {
        ControlSpec::Square {} => HorizontalControl::square(m),
        ControlSpec::Circle { radius } => HorizontalControl::circle(m, *radius),
        ControlSpec::Parabola { len } => HorizontalControl::parabola(m, *len),
        ControlSpec::Line { direction, len } => {
            if direction.len() != m {
                return Err(CliError::Validation(format!("line direction has {} entries, first layer has {m}", direction.len())));
            }
            HorizontalControl::line(direction.clone(), *len)
        }
        ControlSpec::Samples { csv } => {
            let text = ctx.read(&resolve(dir, csv))?;
            read_control_csv(text.as_bytes(), g)?
        }
    })
}

fn check_len(what: &str, v: &[f64], n: usize) -> CliResult<()> {
    if v.len() != n {
        return Err(CliError::Validation(format!("{what} has {} entries, expected {n}", v.len())));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftConfig {
    group: String,
    control: ControlSpec,
    start: Option<Vec<f64>>,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_lift_tol")]
    tol: f64,
    #[serde(default = "default_horizontality_tol")]
    horizontality_tol: f64,
}

fn default_steps() -> usize {
    1024
}
fn default_lift_tol() -> f64 {
    1e-12
}
fn default_horizontality_tol() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PansuConfig {
    group: String,
    control: ControlSpec,
    t: f64,
    hs: Vec<f64>,
    #[serde(default = "default_sub")]
    sub: usize,
}

fn default_sub() -> usize {
    32
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MviConfig {
    map: MapSpec,
    center: Vec<f64>,
    radius: Option<f64>,
    bins: Option<usize>,
    samples_per_bin: Option<usize>,
    check_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewtonConfig {
    tol: Option<f64>,
    max_iter: Option<usize>,
    fd_step: Option<f64>,
}

impl NewtonConfig {
    fn options(cfg: &Option<NewtonConfig>) -> NewtonOptions {
        let mut o = NewtonOptions::default();
        if let Some(c) = cfg {
            o.tol = c.tol.unwrap_or(o.tol);
            o.max_iter = c.max_iter.unwrap_or(o.max_iter);
            o.fd_step = c.fd_step.unwrap_or(o.fd_step);
        }
        o
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImplicitConfig {
    map: MapSpec,
    base: Vec<f64>,
    radius: f64,
    counts: Vec<usize>,
    #[serde(default)]
    restarts: usize,
    #[serde(default)]
    restart_radius: f64,
    newton: Option<NewtonConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankConfig {
    map: MapSpec,
    base: Vec<f64>,
    radius: f64,
    samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlowupConfig {
    map: MapSpec,
    base: Vec<f64>,
    scales: Vec<f64>,
    #[serde(default = "default_blowup_radius")]
    radius: f64,
    samples: usize,
}

fn default_blowup_radius() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatesConfig {
    group: String,
    metric: Option<HomogeneousMetric>,
    #[serde(default = "default_nu")]
    nu: f64,
    samples: usize,
}

fn default_nu() -> f64 {
    1.0
}

/// Where an experiment puts its tables and summary.
struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    fn csv(&self, ctx: &mut Context, name: &str, header: &[String], rows: &[Vec<f64>]) -> CliResult<Option<String>> {
        let Some(dir) = &self.out else { return Ok(None) };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r.iter().map(|v| format_f64(*v))).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
        let path = dir.join(name);
        ctx.write(&path, &bytes)?;
        Ok(Some(path.display().to_string()))
    }

    fn summary(&self, ctx: &mut Context, v: &Value) -> CliResult<()> {
        let text = to_pretty(v);
        match &self.out {
            Some(dir) => ctx.write(&dir.join("summary.json"), text.as_bytes()),
            None => {
                ctx.print(text);
                Ok(())
            }
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Validation(e.to_string())
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

pub fn run(ctx: &mut Context, kind: Kind, config: &Path, out: Option<PathBuf>) -> CliResult<u8> {
    let dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let sink = Sink { out };
    match kind {
        Kind::Lift => {
            let c = ctx_json(ctx, config)?;
            lift(ctx, &dir, c, &sink)
        },
        Kind::Pansu => {
            let c = ctx_json(ctx, config)?;
            pansu(ctx, &dir, c, &sink)
        },
        Kind::Mvi => {
            let c = ctx_json(ctx, config)?;
            mvi(ctx, &dir, c, &sink)
        },
        Kind::Implicit => {
            let c = ctx_json(ctx, config)?;
            implicit(ctx, &dir, c, &sink)
        },
        Kind::Rank => {
            let c = ctx_json(ctx, config)?;
            rank(ctx, &dir, c, &sink)
        },
        Kind::Blowup => {
            let c = ctx_json(ctx, config)?;
            blowup(ctx, &dir, c, &sink)
        },
        Kind::VerifyEstimates => {
            let c = ctx_json(ctx, config)?;
            estimates(ctx, c, &sink)
        }
    }
}

fn ctx_json<T: serde::de::DeserializeOwned>(ctx: &mut Context, path: &Path) -> CliResult<T> {
    ctx.read_json(path)
}

fn lift(ctx: &mut Context, dir: &Path, c: LiftConfig, sink: &Sink) -> CliResult<u8> {
    let g = ctx.algebra(&c.group)?;
    let control = build_control(ctx, dir, &g, &c.control)?;
    let start = c.start.unwrap_or_else(|| g.zero());
    check_len("start", &start, g.dim())?;
    let lift = horizontal_lift(&g, &control, &start, c.steps, c.tol)?;
    let hor = is_horizontal(&g, &lift.curve, c.horizontality_tol)?;
    let csv = match &sink.out {
        Some(d) => {
            let mut buf = Vec::new();
            write_curve_csv(&mut buf, &g, &lift.curve)?;
            let path = d.join("lift.csv");
            ctx.write(&path, &buf)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let end = lift.curve.last().to_vec();
    let increment: Vec<f64> = end.iter().zip(&start).map(|(a, b)| a - b).collect();
    sink.summary(
        ctx,
        &json!({
            "experiment": "lift",
            "group": g.name(),
            "control": control.name,
            "steps": c.steps,
            "substeps": lift.substeps,
            "error_estimate": lift.error_estimate,
            "start": start,
            "end": end,
            "coordinate_increment": increment,
            "horizontality": hor,
            "curve_csv": csv,
        }),
    )?;
    if !hor.passed {
        return Err(CliError::Solver(format!("lift is not horizontal: residual {:e} at t = {}", hor.max_residual, hor.worst_time)));
    }
    Ok(0)
}

fn pansu(ctx: &mut Context, dir: &Path, c: PansuConfig, sink: &Sink) -> CliResult<u8> {
    let g = ctx.algebra(&c.group)?;
    let control = build_control(ctx, dir, &g, &c.control)?;
    let conv = pansu_convergence(&g, &control, c.t, &c.hs, c.sub)?;
    let rows: Vec<Vec<f64>> = conv.hs.iter().zip(&conv.norms).map(|(h, n)| vec![*h, *n]).collect();
    let csv = sink.csv(ctx, "pansu.csv", &["h".into(), "quotient_norm".into()], &rows)?;
    sink.summary(ctx, &json!({ "experiment": "pansu", "group": g.name(), "control": control.name, "report": conv, "csv": csv }))?;
    Ok(0)
}

fn mvi(ctx: &mut Context, dir: &Path, c: MviConfig, sink: &Sink) -> CliResult<u8> {
    let f = build_map(ctx, dir, &c.map)?;
    check_len("center", &c.center, f.domain.dim())?;
    let d = MviOptions::default();
    let opts = MviOptions {
        radius: c.radius.unwrap_or(d.radius),
        bins: c.bins.unwrap_or(d.bins),
        samples_per_bin: c.samples_per_bin.unwrap_or(d.samples_per_bin),
        seed: ctx.seed,
        check_samples: c.check_samples.unwrap_or(d.check_samples),
    };
    let r = mean_value_ratio(&f, &c.center, &opts)?;
    let rows: Vec<Vec<f64>> = r.bins.iter().map(|b| vec![b.lo, b.hi, b.sup, b.samples as f64]).collect();
    let csv = sink.csv(ctx, "bins.csv", &["lo".into(), "hi".into(), "sup".into(), "samples".into()], &rows)?;
    sink.summary(ctx, &json!({ "experiment": "mvi", "map": f.name, "report": r, "csv": csv }))?;
    Ok(0)
}

fn implicit(ctx: &mut Context, dir: &Path, c: ImplicitConfig, sink: &Sink) -> CliResult<u8> {
    let f = build_map(ctx, dir, &c.map)?;
    check_len("base", &c.base, f.domain.dim())?;
    let grid = GridSpec {
        radius: c.radius,
        counts: c.counts.clone(),
        restarts: c.restarts,
        restart_radius: c.restart_radius,
        seed: ctx.seed,
    };
    let s = implicit_function(&f, &c.base, &grid, &NewtonConfig::options(&c.newton))?;
    // kernel coordinates, then n and phi(n) as group elements
    let (kn, n) = (s.kernel.len(), f.domain.dim());
    let mut header = names("n", kn);
    header.extend(names("x", n));
    header.extend(names("phi", n));
    header.push("residual".into());
    let rows: Vec<Vec<f64>> = (0..s.nodes.len())
        .map(|i| {
            let mut r = s.nodes[i].clone();
            r.extend(&s.node_points[i]);
            r.extend(&s.values[i]);
            r.push(s.residuals[i]);
            r
        })
        .collect();
    let csv = sink.csv(ctx, "grid.csv", &header, &rows)?;
    sink.summary(
        ctx,
        &json!({
            "experiment": "implicit",
            "map": f.name,
            "base": s.base,
            "kernel": s.kernel_description,
            "complement": s.complement_description,
            "differential": s.source,
            "nodes": s.nodes.len(),
            "max_residual": s.max_residual,
            "restart_agreement": s.restart_agreement,
            "restart_failures": s.restart_failures,
            "kappa": s.kappa,
            "holder_constant": s.holder_constant,
            "pairs": s.pairs,
            "csv": csv,
        }),
    )?;
    Ok(0)
}

fn rank(ctx: &mut Context, dir: &Path, c: RankConfig, sink: &Sink) -> CliResult<u8> {
    let f = build_map(ctx, dir, &c.map)?;
    check_len("base", &c.base, f.domain.dim())?;
    let r = rank_parametrization(&f, &c.base, c.radius, c.samples, ctx.seed)?;
    let (np, nh, nphi) = (
        r.parameters.first().map_or(0, Vec::len),
        r.h.first().map_or(0, Vec::len),
        r.phi.first().map_or(0, Vec::len),
    );
    let mut header = names("p", np);
    header.extend(names("h", nh));
    header.extend(names("phi", nphi));
    let rows: Vec<Vec<f64>> = (0..r.parameters.len())
        .map(|i| r.parameters[i].iter().chain(&r.h[i]).chain(&r.phi[i]).copied().collect())
        .collect();
    let csv = sink.csv(ctx, "parametrization.csv", &header, &rows)?;
    sink.summary(
        ctx,
        &json!({
            "experiment": "rank",
            "map": f.name,
            "base": r.base,
            "image": r.image_description,
            "complement": r.complement_description,
            "samples": r.parameters.len(),
            "inverse_residual": r.inverse_residual,
            "complement_residual": r.complement_residual,
            "lipschitz_ratio": r.lipschitz_ratio,
            "csv": csv,
        }),
    )?;
    Ok(0)
}

fn blowup(ctx: &mut Context, dir: &Path, c: BlowupConfig, sink: &Sink) -> CliResult<u8> {
    let f = build_map(ctx, dir, &c.map)?;
    check_len("base", &c.base, f.domain.dim())?;
    let g = f.domain.clone();
    let (l, source) = exact_differential(&f, &c.base)?;
    let ker = l.kernel_subalgebra()?;
    let opts = SearchOptions {
        seed: ctx.seed,
        ..SearchOptions::default()
    };
    let cls = classify_epimorphism(&l, &opts)?;
    let Some(w) = cls.witness else {
        let msg = format!("differential at the base point is {}: no complement of its kernel", cls.verdict);
        if cls.verdict == EpiVerdict::Undecided {
            eprintln!("{msg}");
            return Ok(EXIT_EXHAUSTED);
        }
        return Err(CliError::Solver(msg));
    };
    let comp: Vec<Vec<f64>> = w.basis().iter().map(|v| g.to_float(v)).collect();
    let set_point = |n: &[f64]| level_set_point(&f, &c.base, &comp, n);
    let rep = tangent_cone_samples(&g, &c.base, &ker, &set_point, &c.scales, c.radius, c.samples, ctx.seed)?;
    let rows: Vec<Vec<f64>> = (0..rep.scales.len())
        .map(|i| vec![rep.scales[i], rep.distances[i], rep.set_points[i] as f64])
        .collect();
    let csv = sink.csv(ctx, "blowup.csv", &["scale".into(), "distance".into(), "set_points".into()], &rows)?;
    let dims = tangent_dim_check(&g, l.codomain(), &ker);
    sink.summary(
        ctx,
        &json!({
            "experiment": "blowup",
            "map": f.name,
            "base": c.base,
            "differential": source,
            "tangent_cone": ker.describe(&g),
            "complement": w.describe(&g),
            "bracket_rank": bracket_rank(&g, &ker),
            "commutative": ker.is_commutative(&g),
            "homogeneous_dimensions": dims,
            "report": rep,
            "csv": csv,
        }),
    )?;
    Ok(0)
}

fn estimates(ctx: &mut Context, c: EstimatesConfig, sink: &Sink) -> CliResult<u8> {
    let (g, file_metric) = ctx.group(&c.group)?;
    let m = c.metric.or(file_metric).unwrap_or_else(|| HomogeneousMetric::default_for(&g));
    m.check(&g)?;
    let nu = c.nu;
    let runs: Vec<Box<dyn Fn(SupSearch) -> EmpiricalConstant + '_>> = vec![
        Box::new(|s| metric::first_layer_constant(&g, &m, nu, s)),
        Box::new(|s| metric::verify_projection_estimate(&g, &m, 1, nu, s)),
        Box::new(|s| metric::verify_projection_estimate(&g, &m, g.step(), nu, s)),
        Box::new(|s| metric::verify_norm_power_estimate(&g, &m, nu, s)),
        Box::new(|s| metric::verify_left_inverse_estimate(&g, nu, s)),
        Box::new(|s| metric::verify_conjugation_estimate(&g, &m, nu, ConjugationForm::LogNorm, s)),
        Box::new(|s| metric::verify_conjugation_estimate(&g, &m, nu, ConjugationForm::Gauge, s)),
        Box::new(|s| metric::verify_product_estimate(&g, &m, nu, 2, s)),
        Box::new(|s| metric::quasi_triangle_constant(&g, &m, nu, s)),
    ];
    let mut table = Vec::new();
    let mut rows = Vec::new();
    for run in runs {
        let a = run(SupSearch::new(c.samples, ctx.seed));
        let b = run(SupSearch::new(2 * c.samples, ctx.seed));
        let drift = a.drift(&b);
        rows.push(vec![a.sup_observed, b.sup_observed, drift]);
        table.push(json!({ "label": a.label, "sup": a.sup_observed, "sup_doubled": b.sup_observed, "drift": drift, "finite": a.is_finite() && b.is_finite() }));
    }
    let labels: Vec<String> = table.iter().map(|t| t["label"].as_str().unwrap_or_default().to_string()).collect();
    let csv = match &sink.out {
        Some(d) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["label", "sup", "sup_doubled", "drift"]).map_err(csv_err)?;
            for (l, r) in labels.iter().zip(&rows) {
                let mut rec = vec![l.clone()];
                rec.extend(r.iter().map(|v| format_f64(*v)));
                w.write_record(&rec).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
            let path = d.join("estimates.csv");
            ctx.write(&path, &bytes)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    sink.summary(
        ctx,
        &json!({ "experiment": "verify-estimates", "group": g.name(), "metric": m, "nu": nu, "samples": c.samples, "constants": table, "csv": csv }),
    )?;
    Ok(0)
}
