//! `carnot`: command line access to group files, the group law, subgroup
//! classification and the curve and differentiability experiments.

mod commands;
mod context;
mod experiment;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use carnot::subgroups::SearchOptions;
use clap::{Args, Parser, Subcommand};

use crate::context::{to_pretty, CliResult, Context};

#[derive(Parser)]
#[command(name = "carnot", version, about = "Exact and numerical computation on Carnot groups")]
struct Cli {
    /// Seed of every sampled computation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory searched for `<name>.json` group files before the built-in catalog.
    #[arg(long, global = true, env = "CARNOT_CATALOG_DIR")]
    catalog_dir: Option<PathBuf>,
    /// Write a run manifest (inputs, seed, version, output hashes) to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group definition files.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Built-in groups.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Exact group law computations on rational vectors such as `1,-1/2,0`.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Complements, quotients and h-epi/mono classification.
    #[command(subcommand)]
    Subgroups(SubgroupsCmd),
    /// Numerical experiments driven by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Check a group file and list every problem found.
    Validate { file: PathBuf },
    /// Print the canonical form of a group file or catalog group.
    Emit {
        #[arg(required_unless_present = "catalog")]
        group: Option<String>,
        #[arg(long, conflicts_with = "group")]
        catalog: Option<String>,
    },
    /// Dimensions, step, homogeneous dimension and stratification.
    Info { group: String },
}

#[derive(Subcommand)]
enum CatalogCmd {
    List,
    Emit { name: String },
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// `x o y` in exponential coordinates.
    Product {
        group: String,
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
    },
    /// Homogeneous term `c_n(x, y)` of the group law.
    Term {
        group: String,
        n: usize,
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
    },
    /// Coefficients of `c_n` in right-nested brackets of words over {1, 2}.
    Decompose { group: String, n: usize },
    /// Cross-check the product against the truncated series on random pairs.
    Oracle {
        group: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Random trials before the search gives up.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// S-pair budget of the nonexistence certificate.
    #[arg(long, default_value_t = 2_000)]
    groebner_pairs: usize,
}

#[derive(Subcommand)]
enum SubgroupsCmd {
    /// Verdict for a surjective h-homomorphism given by a morphism file.
    ClassifyEpi {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Verdict for an injective h-homomorphism given by a morphism file.
    ClassifyMono {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Complement of the subalgebra in a subalgebra file.
    Complement {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "ideal")]
        method: commands::ComplementMethod,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Quotient by the ideal in a subalgebra file.
    Quotient { file: PathBuf },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: experiment::Kind,
    config: PathBuf,
    /// Directory for CSV tables, `summary.json` and `manifest.json`.
    /// Without it the summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn search(ctx: &Context, a: &SearchArgs) -> SearchOptions {
    SearchOptions {
        budget: a.budget,
        seed: ctx.seed,
        groebner_pairs: a.groebner_pairs,
    }
}

fn dispatch(ctx: &mut Context, command: Command) -> CliResult<u8> {
    match command {
        Command::Group(GroupCmd::Validate { file }) => commands::group_validate(ctx, &file),
        Command::Group(GroupCmd::Emit { group, catalog }) => match catalog {
            Some(name) => {
                let g = carnot::catalog::by_name(&name).ok_or_else(|| context::CliError::Validation(format!("no catalog group `{name}`")))?;
                ctx.print(carnot::io::emit_group(&g, None)?);
                Ok(0)
            }
            None => commands::group_emit(ctx, group.as_deref().expect("required by clap")),
        },
        Command::Group(GroupCmd::Info { group }) => commands::group_info(ctx, &group),
        Command::Catalog(CatalogCmd::List) => commands::catalog_list(ctx),
        Command::Catalog(CatalogCmd::Emit { name }) => commands::group_emit(ctx, &name),
        Command::Algebra(AlgebraCmd::Product { group, x, y }) => commands::algebra_product(ctx, &group, &x, &y),
        Command::Algebra(AlgebraCmd::Term { group, n, x, y }) => commands::algebra_term(ctx, &group, n, &x, &y),
        Command::Algebra(AlgebraCmd::Decompose { group, n }) => commands::algebra_decompose(ctx, &group, n),
        Command::Algebra(AlgebraCmd::Oracle { group, trials }) => commands::algebra_oracle(ctx, &group, trials),
        Command::Subgroups(SubgroupsCmd::ClassifyEpi { file, search: s }) => {
            let o = search(ctx, &s);
            commands::classify_epi(ctx, &file, &o)
        }
        Command::Subgroups(SubgroupsCmd::ClassifyMono { file, search: s }) => {
            let o = search(ctx, &s);
            commands::classify_mono(ctx, &file, &o)
        }
        Command::Subgroups(SubgroupsCmd::Complement { file, method, search: s }) => {
            let o = search(ctx, &s);
            commands::complement(ctx, &file, method, &o)
        }
        Command::Subgroups(SubgroupsCmd::Quotient { file }) => commands::quotient_cmd(ctx, &file),
        Command::Experiment(ExperimentArgs { kind, config, out }) => {
            let code = experiment::run(ctx, kind, &config, out.clone())?;
            if let Some(dir) = out {
                let m = ctx.manifest(std::env::args().skip(1).collect());
                std::fs::write(dir.join("manifest.json"), to_pretty(&m))
                    .map_err(|e| context::CliError::Validation(format!("cannot write manifest: {e}")))?;
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut ctx = Context::new(cli.seed, cli.threads, cli.catalog_dir);
    let result = dispatch(&mut ctx, cli.command);
    if let Some(path) = &cli.manifest {
        let m = ctx.manifest(std::env::args().skip(1).collect());
        if let Err(e) = std::fs::write(path, to_pretty(&m)) {
            eprintln!("error: cannot write manifest {}: {e}", path.display());
        }
    }
    let out = ctx.take_stdout();
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
