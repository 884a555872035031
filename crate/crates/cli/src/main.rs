#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod expr;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use output::{write_run, Format, RunContext};

#[derive(Debug, Parser)]
#[command(
    name = "lifs",
    version,
    about = "Local IFS fractal functions: solvers, fits and exports"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Grid size N_g (command-specific default).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Fixed-point stopping tolerance on the sup-norm residual.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long = "max-iter", global = true, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attractor of the two-map planar local IFS, or of its global version.
    Attractor(commands::AttractorArgs),
    /// Fixed point of a random constant-coefficient spec.
    RandomFractal(commands::RandomArgs),
    /// Fractal interpolant of a target through the domain knots.
    Interpolate(commands::InterpolateArgs),
    /// Hermite fractal interpolant and its error curve.
    Hermite(commands::HermiteArgs),
    /// Convergence order of an interpolant family under refinement.
    OrderStudy(commands::OrderStudyArgs),
    /// Jets of a polynomial on a uniform grid.
    Polyjet(commands::PolyjetArgs),
    /// Jets regenerated by the two-map polynomial IFS at dyadic points.
    PolyIfs(commands::PolyIfsArgs),
    /// Collage fit of a demo problem.
    CollageFit(commands::CollageArgs),
    /// Shift closure of dyadic seed points and optional jet evaluation on it.
    Srgrid(commands::SrgridArgs),
    /// Binary subdivision of a two-map affine spec.
    Subdivide(commands::SubdivideArgs),
    /// Rank-2 matrix-product evaluation of a two-map fractal function.
    Qtt(commands::QttArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Attractor(_) => "attractor",
            Command::RandomFractal(_) => "random-fractal",
            Command::Interpolate(_) => "interpolate",
            Command::Hermite(_) => "hermite",
            Command::OrderStudy(_) => "order-study",
            Command::Polyjet(_) => "polyjet",
            Command::PolyIfs(_) => "poly-ifs",
            Command::CollageFit(_) => "collage-fit",
            Command::Srgrid(_) => "srgrid",
            Command::Subdivide(_) => "subdivide",
            Command::Qtt(_) => "qtt",
        }
    }
}

fn single_line(s: &str) -> String {
    s.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("invalid arguments")
        .to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", single_line(&e.to_string()));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if commands::is_numerical(&e) { 2 } else { 1 };
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::invalid(format!("cannot configure {n} threads: {e}")))?;
    }
    if !(g.tol > 0.0) {
        return Err(commands::invalid(format!(
            "--tol must be positive, got {}",
            g.tol
        )));
    }
    let (params, run) = commands::dispatch(&cli.command, g)?;
    let mut all: Map<String, Value> = params;
    if let Some(n) = g.grid {
        all.insert("grid".into(), n.into());
    }
    let ctx = RunContext {
        command: cli.command.name(),
        params: all,
        seed: g.seed,
        tol: g.tol,
        max_iter: g.max_iter,
        out: &g.out,
        format: g.format,
    };
    let files = write_run(&ctx, &run)?;
    for (k, v) in &run.summary {
        println!("{k} = {v}");
    }
    for f in files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}
