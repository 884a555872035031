//! One function per subcommand; each returns its parameters and outputs.

use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use lifs::collage::{fit_report, l2_demo, poisson_demo, CollageError};
use lifs::interp::{
    build_endpoint_interpolant, build_hermite_with_scaling, build_random_spec, estimate_order,
    maps_for_width, solve_on_uniform, InterpError, InterpolationProblem, HERMITE_SCALING,
};
use lifs::local_ifs::{
    iterate_attractor, Affine2D, AttractorOptions, LocalIFS1D, LocalMap2D, Rect,
};
use lifs::polyjet::{
    jet_at, monomial_to_scaled, poly_ifs_reconstruct, two_map_ifs, JetVector, PolyJetError,
};
use lifs::qtt::{build_qtt, QttError};
use lifs::rb::{assemble, solve_fixed_point, sup_distance, Grid, RBSpec, RbError, SolveOptions};
use lifs::srgrid::{close_grid, DigitEvaluator, DyadicPoint};
use lifs::subdiv::{
    cauchy_differences, random_compatible_spec, AffineRules, Compatibility, SubdivError,
};

use crate::expr::Expr;
use crate::output::{Cell, RunOutput, Table};
use crate::{Command, Global};

/// A validation failure raised by the front end itself.
pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(msg.into())
}

fn rb_numerical(e: &RbError) -> bool {
    matches!(
        e,
        RbError::NotContractive(_) | RbError::MaxIterExceeded(_) | RbError::Singular
    )
}

/// Whether an error comes from a numerical failure rather than bad input.
pub fn is_numerical(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        if let Some(e) = e.downcast_ref::<RbError>() {
            return rb_numerical(e);
        }
        if let Some(e) = e.downcast_ref::<InterpError>() {
            return match e {
                InterpError::Rb(r) => rb_numerical(r),
                InterpError::ContractivityViolated { .. }
                | InterpError::SingularConditions(_)
                | InterpError::DegenerateFit => true,
                _ => false,
            };
        }
        if let Some(e) = e.downcast_ref::<CollageError>() {
            return match e {
                CollageError::Rb(r) => rb_numerical(r),
                CollageError::GammaNotLessThanOne { .. }
                | CollageError::MaxIterExceeded { .. }
                | CollageError::NotInFamily { .. }
                | CollageError::SingularNormalEquations => true,
                _ => false,
            };
        }
        if let Some(e) = e.downcast_ref::<QttError>() {
            return match e {
                QttError::Rb(r) => rb_numerical(r),
                QttError::NotContractive(_) => true,
                _ => false,
            };
        }
        if let Some(e) = e.downcast_ref::<SubdivError>() {
            return match e {
                SubdivError::Rb(r) => rb_numerical(r),
                SubdivError::NotContractive(_) | SubdivError::SeedDiverged => true,
                _ => false,
            };
        }
        if let Some(e) = e.downcast_ref::<PolyJetError>() {
            return matches!(e, PolyJetError::DegenerateHankel);
        }
        false
    })
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("--{name}: '{}' is not a number", t.trim())))
        })
        .collect()
}

fn parse_pair(name: &str, s: &str) -> Result<[f64; 2]> {
    let v = parse_list(name, s)?;
    <[f64; 2]>::try_from(v.as_slice()).map_err(|_| {
        invalid(format!(
            "--{name} needs exactly two values, got {}",
            v.len()
        ))
    })
}

fn parse_target(s: &str) -> Result<Expr> {
    Expr::parse(s).with_context(|| format!("invalid --target '{s}'"))
}

fn solve_opts(g: &Global) -> SolveOptions {
    SolveOptions {
        tol: g.tol,
        max_iter: g.max_iter,
        ..Default::default()
    }
}

fn jet_header(m: usize) -> Vec<String> {
    std::iter::once("x".to_string())
        .chain((0..=m).map(|k| format!("f{k}")))
        .collect()
}

fn jet_row(x: f64, j: &JetVector, m: usize) -> Vec<Cell> {
    std::iter::once(Cell::Num(x))
        .chain((0..=m).map(|k| Cell::Num(j.values().get(k).copied().unwrap_or(0.0))))
        .collect()
}

fn table_with_header(name: &str, header: Vec<String>) -> Table {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    Table::new(name, &h)
}

type Outcome = Result<(Map<String, Value>, RunOutput)>;

fn params(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

pub fn dispatch(cmd: &Command, g: &Global) -> Outcome {
    match cmd {
        Command::Attractor(a) => attractor(a, g),
        Command::RandomFractal(a) => random_fractal(a, g),
        Command::Interpolate(a) => interpolate(a, g),
        Command::Hermite(a) => hermite(a, g),
        Command::OrderStudy(a) => order_study(a, g),
        Command::Polyjet(a) => polyjet(a, g),
        Command::PolyIfs(a) => poly_ifs(a, g),
        Command::CollageFit(a) => collage(a, g),
        Command::Srgrid(a) => srgrid(a, g),
        Command::Subdivide(a) => subdivide(a, g),
        Command::Qtt(a) => qtt(a, g),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttractorMode {
    Local,
    Global,
}

#[derive(Debug, Args)]
pub struct AttractorArgs {
    #[arg(long, value_enum, default_value_t = AttractorMode::Local)]
    mode: AttractorMode,
    /// Corner of the first domain `[0, x1]²`.
    #[arg(long, default_value_t = 0.8)]
    x1: f64,
    /// Corner of the second domain `[x2, 1]²` and fixed point of the second map.
    #[arg(long, default_value_t = 0.4)]
    x2: f64,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Snap pitch.
    #[arg(long, default_value_t = 1e-3)]
    pitch: f64,
    /// Start samples per side.
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

fn attractor(a: &AttractorArgs, g: &Global) -> Outcome {
    if !(0.0..1.0).contains(&a.s) {
        return Err(invalid(format!("--s must lie in [0,1), got {}", a.s)));
    }
    if !(0.0 < a.x2 && a.x2 < a.x1 && a.x1 <= 1.0) {
        return Err(invalid("need 0 < x2 < x1 <= 1"));
    }
    if !(a.pitch > 0.0) || a.samples < 2 {
        return Err(invalid("--pitch must be positive and --samples at least 2"));
    }
    let dom = |r: Rect| match a.mode {
        AttractorMode::Local => r,
        AttractorMode::Global => Rect::unit(),
    };
    let maps = vec![
        LocalMap2D::new(
            dom(Rect::new(0.0, a.x1, 0.0, a.x1)),
            Affine2D::scaling(a.s, (0.0, 0.0)),
        ),
        LocalMap2D::new(
            dom(Rect::new(a.x2, 1.0, a.x2, 1.0)),
            Affine2D::scaling(a.s, (a.x2, a.x2)),
        ),
    ];
    let opts = AttractorOptions {
        pitch: a.pitch,
        samples: a.samples,
        max_iter: g.max_iter,
        tol: 0.5 * a.pitch,
    };
    let r = iterate_attractor(&maps, &Rect::unit(), &opts);
    let mut t = Table::new("attractor", &["x", "y"]).solved(opts.tol, r.iterations);
    for &(x, y) in r.set.points() {
        t.push([x, y]);
    }
    let mut out = RunOutput::default();
    out.residual("last_step", r.last_step);
    out.note("points", r.set.len());
    out.note("iterations", r.iterations);
    out.note("outcome", serde_json::to_value(r.outcome)?);
    out.tables.push(t);
    let mode = match a.mode {
        AttractorMode::Local => "local",
        AttractorMode::Global => "global",
    };
    let p = json!({"mode": mode, "x1": a.x1, "x2": a.x2, "s": a.s, "pitch": a.pitch, "samples": a.samples});
    Ok((params(p), out))
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    /// Number of maps (even).
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Scalings are drawn from `(−b, b)`.
    #[arg(long = "s-bound", default_value_t = 0.9)]
    s_bound: f64,
}

fn fixed_point_table(
    name: &str,
    spec: &RBSpec,
    n_g: usize,
    g: &Global,
    out: &mut RunOutput,
) -> Result<Vec<f64>> {
    let (grid, rep) = solve_on_uniform(spec, n_g, &solve_opts(g))?;
    let mut t = Table::new(name, &["x", "value"]).solved(g.tol, rep.iters);
    for (&x, &v) in grid.points().iter().zip(&rep.values) {
        t.push([x, v]);
    }
    out.tables.push(t);
    out.residual("fixed_point", rep.residual);
    out.note("iterations", rep.iters);
    Ok(rep.values)
}

fn random_fractal(a: &RandomArgs, g: &Global) -> Outcome {
    let n_g = g.grid.unwrap_or(1024);
    let spec = build_random_spec(a.n, g.seed, a.s_bound)?;
    let mut out = RunOutput::default();
    fixed_point_table("random_fractal", &spec, n_g, g, &mut out)?;
    out.documents
        .push(("spec".into(), serde_json::to_value(&spec)?));
    Ok((params(json!({"n": a.n, "s_bound": a.s_bound})), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpModeArg {
    /// `S_{2j} = 1 − S_{2j−1}`.
    Continuous,
    /// Independent scalings.
    Endpoint,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Use this scaling for every map instead of seeded random ones.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_enum, default_value_t = InterpModeArg::Continuous)]
    mode: InterpModeArg,
}

fn interpolate(a: &InterpolateArgs, g: &Global) -> Outcome {
    let n_g = g.grid.unwrap_or(1024);
    let e = parse_target(&a.target)?;
    let f = e.clone();
    let target: lifs::interp::Target = Arc::new(move |x| f.eval(x));
    if a.n < 2 || !a.n.is_multiple_of(2) {
        return Err(invalid(format!(
            "--n must be even and at least 2, got {}",
            a.n
        )));
    }
    let half = a.n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(0.1..0.9)).collect() };
    let p = match (a.s, a.mode) {
        (Some(s), _) => InterpolationProblem::uniform(target.clone(), a.n, s)?,
        (None, InterpModeArg::Continuous) => {
            InterpolationProblem::continuous(target.clone(), a.n, draw(half))?
        }
        (None, InterpModeArg::Endpoint) => {
            let s_odd = draw(half);
            InterpolationProblem::endpoint(target.clone(), a.n, s_odd, draw(half))?
        }
    };
    let spec = build_endpoint_interpolant(&p)?;
    let mut out = RunOutput::default();
    let (grid, rep) = solve_on_uniform(&spec, n_g, &solve_opts(g))?;
    let mut t =
        Table::new("interpolate", &["x", "value", "target", "error"]).solved(g.tol, rep.iters);
    let mut max_err: f64 = 0.0;
    for (&x, &v) in grid.points().iter().zip(&rep.values) {
        let y = e.eval(x);
        max_err = max_err.max((v - y).abs());
        t.push([x, v, y, v - y]);
    }
    let knot_err = p
        .knots()
        .iter()
        .filter_map(|&x| grid.index_of(x).map(|k| (rep.values[k] - e.eval(x)).abs()))
        .fold(0.0, f64::max);
    out.tables.push(t);
    out.residual("fixed_point", rep.residual);
    out.residual("knot_error", knot_err);
    out.note("iterations", rep.iters);
    out.note("max_error", max_err);
    out.note("s_odd", p.s_odd.clone());
    out.note("s_even", p.s_even.clone());
    let mode = match a.mode {
        InterpModeArg::Continuous => "continuous",
        InterpModeArg::Endpoint => "endpoint",
    };
    Ok((
        params(json!({"target": a.target, "n": a.n, "s": a.s, "mode": mode})),
        out,
    ))
}

#[derive(Debug, Args)]
pub struct HermiteArgs {
    #[arg(long)]
    target: String,
    /// Derivative of the target (default: symbolic).
    #[arg(long)]
    derivative: Option<String>,
    /// Coarsest number of maps.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of halvings of the domain width.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = HERMITE_SCALING)]
    s: f64,
}

fn widths(n: usize, levels: usize) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid(format!("--n must be even and at least 2, got {n}")));
    }
    if !(3..=12).contains(&levels) {
        return Err(invalid(format!(
            "--levels must lie in 3..=12, got {levels}"
        )));
    }
    Ok((0..levels).map(|k| 2.0 / (n << k) as f64).collect())
}

fn order_table(name: &str, fit: &lifs::interp::OrderFit, out: &mut RunOutput) {
    let mut t = Table::new(name, &["n_maps", "h", "max_error"]);
    t.tol = Some(SolveOptions::default().tol);
    for (&h, &e) in fit.h.iter().zip(&fit.errors) {
        t.push([maps_for_width(h) as f64, h, e]);
    }
    out.tables.push(t);
    out.note("order", fit.order);
}

fn hermite(a: &HermiteArgs, g: &Global) -> Outcome {
    let e = parse_target(&a.target)?;
    let d = match &a.derivative {
        Some(s) => Expr::parse(s).with_context(|| format!("invalid --derivative '{s}'"))?,
        None => e.derivative(),
    };
    let h_list = widths(a.n, a.levels)?;
    let f = |x: f64| e.eval(x);
    let df = |x: f64| d.eval(x);
    let builder = |h: f64| build_hermite_with_scaling(&f, &df, maps_for_width(h), a.s);
    let fit = estimate_order(&builder, &f, &h_list)?;
    let mut out = RunOutput::default();
    order_table("hermite", &fit, &mut out);
    let n_g = g.grid.unwrap_or(1024);
    let spec = build_hermite_with_scaling(&f, &df, a.n, a.s)?;
    let (grid, rep) = solve_on_uniform(&spec, n_g, &solve_opts(g))?;
    let mut t = Table::new("hermite_values", &["x", "value", "target"]).solved(g.tol, rep.iters);
    for (&x, &v) in grid.points().iter().zip(&rep.values) {
        t.push([x, v, e.eval(x)]);
    }
    out.tables.push(t);
    out.residual("fixed_point", rep.residual);
    out.note("derivative", d.to_string());
    let p = json!({"target": a.target, "derivative": a.derivative, "n": a.n, "levels": a.levels, "s": a.s});
    Ok((params(p), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Construction {
    /// Knot interpolant with constant scaling.
    Endpoint,
    /// Hermite interpolant with constant scaling.
    Hermite,
}

#[derive(Debug, Args)]
pub struct OrderStudyArgs {
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = Construction::Hermite)]
    construction: Construction,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Scaling (default 0.5 for endpoint, 0.25 for Hermite).
    #[arg(long)]
    s: Option<f64>,
}

fn order_study(a: &OrderStudyArgs, _g: &Global) -> Outcome {
    let e = parse_target(&a.target)?;
    let d = e.derivative();
    let h_list = widths(a.n, a.levels)?;
    let f = |x: f64| e.eval(x);
    let df = |x: f64| d.eval(x);
    let (name, s) = match a.construction {
        Construction::Endpoint => ("endpoint", a.s.unwrap_or(0.5)),
        Construction::Hermite => ("hermite", a.s.unwrap_or(HERMITE_SCALING)),
    };
    let target: lifs::interp::Target = {
        let e = e.clone();
        Arc::new(move |x| e.eval(x))
    };
    let fit = match a.construction {
        Construction::Endpoint => {
            let builder = |h: f64| {
                let p = InterpolationProblem::uniform(target.clone(), maps_for_width(h), s)?;
                build_endpoint_interpolant(&p)
            };
            estimate_order(&builder, &f, &h_list)?
        }
        Construction::Hermite => {
            let builder = |h: f64| build_hermite_with_scaling(&f, &df, maps_for_width(h), s);
            estimate_order(&builder, &f, &h_list)?
        }
    };
    let mut out = RunOutput::default();
    order_table("order_study", &fit, &mut out);
    let p = json!({"target": a.target, "construction": name, "n": a.n, "levels": a.levels, "s": s});
    Ok((params(p), out))
}

#[derive(Debug, Args)]
pub struct PolyjetArgs {
    /// Monomial coefficients `c_0,…,c_M` of `Σ c_k x^k`.
    #[arg(long)]
    coeffs: String,
}

fn polyjet(a: &PolyjetArgs, g: &Global) -> Outcome {
    let n_g = g.grid.unwrap_or(16);
    if n_g == 0 {
        return Err(invalid("--grid must be positive"));
    }
    let scaled = monomial_to_scaled(&parse_list("coeffs", &a.coeffs)?);
    let m = scaled.len() - 1;
    let mut t = table_with_header("polyjet", jet_header(m));
    for x in Grid::uniform(n_g).points() {
        t.push(jet_row(*x, &jet_at(&scaled, *x)?, m));
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    out.note("degree", m);
    Ok((params(json!({"coeffs": a.coeffs})), out))
}

#[derive(Debug, Args)]
pub struct PolyIfsArgs {
    /// Monomial coefficients `c_0,…,c_M` of `Σ c_k x^k`.
    #[arg(long)]
    coeffs: String,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Binary digits of the sample points.
    #[arg(long, default_value_t = 12)]
    digits: usize,
    /// Number of seeded random sample points.
    #[arg(long, default_value_t = 100)]
    points: usize,
}

fn poly_ifs(a: &PolyIfsArgs, g: &Global) -> Outcome {
    if !(1..=52).contains(&a.digits) {
        return Err(invalid(format!(
            "--digits must lie in 1..=52, got {}",
            a.digits
        )));
    }
    let scaled = monomial_to_scaled(&parse_list("coeffs", &a.coeffs)?);
    let m = scaled.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut xs: Vec<f64> = (0..a.points)
        .map(|_| rng.random_range(0..1u64 << a.digits) as f64 / (1u64 << a.digits) as f64)
        .collect();
    xs.sort_by(f64::total_cmp);
    let mut t = table_with_header("poly_ifs", jet_header(m));
    let mut worst: f64 = 0.0;
    for &x in &xs {
        let got = poly_ifs_reconstruct(&scaled, 0.5, a.theta, a.digits, x)?;
        let want = jet_at(&scaled, x)?;
        for (u, v) in got.values().iter().zip(want.values()) {
            worst = worst.max((u - v).abs());
        }
        t.push(jet_row(x, &got, m));
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    out.residual("max_jet_error", worst);
    out.note("max_jet_error", worst);
    let p = json!({"coeffs": a.coeffs, "theta": a.theta, "digits": a.digits, "points": a.points});
    Ok((params(p), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoKind {
    /// Least-squares fit of (x(1−x))^0.2.
    L2,
    /// Discrete Poisson problem.
    Poisson,
}

#[derive(Debug, Args)]
pub struct CollageArgs {
    #[arg(long, value_enum, default_value_t = DemoKind::L2)]
    demo: DemoKind,
}

fn collage(a: &CollageArgs, g: &Global) -> Outcome {
    let (demo, name) = match a.demo {
        DemoKind::L2 => (l2_demo(g.grid.unwrap_or(256))?, "l2"),
        DemoKind::Poisson => (poisson_demo(g.grid.unwrap_or(16))?, "poisson"),
    };
    let (fit, report) = fit_report(&demo.family, &demo.form, &demo.target, g.tol, g.max_iter)?;
    let n = demo.target.len();
    let mut t = Table::new("collage_fit", &["x", "target", "fit"]).solved(g.tol, fit.iters);
    for k in 0..n {
        t.push([k as f64 / n as f64, demo.target[k], fit.u[k]]);
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    out.residual("collage", fit.residual);
    out.residual("membership", fit.membership);
    out.note("collage_error", report.collage_error);
    out.note("best_error", report.best_error);
    out.note("bound", report.bound);
    out.note("gamma", report.gamma);
    out.documents
        .push(("fit_report".into(), serde_json::to_value(&report)?));
    Ok((params(json!({"demo": name})), out))
}

#[derive(Debug, Args)]
pub struct SrgridArgs {
    /// Dyadic seed points in [0,1], comma separated.
    #[arg(long)]
    points: String,
    /// Monomial coefficients of a polynomial to evaluate on the grid.
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
}

fn srgrid(a: &SrgridArgs, _g: &Global) -> Outcome {
    let seeds = parse_list("points", &a.points)?
        .into_iter()
        .map(|x| DyadicPoint::from_value(x, 52))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = close_grid(&seeds);
    let mut t = Table::new("srgrid", &["digits", "value"]);
    for p in grid.points() {
        let digits = if p.is_one() {
            "(1)".to_string()
        } else {
            p.digits().iter().map(|d| char::from(b'0' + d)).collect()
        };
        t.push([Cell::Text(digits), Cell::Num(p.value())]);
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    out.note("size", grid.len());
    out.note("shift_invariant", grid.is_shift_invariant());
    out.note("self_referential", grid.is_self_referential());
    if let Some(c) = &a.coeffs {
        let scaled = monomial_to_scaled(&parse_list("coeffs", c)?);
        let m = scaled.len() - 1;
        let ev = DigitEvaluator::with_target(two_map_ifs(&scaled, a.theta)?, &scaled)?;
        let res = ev.evaluate_grid(&grid)?;
        let mut jt = table_with_header("srgrid_jets", jet_header(m));
        let mut worst: f64 = 0.0;
        for (p, j) in &res.jets {
            let want = jet_at(&scaled, p.value())?;
            for (u, v) in j.values().iter().zip(want.values()) {
                worst = worst.max((u - v).abs());
            }
            jt.push(jet_row(p.value(), j, m));
        }
        out.tables.push(jt);
        out.residual("max_jet_error", worst);
        out.note("ops", res.ops);
    }
    Ok((
        params(json!({"points": a.points, "coeffs": a.coeffs, "theta": a.theta})),
        out,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompatArg {
    /// `v_1(1, y) = v_2(0, y)` for all `y`.
    Uniform,
    /// Agreement at the join of the two end fixed points only.
    Endpoints,
}

#[derive(Debug, Args)]
pub struct SubdivideArgs {
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// Constant `λ_1,λ_2` (default: seeded random affine spec).
    #[arg(long)]
    lambda: Option<String>,
    /// Constant `S_1,S_2`; requires `--lambda`.
    #[arg(long)]
    s: Option<String>,
    /// Boundary check (default: uniform for the random spec, endpoints for
    /// constant data).
    #[arg(long, value_enum)]
    compat: Option<CompatArg>,
}

fn subdivide(a: &SubdivideArgs, g: &Global) -> Outcome {
    if a.levels > 20 {
        return Err(invalid(format!(
            "--levels must be at most 20, got {}",
            a.levels
        )));
    }
    let (spec, compat) = match (&a.lambda, &a.s) {
        (Some(l), Some(s)) => (
            RBSpec::constant(
                LocalIFS1D::binary(),
                &parse_pair("lambda", l)?,
                &parse_pair("s", s)?,
            )?,
            a.compat.unwrap_or(CompatArg::Endpoints),
        ),
        (None, None) => (
            random_compatible_spec(g.seed),
            a.compat.unwrap_or(CompatArg::Uniform),
        ),
        _ => return Err(invalid("--lambda and --s must be given together")),
    };
    let mode = match compat {
        CompatArg::Uniform => Compatibility::Uniform,
        CompatArg::Endpoints => Compatibility::Endpoints,
    };
    let levels = AffineRules::new(spec.clone(), mode)?.subdivide(a.levels)?;
    let mut t = Table::new("subdivide", &["level", "x", "value"]);
    for l in &levels {
        for (x, v) in l.mesh().into_iter().zip(l.values()) {
            t.push([l.k() as f64, x, *v]);
        }
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    let last = levels.last().expect("level 0 is always present");
    let n = last.values().len();
    let rb = assemble(&spec, &Grid::uniform(n))?;
    let rep = solve_fixed_point(&rb, &vec![0.0; n], &solve_opts(g))?;
    out.residual("rb_deviation", sup_distance(last.values(), &rep.values));
    out.note("rb_iterations", rep.iters);
    let diffs = cauchy_differences(&levels);
    out.note(
        "last_cauchy_difference",
        diffs.last().copied().unwrap_or(0.0),
    );
    out.documents
        .push(("spec".into(), serde_json::to_value(&spec)?));
    let compat = match compat {
        CompatArg::Uniform => "uniform",
        CompatArg::Endpoints => "endpoints",
    };
    Ok((
        params(json!({"levels": a.levels, "lambda": a.lambda, "s": a.s, "compat": compat})),
        out,
    ))
}

#[derive(Debug, Args)]
pub struct QttArgs {
    #[arg(long, default_value = "0.2,0.9")]
    lambda: String,
    #[arg(long, default_value = "-0.7,0.35")]
    s: String,
    /// Binary digits (default: log2 of --grid, or 10).
    #[arg(long)]
    digits: Option<usize>,
}

fn qtt(a: &QttArgs, g: &Global) -> Outcome {
    let [l1, l2] = parse_pair("lambda", &a.lambda)?;
    let [s1, s2] = parse_pair("s", &a.s)?;
    let d = match (a.digits, g.grid) {
        (Some(d), _) => d,
        (None, Some(n)) if n.is_power_of_two() => n.trailing_zeros() as usize,
        (None, Some(n)) => return Err(invalid(format!("--grid must be a power of two, got {n}"))),
        (None, None) => 10,
    };
    if d > 24 {
        return Err(invalid(format!("at most 24 digits are supported, got {d}")));
    }
    let core = build_qtt(l1, l2, s1, s2)?;
    let values = core.eval_all(d)?;
    let n = values.len();
    let mut t = Table::new("qtt", &["x", "value"]);
    for (k, v) in values.iter().enumerate() {
        t.push([k as f64 / n as f64, *v]);
    }
    let mut out = RunOutput::default();
    out.tables.push(t);
    if d <= 16 {
        let rb = assemble(&core.to_spec()?, &Grid::uniform(n))?;
        let rep = solve_fixed_point(&rb, &vec![0.0; n], &solve_opts(g))?;
        out.residual("rb_deviation", sup_distance(&values, &rep.values));
        out.note("rb_iterations", rep.iters);
    }
    out.note("rank", core.rank());
    out.documents
        .push(("qtt_cores".into(), serde_json::to_value(core)?));
    Ok((
        params(json!({"lambda": a.lambda, "s": a.s, "digits": d})),
        out,
    ))
}
