//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lifs::collage::{
    best_approximation, collage_fit, contraction_estimate, fit_report, gamma, knot_value_family,
    l2_demo, quasi_optimality_check, QuadraticForm,
};
use lifs::interp::{
    build_endpoint_interpolant, build_hermite_interpolant, estimate_order, maps_for_width,
    InterpolationProblem, Target,
};
use lifs::local_ifs::{
    directed_hausdorff, hausdorff_distance, iterate_attractor, verify_collage_bound, Affine2D,
    AttractorOptions, LocalIFS1D, LocalMap2D, PointSet2D, Rect,
};
use lifs::polyjet::{
    fractel_linear, hankel, hankel_pseudoinverse, jet_at, poly_ifs_reconstruct, taylor_translate,
    taylor_translate_hankel, toeplitz_v, triangular_eigenvalues,
};
use lifs::qtt::build_qtt;
use lifs::rb::{
    assemble, detect_local_refinement, solve_direct, solve_fixed_point, sup_distance, Grid, RBSpec,
    RbError, SampledFunction, SolveOptions,
};
use lifs::srgrid::{close_grid, DyadicPoint};
use lifs::subdiv::{random_compatible_spec, AffineRules, Compatibility};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:2} {verdict}: {name} ({detail})");
}

fn check(n: u32, name: &str, pass: bool, detail: String) {
    report(n, name, pass, &detail);
    assert!(pass, "criterion {n} failed: {detail}");
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn random_affine(rng: &mut ChaCha8Rng, scale: f64) -> SampledFunction {
    SampledFunction::Affine {
        alpha: scale * rng.random_range(-1.0..1.0),
        beta: scale * rng.random_range(-1.0..1.0),
    }
}

/// Paired-halving spec with affine `λ_i` and constant `|S_i| ≤ s_bound`.
fn random_affine_spec(rng: &mut ChaCha8Rng, n_maps: usize, s_bound: f64) -> RBSpec {
    let ifs = LocalIFS1D::paired_halving(n_maps).unwrap();
    let lambdas = (0..n_maps).map(|_| random_affine(rng, 1.0)).collect();
    let scalings = (0..n_maps)
        .map(|_| SampledFunction::Constant {
            c: s_bound * rng.random_range(-1.0..1.0),
        })
        .collect();
    RBSpec::new(ifs, lambdas, scalings).unwrap()
}

#[test]
fn c01_exact_restriction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n_g = if trial % 2 == 0 { 64 } else { 256 };
        let n_maps = [2, 4, 8][trial % 3];
        let spec = random_affine_spec(&mut rng, n_maps, 0.95);
        let grid = Grid::uniform(n_g);
        let rb = assemble(&spec, &grid).unwrap();
        let f: Vec<f64> = (0..n_g).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lookup = |y: f64| f[grid.index_of(y).expect("admissible grid")];
        let out = rb.apply(&f).unwrap();
        for (k, &x) in grid.points().iter().enumerate() {
            worst = worst.max((out[k] - spec.apply_pointwise(lookup, x)).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        1,
        "discrete operator equals pointwise evaluation",
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("max deviation {worst:.3e}, runtime {elapsed:.2?}"),
    );
}

#[test]
fn c02_piecewise_linear_reproduction() {
    let targets: Vec<(&str, Target)> = vec![
        ("(x(1-x))^0.2", Arc::new(|x: f64| (x * (1.0 - x)).powf(0.2))),
        ("exp(4x)", Arc::new(|x: f64| (4.0 * x).exp())),
        ("sin(7x)", Arc::new(|x: f64| (7.0 * x).sin())),
    ];
    let mut worst: f64 = 0.0;
    for (_, t) in &targets {
        for n in [2, 8, 16] {
            let p = InterpolationProblem::uniform(t.clone(), n, 0.5).unwrap();
            let spec = build_endpoint_interpolant(&p).unwrap();
            let n_g = 1024;
            let rb = assemble(&spec, &Grid::uniform(n_g)).unwrap();
            let opts = SolveOptions {
                tol: 1e-14,
                ..Default::default()
            };
            let f = solve_fixed_point(&rb, &vec![0.0; n_g], &opts)
                .unwrap()
                .values;
            let knots = p.knots();
            for (k, &x) in Grid::uniform(n_g).points().iter().enumerate() {
                let j = knots
                    .partition_point(|&a| a <= x)
                    .min(knots.len() - 1)
                    .max(1);
                let (a, b) = (knots[j - 1], knots[j]);
                let pl = t(a) + (t(b) - t(a)) * (x - a) / (b - a);
                worst = worst.max((f[k] - pl).abs());
            }
        }
    }
    check(
        2,
        "S = 1/2 gives the piecewise linear interpolant",
        worst <= 1e-10,
        format!("max error {worst:.3e}"),
    );
}

#[test]
fn c03_finite_termination_from_zero() {
    let target: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        Arc::new(|x: f64| (x * (1.0 - x)).powf(0.2));
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let s_odd: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..0.95)).collect();
    let p = InterpolationProblem::continuous(target, 8, s_odd).unwrap();
    let spec = build_endpoint_interpolant(&p).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for n_g in [64usize, 256, 1024, 4096] {
        let rb = assemble(&spec, &Grid::uniform(n_g)).unwrap();
        let limit = (n_g as f64).log2() as usize + 4;
        let opts = SolveOptions {
            tol: 1e-12,
            max_iter: 10_000,
            ..Default::default()
        };
        let iters = solve_fixed_point(&rb, &vec![0.0; n_g], &opts)
            .unwrap()
            .iters;
        pass &= iters <= limit;
        lines.push(format!("N_g={n_g}: {iters} iterations (limit {limit})"));
    }
    check(
        3,
        "iteration from zero terminates in log2(N_g)+4 steps",
        pass,
        lines.join(", "),
    );
}

#[test]
fn c04_hermite_third_order() {
    let start = Instant::now();
    let f = |x: f64| (4.0 * x).exp();
    let df = |x: f64| 4.0 * (4.0 * x).exp();
    let builder = |h: f64| build_hermite_interpolant(&f, &df, maps_for_width(h));
    let fit = estimate_order(&builder, &f, &[0.25, 0.125, 0.0625, 0.03125]).unwrap();
    let elapsed = start.elapsed();
    check(
        4,
        "Hermite interpolant converges with third order",
        (2.7..=3.3).contains(&fit.order) && elapsed < Duration::from_secs(10),
        format!(
            "order {:.3}, errors {:?}, runtime {elapsed:.2?}",
            fit.order, fit.errors
        ),
    );
}

#[test]
fn c05_contraction_gate_and_banach_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut rejected = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..20 {
        let n_g = 128;
        let grid = Grid::uniform(n_g);
        // violating: one scaling at or above 1 in modulus
        let mut spec = random_affine_spec(&mut rng, 4, 0.9);
        let mut sc = spec.scalings().to_vec();
        sc[trial % 4] = SampledFunction::Constant {
            c: if trial % 2 == 0 { 1.0 } else { -1.3 },
        };
        let bad = RBSpec::new(spec.ifs().clone(), spec.lambdas().to_vec(), sc).unwrap();
        let rb = assemble(&bad, &grid).unwrap();
        if matches!(
            solve_fixed_point(&rb, &vec![0.0; n_g], &SolveOptions::default()),
            Err(RbError::NotContractive(_))
        ) {
            rejected += 1;
        }
        // satisfying
        spec = random_affine_spec(&mut rng, 4, 0.95);
        let rb = assemble(&spec, &grid).unwrap();
        let s = rb.spec_contraction();
        let fstar = solve_direct(&rb).unwrap();
        let f0: Vec<f64> = (0..n_g).map(|_| rng.random_range(-3.0..3.0)).collect();
        let d0 = sup_distance(&f0, &fstar);
        for (k, fk) in rb.iterates(&f0).take(60).enumerate() {
            let bound = s.powi(k as i32 + 1) * d0 + 1e-12;
            worst_excess = worst_excess.max(sup_distance(&fk, &fstar) - bound);
        }
        let opts = SolveOptions {
            tol: 1e-12,
            ..Default::default()
        };
        assert!(solve_fixed_point(&rb, &f0, &opts).is_ok());
    }
    check(
        5,
        "contractivity gate and Banach error bound",
        rejected == 20 && worst_excess <= 0.0,
        format!("{rejected}/20 violators rejected, max excess over bound {worst_excess:.3e}"),
    );
}

#[test]
fn c06_lambda_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n_maps = 8;
        let spec = random_affine_spec(&mut rng, n_maps, 0.9);
        let mu: Vec<SampledFunction> = (0..n_maps).map(|_| random_affine(&mut rng, 1.0)).collect();
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let combo: Vec<SampledFunction> = spec
            .lambdas()
            .iter()
            .zip(&mu)
            .map(|(l, m)| SampledFunction::linear_combination(a, l, b, m).unwrap())
            .collect();
        let grid = Grid::uniform(256);
        let solve = |lams: Vec<SampledFunction>| {
            solve_direct(&assemble(&spec.with_lambdas(lams).unwrap(), &grid).unwrap()).unwrap()
        };
        let f_l = solve(spec.lambdas().to_vec());
        let f_m = solve(mu);
        let f_c = solve(combo);
        let diff: Vec<f64> = (0..256).map(|k| f_c[k] - a * f_l[k] - b * f_m[k]).collect();
        worst = worst.max(sup(&diff));
    }
    check(
        6,
        "fixed point is linear in lambda",
        worst <= 1e-9,
        format!("max deviation {worst:.3e}"),
    );
}

#[test]
fn c07_graph_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let spec = random_affine_spec(&mut rng, 8, 0.9);
        let grid = Grid::uniform(512);
        let f = solve_direct(&assemble(&spec, &grid).unwrap()).unwrap();
        let at = |y: f64| f[grid.index_of(y).unwrap()];
        for (i, map) in spec.ifs().maps().iter().enumerate() {
            for k in grid.range_in_cell(spec.ifs(), i) {
                let y = grid.points()[k];
                let x = map.apply_inverse(y);
                let rhs = spec.lambdas()[i].eval(x) + spec.scalings()[i].eval(x) * at(x);
                worst = worst.max((at(map.apply(x)) - rhs).abs());
            }
        }
    }
    check(
        7,
        "graph of the fixed point is invariant",
        worst <= 1e-10,
        format!("max defect {worst:.3e}"),
    );
}

fn example_maps(local: bool) -> Vec<LocalMap2D> {
    let (x1, x2) = (0.8, 0.4);
    let dom = |r: Rect| if local { r } else { Rect::unit() };
    vec![
        LocalMap2D::new(
            dom(Rect::new(0.0, x1, 0.0, x1)),
            Affine2D::scaling(0.5, (0.0, 0.0)),
        ),
        LocalMap2D::new(
            dom(Rect::new(x2, 1.0, x2, 1.0)),
            Affine2D::scaling(0.5, (x2, x2)),
        ),
    ]
}

#[test]
fn c08_two_map_attractors() {
    let opts = AttractorOptions::default();
    let tol = 2.0 * opts.pitch;
    let local = iterate_attractor(&example_maps(true), &Rect::unit(), &opts);
    let global = iterate_attractor(&example_maps(false), &Rect::unit(), &opts);
    let two_points = PointSet2D::new(vec![(0.0, 0.0), (0.4, 0.4)]);
    let segment = PointSet2D::new(
        (0..=4000)
            .map(|k| (k as f64 * 1e-4, k as f64 * 1e-4))
            .collect(),
    );
    let d_local = hausdorff_distance(&local.set, &two_points).unwrap();
    let d_global = hausdorff_distance(&global.set, &segment).unwrap();
    let d_incl = directed_hausdorff(&local.set, &global.set).unwrap();
    check(
        8,
        "local attractor is two points, global is the segment, local within global",
        d_local <= tol && d_global <= tol && d_incl <= tol,
        format!(
            "d_H(local, two points) = {d_local:.3e}, d_H(global, segment) = {d_global:.3e}, \
             inclusion defect {d_incl:.3e}, tolerance {tol:.1e}, {} local points",
            local.set.len()
        ),
    );
}

#[test]
fn c09_collage_theorem_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut holds = 0;
    let mut details = Vec::new();
    for _ in 0..10 {
        let maps: Vec<Affine2D> = (0..3)
            .map(|_| {
                let m = [
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                ];
                let raw = Affine2D::new(m, [0.0, 0.0]);
                let k = 0.5 * rng.random_range(0.3..1.0) / raw.lipschitz();
                Affine2D::new(
                    [[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]],
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                )
            })
            .collect();
        let m = PointSet2D::new(
            (0..30)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let r = verify_collage_bound(&m, &maps, 0.5, 14, 1.0 / 512.0).unwrap();
        if r.holds {
            holds += 1;
        }
        details.push(format!("{:.3}<={:.3}", r.actual, r.bound + r.tolerance));
    }
    check(
        9,
        "collage theorem bound",
        holds == 10,
        format!("{holds}/10 hold: {}", details.join(" ")),
    );
}

#[test]
fn c10_jet_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.random_range(1..=6);
        let mut coeffs: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
        coeffs[m] = if coeffs[m] >= 0.0 {
            coeffs[m] + 0.5
        } else {
            coeffs[m] - 0.5
        };
        let (x, t, s) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let vt = toeplitz_v(t, m);
        worst = worst.max((&vt * toeplitz_v(s, m) - toeplitz_v(t + s, m)).amax());
        let j = jet_at(&coeffs, x).unwrap();
        let via_v = taylor_translate(&j, t).to_dvector();
        let via_a = taylor_translate_hankel(&j, t).to_dvector();
        let direct = jet_at(&coeffs, x + t).unwrap().to_dvector();
        worst = worst
            .max((&via_v - &via_a).amax())
            .max((&via_v - &direct).amax());
        let a = hankel(&j);
        let ap = hankel_pseudoinverse(&a).unwrap();
        worst = worst
            .max((&a * &ap * &a - &a).amax())
            .max((&ap * &a * &ap - &ap).amax())
            .max(((&a * &ap).transpose() - &a * &ap).amax())
            .max(((&ap * &a).transpose() - &ap * &a).amax());
        let sd = rng.random_range(0.1..0.9);
        let eig = triangular_eigenvalues(&fractel_linear(&j, sd).unwrap());
        let mut want: Vec<f64> = (0..=m).map(|k| sd.powi(k as i32)).collect();
        want.sort_by(f64::total_cmp);
        for (e, w) in eig.iter().zip(&want) {
            worst = worst.max((e - w).abs());
        }
    }
    check(
        10,
        "jet algebra identities",
        worst <= 1e-9,
        format!("max defect {worst:.3e}"),
    );
}

#[test]
fn c11_polynomial_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=5);
        let mut coeffs: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
        coeffs[m] = if coeffs[m] >= 0.0 {
            coeffs[m] + 0.5
        } else {
            coeffs[m] - 0.5
        };
        let x = rng.random_range(0..4096u32) as f64 / 4096.0;
        let got = poly_ifs_reconstruct(&coeffs, 0.5, 0.5, 12, x).unwrap();
        let want = jet_at(&coeffs, x).unwrap();
        for (g, w) in got.values().iter().zip(want.values()) {
            worst = worst.max((g - w).abs());
        }
    }
    check(
        11,
        "two-map polynomial IFS reproduces jets",
        worst <= 1e-8,
        format!("max error {worst:.3e}"),
    );
}

#[test]
fn c12_collage_fitting() {
    // (a) recovery of a member of the family
    let n_g = 256;
    let weights = DVector::from_element(n_g, 1.0 / n_g as f64);
    let family = knot_value_family(
        8,
        &[0.4, 0.3, 0.5, 0.35],
        &[0.6, 0.55, 0.45, 0.5],
        n_g,
        &weights,
    )
    .unwrap();
    let alpha0 = DVector::from_column_slice(&[0.3, -0.8, 1.2, 0.1, -0.4]);
    let target = family.fractal_function(&alpha0).unwrap();
    let form = QuadraticForm::l2_fit(target.as_slice(), weights.clone()).unwrap();
    let fit = collage_fit(&family, &form, 1e-13, 2000).unwrap();
    let param_err = (&fit.alpha - &alpha0).amax();

    // (b) contraction over random pairs, for the mass form and a random SPD form
    let measured_l2 = contraction_estimate(&family, &form, 20, 12).unwrap();
    let g_l2 = gamma(&family, &form);
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let r = DMatrix::from_fn(n_g, n_g, |_, _| rng.random_range(-0.02..0.02));
    let spd = DMatrix::from_diagonal(&weights) * 2.0 + &r * r.transpose() * (1.0 / n_g as f64);
    let rform = QuadraticForm::new(spd, DVector::from_element(n_g, 1.0), weights.clone()).unwrap();
    let small = knot_value_family(8, &[0.1; 4], &[0.15; 4], n_g, &weights).unwrap();
    let measured_spd = contraction_estimate(&small, &rform, 20, 13).unwrap();
    let g_spd = gamma(&small, &rform);

    // (c) quasi-optimality on (x(1-x))^0.2
    let demo = l2_demo(n_g).unwrap();
    let (_, rep) = fit_report(&demo.family, &demo.form, &demo.target, 1e-12, 2000).unwrap();
    let (_, best) = best_approximation(&demo.family, &demo.target, demo.form.weights()).unwrap();
    let (bound, holds) = quasi_optimality_check(&demo.family, &demo.form, best, rep.collage_error);

    check(
        12,
        "collage fitting recovers, contracts and is quasi-optimal",
        param_err <= 1e-7 && measured_l2 <= g_l2 + 1e-9 && measured_spd <= g_spd + 1e-9 && holds,
        format!(
            "parameter error {param_err:.2e}; ratio {measured_l2:.4} <= gamma {g_l2:.4}, \
             ratio {measured_spd:.4} <= gamma {g_spd:.4}; collage error {:.4e} <= bound {bound:.4e} \
             (best {best:.4e})",
            rep.collage_error
        ),
    );
}

#[test]
fn c13_self_referential_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(1313);
    let mut ok = 0;
    for _ in 0..50 {
        let size = rng.random_range(1..8);
        let seeds: Vec<DyadicPoint> = (0..size)
            .map(|_| {
                let j = rng.random_range(1..=16u32);
                DyadicPoint::from_ratio(rng.random_range(0..=(1u64 << j)), j).unwrap()
            })
            .collect();
        let g = close_grid(&seeds);
        if g.is_shift_invariant() && g.is_self_referential() && seeds.iter().all(|p| g.contains(p))
        {
            ok += 1;
        }
    }
    check(
        13,
        "closed grids are shift-invariant and self-referential",
        ok == 50,
        format!("{ok}/50"),
    );
}

#[test]
fn c14_subdivision_matches_fixed_point() {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let rules =
            AffineRules::new(random_compatible_spec(1400 + seed), Compatibility::Uniform).unwrap();
        let last = rules.subdivide(12).unwrap().pop().unwrap();
        let rb = assemble(rules.spec(), &Grid::uniform(4096)).unwrap();
        let opts = SolveOptions {
            tol: 1e-14,
            max_iter: 100_000,
            ..Default::default()
        };
        let fp = solve_fixed_point(&rb, &vec![0.0; 4096], &opts).unwrap();
        worst = worst.max(sup_distance(last.values(), &fp.values));
    }
    check(
        14,
        "12-level subdivision equals the fixed point",
        worst <= 1e-8,
        format!("max deviation {worst:.3e}"),
    );
}

#[test]
fn c15_qtt_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1515);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (l1, l2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (s1, s2) = (rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9));
        let core = build_qtt(l1, l2, s1, s2).unwrap();
        let q = core.eval_all(12).unwrap();
        let rb = assemble(&core.to_spec().unwrap(), &Grid::uniform(4096)).unwrap();
        let opts = SolveOptions {
            tol: 1e-13,
            max_iter: 100_000,
            ..Default::default()
        };
        let fp = solve_fixed_point(&rb, &vec![0.0; 4096], &opts).unwrap();
        worst = worst.max(sup_distance(&q, &fp.values));
    }
    let elapsed = start.elapsed();
    check(
        15,
        "rank-2 matrix products equal the fixed point",
        worst <= 1e-10 && elapsed < Duration::from_secs(2),
        format!("max deviation {worst:.3e}, runtime {elapsed:.2?}"),
    );
}

#[test]
fn c16_block_convergence_rate() {
    // per-block worst-case error growth ‖M_j^k‖₂ against (S²_{2j−1} + S²_{2j})^{k/2}
    let n = 8;
    let n_g = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(1616);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scalings: Vec<f64> = (0..n).map(|_| rng.random_range(-0.95..0.95)).collect();
    let spec =
        RBSpec::constant(LocalIFS1D::paired_halving(n).unwrap(), &lambdas, &scalings).unwrap();
    let rb = assemble(&spec, &Grid::uniform(n_g)).unwrap();
    let blocks = detect_local_refinement(&rb).expect("paired layout is block diagonal");
    let dense = rb.to_dense();
    let mut worst_rel: f64 = 0.0;
    let mut lines = Vec::new();
    for (maps, idx) in blocks.maps.iter().zip(&blocks.indices) {
        let mj = DMatrix::from_fn(idx.len(), idx.len(), |r, c| dense[(idx[r], idx[c])]);
        let k_max = (idx.len() as f64).log2() as usize;
        let mut p = DMatrix::identity(idx.len(), idx.len());
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 1..=k_max {
            p = &mj * p;
            let norm = p.clone().svd(false, false).singular_values.max();
            xs.push(k as f64);
            ys.push(norm.ln());
        }
        let nk = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / nk, ys.iter().sum::<f64>() / nk);
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let base = slope.exp();
        let (s1, s2) = (scalings[maps[0]], scalings[maps[1]]);
        let expected = (s1 * s1 + s2 * s2).sqrt();
        let rel = (base - expected).abs() / expected;
        worst_rel = worst_rel.max(rel);
        lines.push(format!("maps {maps:?}: base {base:.4} vs {expected:.4}"));
    }
    check(
        16,
        "per-block decay base matches sqrt(S1^2 + S2^2)",
        blocks.maps.len() == n / 2 && worst_rel <= 0.15,
        format!(
            "max relative deviation {worst_rel:.3e}; {}",
            lines.join(", ")
        ),
    );
}
